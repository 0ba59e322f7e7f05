#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arpps/error.hpp"
#include "arpps/match_bench.hpp"
#include "arpps/rng.hpp"
#include "arpps/tcnn.hpp"

using namespace arpps;
using namespace arpps::tcnn;

namespace {

MatchProblem random_problem(int m, int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd c(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = rng.uniform(0.0, 1.0);
  return MatchProblem::from_compatibility(c);
}

std::vector<std::uint8_t> bits(int size, std::uint64_t mask) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(size));
  for (int a = 0; a < size; ++a) v[static_cast<std::size_t>(a)] = (mask >> a) & 1u;
  return v;
}

// Reference energy written directly from the assignment-penalty definition.
double reference_energy(const Eigen::MatrixXd& c, const Coefficients& k, const std::vector<std::uint8_t>& v) {
  const int m = static_cast<int>(c.rows());
  const int n = static_cast<int>(c.cols());
  double e = 0.0;
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += v[static_cast<std::size_t>(i * n + j)];
    e += m <= n ? k.a_row / 2 * (s - 1) * (s - 1) : k.a_row / 2 * s * (s - 1);
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += v[static_cast<std::size_t>(i * n + j)];
    e += n <= m ? k.a_col / 2 * (s - 1) * (s - 1) : k.a_col / 2 * s * (s - 1);
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) e -= k.b_data * c(i, j) * v[static_cast<std::size_t>(i * n + j)];
  return e;
}

Eigen::VectorXd as_vector(const std::vector<std::uint8_t>& v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t a = 0; a < v.size(); ++a) x(static_cast<Eigen::Index>(a)) = v[a];
  return x;
}

}  // namespace

TEST_CASE("self-feedback decays geometrically") {
  TcnnParams p;
  const auto w = build_matching_network(random_problem(2, 2, 1), {});
  TcnnState s = initial_state(w, p, 3);
  CHECK(s.z == 0.08);
  s = tcnn_step(s, w, p);
  CHECK(std::abs(s.z - 0.0788) <= 1e-15);
  for (int t = 2; t <= 1000; ++t) {
    s = tcnn_step(s, w, p);
    REQUIRE(s.t == static_cast<std::uint64_t>(t));
    const double expected = 0.08 * std::pow(1.0 - 0.015, t);
    CHECK(std::abs(s.z - expected) <= 1e-12);
    for (Eigen::Index a = 0; a < s.x.size(); ++a) {
      CHECK(s.x(a) > 0.0);
      CHECK(s.x(a) < 1.0);
    }
  }
}

TEST_CASE("activation") {
  TcnnParams p;
  CHECK(activate(0.0, p) == 0.5);
  CHECK(activate(0.01, p) == doctest::Approx(1.0 / (1.0 + std::exp(-2.5))));
  CHECK(activate(1e6, p) < 1.0);
  CHECK(activate(-1e6, p) > 0.0);
  CHECK(activate(-0.01, p) == doctest::Approx(1.0 - activate(0.01, p)));
  p.activation = Activation::AsPrinted;
  CHECK(activate(1.0, p) == doctest::Approx(1.0 / (1.0 + std::exp(-(1.0 + p.epsilon)))));
}

TEST_CASE("parameter validation") {
  TcnnParams p;
  CHECK_NOTHROW(p.validate());
  auto bad = [](auto mutate) {
    TcnnParams q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), Error);
  };
  bad([](TcnnParams& q) { q.k = 1.1; });
  bad([](TcnnParams& q) { q.alpha = 0.0; });
  bad([](TcnnParams& q) { q.beta = 1.0; });
  bad([](TcnnParams& q) { q.beta = 0.0; });
  bad([](TcnnParams& q) { q.i0 = 0.0; });
  bad([](TcnnParams& q) { q.epsilon = 0.0; });
  bad([](TcnnParams& q) { q.z0 = -0.1; });
  bad([](TcnnParams& q) { q.max_steps = 0; });
}

TEST_CASE("weights are symmetric with zero diagonal") {
  for (auto [m, n] : {std::pair{1, 1}, {3, 3}, {2, 5}, {5, 2}, {4, 4}}) {
    const auto w = build_matching_network(random_problem(m, n, 9), {1.3, 0.7, 0.5});
    REQUIRE(w.size() == m * n);
    CHECK((w.w - w.w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.w.diagonal().cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (int i2 = 0; i2 < m; ++i2)
          for (int j2 = 0; j2 < n; ++j2) {
            const double expected = (i == i2 && j == j2) ? 0.0
                                    : i == i2            ? -1.3
                                    : j == j2            ? -0.7
                                                         : 0.0;
            CHECK(w.w(i * n + j, i2 * n + j2) == expected);
          }
  }
  CHECK_THROWS_AS(build_matching_network(random_problem(2, 2, 1), {0.0, 1.0, 1.0}), Error);
}

TEST_CASE("single neuron bias") {
  Eigen::MatrixXd c(1, 1);
  c << 0.6;
  const Coefficients k{1.0, 2.0, 0.5};
  const auto w = build_matching_network(MatchProblem::from_compatibility(c), k);
  CHECK(w.bias(0) == doctest::Approx((1.0 + 2.0) / 2 + 0.5 * 0.6).epsilon(1e-15));
  CHECK(w.w(0, 0) == 0.0);
}

TEST_CASE("identity is the unique minimum of a dominant 3x3 problem") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 0.1);
  c.diagonal().setConstant(0.9);
  const auto prob = MatchProblem::from_compatibility(c);
  const Coefficients k;
  const std::uint64_t identity = (1u << 0) | (1u << 4) | (1u << 8);
  const double e_id = matching_energy(prob, k, bits(9, identity));
  for (std::uint64_t mask = 0; mask < 512; ++mask) {
    if (mask == identity) continue;
    CHECK(matching_energy(prob, k, bits(9, mask)) > e_id);
  }
}

TEST_CASE("hopfield energy plus offset equals the matching energy on binaries") {
  for (auto [m, n] : {std::pair{2, 2}, {3, 3}, {2, 4}, {4, 2}, {1, 5}, {3, 4}}) {
    const auto prob = random_problem(m, n, static_cast<std::uint64_t>(m * 10 + n));
    const Coefficients k{1.2, 0.8, 0.6};
    const auto w = build_matching_network(prob, k);
    const double offset = energy_offset(prob, k);
    for (std::uint64_t mask = 0; mask < (1u << (m * n)); ++mask) {
      const auto v = bits(m * n, mask);
      const double ref = reference_energy(prob.compatibility, k, v);
      CHECK(matching_energy(prob, k, v) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(hopfield_energy(w, as_vector(v)) + offset == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("one step matches hand substitution") {
  Eigen::MatrixXd c(1, 2);
  c << 0.3, 0.7;
  const auto prob = MatchProblem::from_compatibility(c);
  const Coefficients k;
  const auto w = build_matching_network(prob, k);
  TcnnParams p;
  p.k = 1.0;
  p.z0 = 0.0;
  TcnnState s;
  s.y = Eigen::Vector2d(0.01, -0.02);
  s.x = Eigen::Vector2d(0.4, 0.6);
  s.z = 0.0;
  const TcnnState n1 = tcnn_step(s, w, p);
  // 1x2 grid: rows exact (bias a_r/2 + b c), columns relaxed; coupling -a_row.
  const double i0 = 0.5 + 0.5 * 0.3;
  const double i1 = 0.5 + 0.5 * 0.7;
  const double y0 = 0.01 + 0.015 * (-1.0 * 0.6 + i0);
  const double y1 = -0.02 + 0.015 * (-1.0 * 0.4 + i1);
  CHECK(n1.y(0) == doctest::Approx(y0).epsilon(1e-14));
  CHECK(n1.y(1) == doctest::Approx(y1).epsilon(1e-14));
  CHECK(n1.x(0) == doctest::Approx(1.0 / (1.0 + std::exp(-y0 * 250.0))).epsilon(1e-14));

  s.z = 0.05;
  const TcnnState n2 = tcnn_step(s, w, p);
  CHECK(n2.y(0) == doctest::Approx(y0 - 0.05 * (0.4 - 0.65)).epsilon(1e-14));
  CHECK(n2.z == doctest::Approx(0.05 * 0.985).epsilon(1e-15));
}

TEST_CASE("run_matching on small problems") {
  const TcnnParams p;
  const Coefficients k;

  Eigen::MatrixXd one(1, 1);
  one << 0.9;
  const auto r1 = run_matching(MatchProblem::from_compatibility(one), p, k, 1);
  CHECK(r1.converged);
  CHECK(r1.at(0, 0) == 1);

  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 0.05);
  c.diagonal().setConstant(0.95);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_matching(MatchProblem::from_compatibility(c), p, k, seed);
    CHECK(r.converged);
    CHECK(r.assignment() == std::vector<int>{0, 1, 2});
  }

  Eigen::MatrixXd wide(2, 3);
  wide << 0.95, 0.05, 0.05,  //
      0.05, 0.05, 0.95;
  const auto rw = run_matching(MatchProblem::from_compatibility(wide), p, k, 2);
  CHECK(rw.converged);
  CHECK(rw.one_to_one());
  CHECK(rw.assignment() == std::vector<int>{0, 2});
  CHECK(rw.at(0, 1) + rw.at(1, 1) == 0);
}

TEST_CASE("oracle modes") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(2, 2, 0.1);
  c.diagonal().setConstant(0.9);
  const auto prob = MatchProblem::from_compatibility(c);
  for (auto mode : {OracleMode::Auto, OracleMode::Exhaustive, OracleMode::OneToOne}) {
    CHECK(brute_force_match(prob, {}, mode).assignment() == std::vector<int>{0, 1});
  }
  CHECK(resolve_oracle(4, 4, OracleMode::Auto) == OracleMode::Exhaustive);
  CHECK(resolve_oracle(5, 5, OracleMode::Auto) == OracleMode::OneToOne);
  CHECK(resolve_oracle(5, 5, OracleMode::Exhaustive) == OracleMode::Exhaustive);
  CHECK_THROWS_AS(resolve_oracle(2, 13, OracleMode::Exhaustive), Error);
  CHECK_THROWS_AS(resolve_oracle(13, 2, OracleMode::OneToOne), Error);
}

TEST_CASE("exhaustive and one-to-one oracles agree") {
  const Coefficients k{1.0, 1.0, 0.5};
  for (auto [m, n] : {std::pair{5, 5}, {3, 5}, {5, 3}, {4, 6}, {1, 4}, {2, 2}}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto prob = random_problem(m, n, seed * 100 + static_cast<std::uint64_t>(m * n));
      const auto ex = brute_force_match(prob, k, OracleMode::Exhaustive);
      const auto dp = brute_force_match(prob, k, OracleMode::OneToOne);
      CHECK(ex.one_to_one());
      CHECK(matching_energy(prob, k, ex.v) == doctest::Approx(matching_energy(prob, k, dp.v)).epsilon(1e-12));
      CHECK(ex.same_assignment(dp));
    }
  }
}

TEST_CASE("exhaustive oracle beats every feasible matrix") {
  const auto prob = random_problem(3, 3, 77);
  const Coefficients k;
  const auto best = brute_force_match(prob, k, OracleMode::Exhaustive);
  const double e_best = matching_energy(prob, k, best.v);
  for (std::uint64_t mask = 0; mask < 512; ++mask) {
    MatchMatrix mm{3, 3, bits(9, mask)};
    if (!mm.one_to_one()) continue;
    CHECK(matching_energy(prob, k, mm.v) >= e_best - 1e-12);
  }
}

TEST_CASE("nearest neighbour baseline") {
  Eigen::MatrixXd ref(3, 2);
  ref << 0, 0, 5, 0, 0, 5;
  const auto prob = MatchProblem::from_descriptors(ref, ref, 1.0);
  CHECK(nn_baseline_match(prob, 0.8).assignment() == std::vector<int>{0, 1, 2});

  Eigen::MatrixXd scene(1, 2);
  scene << 4.9, 0.1;
  const auto single = MatchProblem::from_descriptors(ref, scene, 1.0);
  CHECK(nn_baseline_match(single, 0.8).assignment() == std::vector<int>{-1, 0, -1});

  CHECK(prob.compatibility(0, 1) == doctest::Approx(std::exp(-25.0 / 2.0)));
}

TEST_CASE("separable instances respect the margin") {
  InstanceSpec spec;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto prob = make_separable_instance(spec, seed);
    CHECK(prob.rows() == 5);
    CHECK(prob.cols() == 5);
    CHECK(dominant_margin(prob) >= 0.5);
  }
}

TEST_CASE("benchmark is deterministic and reports sizes") {
  BenchConfig cfg;
  cfg.instances = 5;
  cfg.seed = 11;
  const auto a = run_match_bench(cfg);
  const auto b = run_match_bench(cfg);
  CHECK(to_json(a) == to_json(b));
  CHECK(a.results.size() == 5);
  CHECK(a.oracle_used == OracleMode::OneToOne);
  CHECK(a.converged_one_to_one() <= a.converged());

  cfg.instance.m = 6;
  cfg.instance.n = 6;
  cfg.oracle = OracleMode::Exhaustive;
  CHECK_THROWS_AS(run_match_bench(cfg), Error);
}
