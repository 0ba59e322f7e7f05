#include "arpps/tcnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "arpps/error.hpp"
#include "arpps/rng.hpp"

namespace arpps::tcnn {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void TcnnParams::validate() const {
  require(finite(k) && k >= 0.0 && k <= 1.0, "tcnn: k must lie in [0, 1]");
  require(finite(alpha) && alpha > 0.0, "tcnn: alpha must be > 0");
  require(finite(beta) && beta > 0.0 && beta < 1.0, "tcnn: beta must lie in (0, 1)");
  require(finite(i0) && i0 > 0.0, "tcnn: i0 must be > 0");
  require(finite(epsilon) && epsilon > 0.0, "tcnn: epsilon must be > 0");
  require(finite(z0) && z0 >= 0.0, "tcnn: z0 must be >= 0");
  require(max_steps > 0, "tcnn: max_steps must be > 0");
  require(finite(binarize_threshold) && binarize_threshold > 0.0 && binarize_threshold < 1.0,
          "tcnn: binarize_threshold must lie in (0, 1)");
  require(stable_steps > 0, "tcnn: stable_steps must be > 0");
  require(finite(init_perturbation) && init_perturbation >= 0.0,
          "tcnn: init_perturbation must be >= 0");
}

MatchProblem MatchProblem::from_descriptors(Eigen::MatrixXd reference, Eigen::MatrixXd scene,
                                            double sigma) {
  require(reference.rows() >= 1 && scene.rows() >= 1, "match problem: M and N must be >= 1");
  require(reference.cols() == scene.cols(), "match problem: descriptor dimensions differ");
  require(finite(sigma) && sigma > 0.0, "match problem: sigma must be > 0");
  MatchProblem p;
  p.compatibility.resize(reference.rows(), scene.rows());
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    for (Eigen::Index j = 0; j < scene.rows(); ++j) {
      const double d2 = (reference.row(i) - scene.row(j)).squaredNorm();
      p.compatibility(i, j) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  p.reference = std::move(reference);
  p.scene = std::move(scene);
  return p;
}

MatchProblem MatchProblem::from_compatibility(Eigen::MatrixXd compatibility) {
  require(compatibility.rows() >= 1 && compatibility.cols() >= 1,
          "match problem: M and N must be >= 1");
  for (Eigen::Index i = 0; i < compatibility.size(); ++i) {
    const double c = compatibility.data()[i];
    require(finite(c) && c >= 0.0 && c <= 1.0, "match problem: compatibility outside [0, 1]");
  }
  MatchProblem p;
  p.compatibility = std::move(compatibility);
  return p;
}

bool MatchMatrix::one_to_one() const {
  for (int i = 0; i < rows; ++i) {
    int s = 0;
    for (int j = 0; j < cols; ++j) s += at(i, j);
    if (s > 1) return false;
  }
  for (int j = 0; j < cols; ++j) {
    int s = 0;
    for (int i = 0; i < rows; ++i) s += at(i, j);
    if (s > 1) return false;
  }
  return true;
}

std::vector<int> MatchMatrix::assignment() const {
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (at(i, j)) {
        out[static_cast<std::size_t>(i)] = j;
        break;
      }
    }
  }
  return out;
}

double activate(double y, const TcnnParams& params) {
  const double s =
      params.activation == Activation::Canonical ? y / params.epsilon : y * (1.0 + params.epsilon);
  double x;
  if (s >= 0.0) {
    x = 1.0 / (1.0 + std::exp(-s));
  } else {
    const double e = std::exp(s);
    x = e / (1.0 + e);
  }
  // The logistic function never reaches 0 or 1; keep its double image open.
  constexpr double kLow = std::numeric_limits<double>::min();
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  return std::clamp(x, kLow, kHigh);
}

HopfieldWeights build_matching_network(const MatchProblem& problem, const Coefficients& coeff) {
  require(finite(coeff.a_row) && coeff.a_row > 0.0, "coefficients: a_row must be > 0");
  require(finite(coeff.a_col) && coeff.a_col > 0.0, "coefficients: a_col must be > 0");
  require(finite(coeff.b_data) && coeff.b_data > 0.0, "coefficients: b_data must be > 0");
  const int m = problem.rows();
  const int n = problem.cols();
  require(m >= 1 && n >= 1, "match problem: M and N must be >= 1");

  HopfieldWeights hw;
  hw.rows = m;
  hw.cols = n;
  const int size = m * n;
  hw.w = Eigen::MatrixXd::Zero(size, size);
  hw.bias.resize(size);
  // Expanding E over binary v (v^2 = v) gives pairwise terms -a within a
  // row or column, and a linear term -a/2 per neuron from each exact axis.
  const double base = (rows_exact(m, n) ? 0.5 * coeff.a_row : 0.0) +
                      (cols_exact(m, n) ? 0.5 * coeff.a_col : 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const int a = i * n + j;
      hw.bias(a) = base + coeff.b_data * problem.compatibility(i, j);
      for (int jj = 0; jj < n; ++jj) {
        if (jj != j) hw.w(a, i * n + jj) = -coeff.a_row;
      }
      for (int ii = 0; ii < m; ++ii) {
        if (ii != i) hw.w(a, ii * n + j) = -coeff.a_col;
      }
    }
  }
  return hw;
}

double matching_energy(const MatchProblem& problem, const Coefficients& coeff,
                       const std::vector<std::uint8_t>& v) {
  const int m = problem.rows();
  const int n = problem.cols();
  require(static_cast<int>(v.size()) == m * n, "matching_energy: shape mismatch");
  double e = 0.0;
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += v[static_cast<std::size_t>(i * n + j)];
    e += 0.5 * coeff.a_row * (rows_exact(m, n) ? (s - 1.0) * (s - 1.0) : s * (s - 1.0));
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += v[static_cast<std::size_t>(i * n + j)];
    e += 0.5 * coeff.a_col * (cols_exact(m, n) ? (s - 1.0) * (s - 1.0) : s * (s - 1.0));
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      e -= coeff.b_data * problem.compatibility(i, j) * v[static_cast<std::size_t>(i * n + j)];
    }
  }
  return e;
}

double hopfield_energy(const HopfieldWeights& weights, const Eigen::VectorXd& x) {
  return -0.5 * x.dot(weights.w * x) - weights.bias.dot(x);
}

double energy_offset(const MatchProblem& problem, const Coefficients& coeff) {
  const int m = problem.rows();
  const int n = problem.cols();
  return (rows_exact(m, n) ? 0.5 * coeff.a_row * m : 0.0) +
         (cols_exact(m, n) ? 0.5 * coeff.a_col * n : 0.0);
}

TcnnState initial_state(const HopfieldWeights& weights, const TcnnParams& params,
                        std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  TcnnState s;
  const int size = weights.size();
  s.y.resize(size);
  s.x.resize(size);
  for (int a = 0; a < size; ++a) {
    s.y(a) = rng.uniform(-params.init_perturbation, params.init_perturbation);
    s.x(a) = activate(s.y(a), params);
  }
  s.z = params.z0;
  s.t = 0;
  return s;
}

TcnnState tcnn_step(const TcnnState& state, const HopfieldWeights& weights,
                    const TcnnParams& params) {
  const Eigen::VectorXd field = weights.w * state.x + weights.bias;
  TcnnState next;
  next.y = params.k * state.y + params.alpha * field -
           state.z * (state.x.array() - params.i0).matrix();
  next.x.resize(next.y.size());
  next.clamped = state.clamped;
  for (Eigen::Index a = 0; a < next.y.size(); ++a) {
    if (!std::isfinite(next.y(a))) {
      next.y(a) = std::isnan(next.y(a)) ? 0.0 : std::copysign(1e300, next.y(a));
      next.clamped = true;
    }
    next.x(a) = activate(next.y(a), params);
  }
  next.z = (1.0 - params.beta) * state.z;
  next.t = state.t + 1;
  return next;
}

MatchMatrix binarize(const TcnnState& state, int rows, int cols) {
  MatchMatrix mm;
  mm.rows = rows;
  mm.cols = cols;
  mm.v.resize(static_cast<std::size_t>(rows * cols));
  for (int a = 0; a < rows * cols; ++a) mm.v[static_cast<std::size_t>(a)] = state.x(a) > 0.5;
  return mm;
}

MatchMatrix run_matching(const MatchProblem& problem, const TcnnParams& params,
                         const Coefficients& coeff, std::uint64_t seed) {
  params.validate();
  const HopfieldWeights weights = build_matching_network(problem, coeff);
  TcnnState state = initial_state(weights, params, seed);
  MatchMatrix prev = binarize(state, weights.rows, weights.cols);
  int stable = 0;
  const double thr = params.binarize_threshold;
  for (int step = 1; step <= params.max_steps; ++step) {
    state = tcnn_step(state, weights, params);
    MatchMatrix cur = binarize(state, weights.rows, weights.cols);
    const bool saturated =
        ((state.x.array() <= thr) || (state.x.array() >= 1.0 - thr)).all();
    stable = (saturated && cur.v == prev.v) ? stable + 1 : 0;
    prev = std::move(cur);
    if (stable >= params.stable_steps) {
      prev.converged = true;
      prev.steps_used = step;
      return prev;
    }
  }
  prev.converged = false;
  prev.steps_used = params.max_steps;
  return prev;
}

OracleMode resolve_oracle(int rows, int cols, OracleMode mode) {
  require(rows >= 1 && cols >= 1, "oracle: M and N must be >= 1");
  if (mode == OracleMode::Auto) {
    mode = rows * cols <= kAutoExhaustiveLimit ? OracleMode::Exhaustive : OracleMode::OneToOne;
  }
  if (mode == OracleMode::Exhaustive) {
    require(rows * cols <= kExhaustiveLimit,
            "exhaustive oracle: M*N = " + std::to_string(rows * cols) + " exceeds " +
                std::to_string(kExhaustiveLimit));
  } else {
    require(rows <= kOneToOneLimit && cols <= kOneToOneLimit,
            "one-to-one oracle: M and N must be <= " + std::to_string(kOneToOneLimit));
  }
  return mode;
}

namespace {

MatchMatrix exhaustive_match(const MatchProblem& problem, const Coefficients& coeff) {
  const int m = problem.rows();
  const int n = problem.cols();
  const int cells = m * n;
  std::vector<int> row_sum(static_cast<std::size_t>(m), 0), col_sum(static_cast<std::size_t>(n), 0);
  int overfull = 0;  // rows plus columns with sum > 1
  std::vector<std::uint8_t> v(static_cast<std::size_t>(cells), 0);
  std::vector<std::uint8_t> best;
  double best_e = std::numeric_limits<double>::infinity();

  auto consider = [&] {
    if (overfull) return;
    const double e = matching_energy(problem, coeff, v);
    if (e < best_e || (e == best_e && v < best)) {
      best_e = e;
      best = v;
    }
  };

  consider();  // all-zero matrix
  const std::uint64_t total = std::uint64_t{1} << cells;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int cell = std::countr_zero(g);
    const int i = cell / n;
    const int j = cell % n;
    auto& r = row_sum[static_cast<std::size_t>(i)];
    auto& c = col_sum[static_cast<std::size_t>(j)];
    const int before = (r > 1) + (c > 1);
    if (v[static_cast<std::size_t>(cell)]) {
      v[static_cast<std::size_t>(cell)] = 0;
      --r;
      --c;
    } else {
      v[static_cast<std::size_t>(cell)] = 1;
      ++r;
      ++c;
    }
    overfull += (r > 1) + (c > 1) - before;
    consider();
  }
  MatchMatrix mm;
  mm.rows = m;
  mm.cols = n;
  mm.v = std::move(best);
  mm.converged = true;
  return mm;
}

MatchMatrix one_to_one_match(const MatchProblem& problem, const Coefficients& coeff) {
  const int m = problem.rows();
  const int n = problem.cols();
  const std::size_t masks = std::size_t{1} << n;
  // cost[i][mask]: best sum of pair costs for rows i.. given used columns.
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(m) + 1,
                                        std::vector<double>(masks, 0.0));
  const double base = (rows_exact(m, n) ? 0.5 * coeff.a_row : 0.0) +
                      (cols_exact(m, n) ? 0.5 * coeff.a_col : 0.0);
  auto pair_cost = [&](int i, int j) { return -base - coeff.b_data * problem.compatibility(i, j); };
  for (int i = m - 1; i >= 0; --i) {
    for (std::size_t mask = 0; mask < masks; ++mask) {
      double best = cost[static_cast<std::size_t>(i) + 1][mask];
      for (int j = 0; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        best = std::min(best, pair_cost(i, j) + cost[static_cast<std::size_t>(i) + 1][mask | (std::size_t{1} << j)]);
      }
      cost[static_cast<std::size_t>(i)][mask] = best;
    }
  }
  // Reconstruct, trying each row's options in lexicographic order: empty
  // row first, then a one in the last column, ..., the first column.
  MatchMatrix mm;
  mm.rows = m;
  mm.cols = n;
  mm.v.assign(static_cast<std::size_t>(m * n), 0);
  mm.converged = true;
  std::size_t mask = 0;
  for (int i = 0; i < m; ++i) {
    const double target = cost[static_cast<std::size_t>(i)][mask];
    if (cost[static_cast<std::size_t>(i) + 1][mask] == target) continue;
    for (int j = n - 1; j >= 0; --j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      if (pair_cost(i, j) + cost[static_cast<std::size_t>(i) + 1][next] == target) {
        mm.v[static_cast<std::size_t>(i * n + j)] = 1;
        mask = next;
        break;
      }
    }
  }
  return mm;
}

}  // namespace

MatchMatrix brute_force_match(const MatchProblem& problem, const Coefficients& coeff,
                              OracleMode mode) {
  require(coeff.a_row > 0.0 && coeff.a_col > 0.0 && coeff.b_data > 0.0,
          "coefficients must be > 0");
  mode = resolve_oracle(problem.rows(), problem.cols(), mode);
  return mode == OracleMode::Exhaustive ? exhaustive_match(problem, coeff)
                                        : one_to_one_match(problem, coeff);
}

MatchMatrix nn_baseline_match(const MatchProblem& problem, double ratio_threshold) {
  require(problem.has_descriptors(), "nn baseline: problem has no descriptors");
  require(problem.reference.cols() == problem.scene.cols(),
          "nn baseline: descriptor dimensions differ");
  const int m = static_cast<int>(problem.reference.rows());
  const int n = static_cast<int>(problem.scene.rows());
  Eigen::MatrixXd dist(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (problem.reference.row(i) - problem.scene.row(j)).norm();
  }
  // Forward nearest neighbour with ratio test.
  std::vector<int> forward(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    int best = -1;
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = dist(i, j);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (n == 1 || d1 < ratio_threshold * d2) forward[static_cast<std::size_t>(i)] = best;
  }
  MatchMatrix mm;
  mm.rows = m;
  mm.cols = n;
  mm.v.assign(static_cast<std::size_t>(m * n), 0);
  mm.converged = true;
  for (int i = 0; i < m; ++i) {
    const int j = forward[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    // Mutual best: i must be the nearest reference to scene j (first on ties).
    int back = 0;
    for (int ii = 1; ii < m; ++ii) {
      if (dist(ii, j) < dist(back, j)) back = ii;
    }
    if (back == i) mm.v[static_cast<std::size_t>(i * n + j)] = 1;
  }
  return mm;
}

}  // namespace arpps::tcnn
