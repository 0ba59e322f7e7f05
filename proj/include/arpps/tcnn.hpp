#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace arpps::tcnn {

/// Output function. Canonical is x = 1/(1+exp(-y/eps)), which makes eps a
/// steepness parameter; AsPrinted is x = 1/(1+exp(-y(1+eps))).
enum class Activation { Canonical, AsPrinted };

struct TcnnParams {
  double k = 0.9;          // membrane damping, [0, 1]
  double alpha = 0.015;    // input scaling, > 0
  double beta = 0.015;     // self-feedback damping, (0, 1)
  double i0 = 0.65;        // self-feedback bias, > 0
  double epsilon = 1.0 / 250.0;
  double z0 = 0.08;        // initial self-feedback, >= 0
  int max_steps = 5000;
  /// Outputs closer than this to 0 or 1 count as saturated.
  double binarize_threshold = 0.05;
  int stable_steps = 10;
  double init_perturbation = 0.01;
  Activation activation = Activation::Canonical;

  /// Throws Error(InvalidArgument) when a field is out of range.
  void validate() const;
};

/// Energy coefficients of the assignment encoding
///   E = a_row/2 sum_i (sum_j v_ij - 1)^2 + a_col/2 sum_j (sum_i v_ij - 1)^2
///       - b_data sum_ij c_ij v_ij
/// When the grid is not square, the longer axis cannot be fully covered, so
/// its term becomes a/2 s (s - 1): sums above one are penalised, empty lines
/// are free.
struct Coefficients {
  double a_row = 1.0;
  double a_col = 1.0;
  double b_data = 0.5;
};

/// M reference descriptors against N scene descriptors, with compatibility
/// c_ij in [0, 1].
struct MatchProblem {
  Eigen::MatrixXd reference;      // M x D, may be empty
  Eigen::MatrixXd scene;          // N x D, may be empty
  Eigen::MatrixXd compatibility;  // M x N

  int rows() const { return static_cast<int>(compatibility.rows()); }
  int cols() const { return static_cast<int>(compatibility.cols()); }
  bool has_descriptors() const { return reference.rows() > 0 && scene.rows() > 0; }

  /// c_ij = exp(-|g_i - s_j|^2 / (2 sigma^2)).
  static MatchProblem from_descriptors(Eigen::MatrixXd reference, Eigen::MatrixXd scene,
                                       double sigma);
  static MatchProblem from_compatibility(Eigen::MatrixXd compatibility);
};

/// Dense symmetric weights over the M*N neuron grid, neuron (i, j) at index
/// i * N + j.
struct HopfieldWeights {
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd w;
  Eigen::VectorXd bias;

  int size() const { return rows * cols; }
};

struct TcnnState {
  Eigen::VectorXd x;  // outputs, strictly inside (0, 1)
  Eigen::VectorXd y;  // internal states
  double z = 0.0;     // shared self-feedback weight
  std::uint64_t t = 0;
  /// Set when a non-finite internal state had to be clamped.
  bool clamped = false;
};

struct MatchMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> v;  // row-major binary
  bool converged = false;
  int steps_used = 0;

  std::uint8_t at(int i, int j) const { return v[static_cast<std::size_t>(i * cols + j)]; }
  /// True when every row and column sum is at most one.
  bool one_to_one() const;
  /// Matched column per row, or -1.
  std::vector<int> assignment() const;
  bool same_assignment(const MatchMatrix& other) const {
    return rows == other.rows && cols == other.cols && v == other.v;
  }
};

double activate(double y, const TcnnParams& params);

/// Whether row (column) sums are pulled to exactly one or only kept <= 1.
constexpr bool rows_exact(int m, int n) noexcept { return m <= n; }
constexpr bool cols_exact(int m, int n) noexcept { return n <= m; }

/// Throws Error(InvalidArgument) for non-positive coefficients.
HopfieldWeights build_matching_network(const MatchProblem& problem, const Coefficients& coeff);

/// E of a binary (or relaxed) assignment, evaluated term by term.
double matching_energy(const MatchProblem& problem, const Coefficients& coeff,
                       const std::vector<std::uint8_t>& v);
/// -1/2 x'Wx - I'x. Equals matching_energy minus a constant on binary x.
double hopfield_energy(const HopfieldWeights& weights, const Eigen::VectorXd& x);
/// The constant offset between the two energies: (a_row M + a_col N) / 2
/// for a square grid, exact axes only otherwise.
double energy_offset(const MatchProblem& problem, const Coefficients& coeff);

/// Seeded start: y uniform in [-p, p], x = f(y), z = z0.
TcnnState initial_state(const HopfieldWeights& weights, const TcnnParams& params,
                        std::uint64_t seed);

/// One synchronous update of every neuron from the time-t values.
TcnnState tcnn_step(const TcnnState& state, const HopfieldWeights& weights,
                    const TcnnParams& params);

MatchMatrix binarize(const TcnnState& state, int rows, int cols);

/// Iterates until outputs are saturated and the binarised matrix has been
/// unchanged for params.stable_steps steps, or until max_steps.
MatchMatrix run_matching(const MatchProblem& problem, const TcnnParams& params,
                         const Coefficients& coeff, std::uint64_t seed);

enum class OracleMode {
  Auto,        // exhaustive when M*N <= kAutoExhaustiveLimit, else one-to-one
  Exhaustive,  // Gray-code scan of all 2^(MN) matrices, feasible ones scored
  OneToOne,    // dynamic programme over used-column sets
};

inline constexpr int kExhaustiveLimit = 25;  // M*N
inline constexpr int kAutoExhaustiveLimit = 16;
inline constexpr int kOneToOneLimit = 12;    // max(M, N)

/// Resolves Auto and checks the size bound. Throws Error(InvalidArgument)
/// when the requested mode cannot handle the problem size.
OracleMode resolve_oracle(int rows, int cols, OracleMode mode);

/// Exact minimiser of E over binary matrices with row and column sums <= 1.
/// Ties go to the lexicographically smallest row-major matrix.
MatchMatrix brute_force_match(const MatchProblem& problem, const Coefficients& coeff,
                              OracleMode mode = OracleMode::Auto);

/// Exact nearest neighbour by Euclidean descriptor distance, Lowe ratio test
/// (skipped when N == 1), then mutual-best filtering.
MatchMatrix nn_baseline_match(const MatchProblem& problem, double ratio_threshold);

}  // namespace arpps::tcnn
