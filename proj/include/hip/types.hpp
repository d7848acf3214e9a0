#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hip {

using Eigen::Index;

/// Outcome distribution family. Binary outcomes are MultiClass with m = 2.
enum class Family { MultiClass, Poisson, Zip };

enum class Standardization { Subgroup, None };

std::string to_string(Family f);
std::string to_string(Standardization s);
Family family_from_string(const std::string& s);
Standardization standardization_from_string(const std::string& s);

/// Invalid or inconsistent input data (bad shapes, bad files, bad labels).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Optimization produced a non-finite quantity or an ill-posed linear system.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-subgroup outcome container. Exactly one of the two representations is
/// populated depending on the family: an indicator matrix for MultiClass, a
/// count/offset pair for Poisson and Zip. log(y!) is cached at construction
/// since it is constant in all model parameters.
struct OutcomeData {
  Family family = Family::Poisson;

  Eigen::MatrixXd indicators;  // MultiClass: n x m, one-hot rows
  Eigen::VectorXi labels;      // MultiClass: n, values in [0, m)

  Eigen::VectorXd counts;              // Poisson/Zip: y >= 0, integral
  Eigen::VectorXd offsets;             // Poisson/Zip: t > 0
  Eigen::VectorXd log_count_factorial; // cached lgamma(y + 1)

  Index n() const {
    return family == Family::MultiClass ? indicators.rows() : counts.size();
  }
  Index num_classes() const { return indicators.cols(); }
  Index q() const { return family == Family::MultiClass ? indicators.cols() : 1; }

  static OutcomeData multiclass(const Eigen::VectorXi& labels, Index num_classes);
  static OutcomeData count_family(Family family, Eigen::VectorXd counts,
                                  Eigen::VectorXd offsets);
};

struct ViewInfo {
  std::string name;
  Index p = 0;
  std::vector<std::string> variables;  // size p
};

struct SubgroupInfo {
  std::string name;
  Index n = 0;
};

/// All observed data: one matrix per (view, subgroup) plus one outcome per
/// subgroup. Immutable by convention once built; operations return copies.
struct MultiViewDataset {
  std::vector<ViewInfo> views;
  std::vector<SubgroupInfo> subgroups;
  std::vector<std::vector<Eigen::MatrixXd>> X;  // [view][subgroup], n_s x p_d
  std::vector<OutcomeData> outcome;             // [subgroup]

  Index num_views() const { return static_cast<Index>(views.size()); }
  Index num_subgroups() const { return static_cast<Index>(subgroups.size()); }
  Index n(Index s) const { return subgroups[static_cast<size_t>(s)].n; }
  Index p(Index d) const { return views[static_cast<size_t>(d)].p; }
  Index total_samples() const {
    Index total = 0;
    for (const auto& g : subgroups) total += g.n;
    return total;
  }
  const Eigen::MatrixXd& x(Index d, Index s) const {
    return X[static_cast<size_t>(d)][static_cast<size_t>(s)];
  }
  Family family() const { return outcome.front().family; }
};

/// Hyperparameters of one inner solver. The same record serves the FISTA,
/// ISTA, and Adagrad solvers; Adagrad ignores step0/shrink except as its
/// safeguard shrink factor, the proximal solvers ignore the adagrad fields.
struct SolverSettings {
  double step0 = 1.0;          // initial step size
  double shrink = 0.5;         // backtracking shrink factor, in (0,1)
  int max_iter = 500;
  double tol = 1e-6;           // relative objective-change tolerance
  double adagrad_rate = 0.1;
  double adagrad_floor = 1e-10;
};

/// Everything that determines one fit, including the seed.
struct FitConfig {
  int k = 2;
  double lambda_g = 1.0;
  double lambda_xi = 1.0;
  std::vector<int> gamma;  // per-view 0/1 penalty indicator; empty = all 1
  Family family = Family::Poisson;
  double epsilon_conv = 1e-5;  // outer relative-objective tolerance
  int iter_max = 200;
  SolverSettings z_solver;
  SolverSettings g_solver;
  SolverSettings xi_solver;
  SolverSettings theta_solver;
  std::uint64_t seed = 0;
  Standardization standardization = Standardization::Subgroup;

  int gamma_for(Index d) const {
    if (gamma.empty()) return 1;
    return gamma[static_cast<size_t>(d)];
  }
  /// Throws if the configuration violates its own invariants.
  void validate(Index num_views) const;
};

/// Model state estimated by the alternating algorithm. The loadings B^{d,s}
/// are always derived as G^d .* Xi^{d,s}, never stored.
struct HipParams {
  std::vector<Eigen::MatrixXd> Z;                // [subgroup], n_s x K
  std::vector<Eigen::MatrixXd> G;                // [view], p_d x K
  std::vector<std::vector<Eigen::MatrixXd>> Xi;  // [view][subgroup], p_d x K
  Eigen::MatrixXd theta;     // K x q
  Eigen::RowVectorXd beta0;  // 1 x q
  double tau = 0.0;          // Zip only, in (eps_tau, 1 - eps_tau)

  Eigen::MatrixXd loading(Index d, Index s) const {
    return G[static_cast<size_t>(d)].cwiseProduct(
        Xi[static_cast<size_t>(d)][static_cast<size_t>(s)]);
  }
  Index k() const { return theta.rows(); }
};

struct ObjectiveBreakdown {
  double prediction = 0.0;
  double association = 0.0;
  double penalty_g = 0.0;
  double penalty_xi = 0.0;
  double total = 0.0;  // always the sum of the four terms above
};

struct IterationStat {
  ObjectiveBreakdown objective;
  double tau = 0.0;        // Zip only
  int z_iterations = 0;    // summed over subgroups
  int g_iterations = 0;    // summed over views
  int xi_iterations = 0;   // summed over (view, subgroup)
  int theta_iterations = 0;
  double rel_change = 0.0;
  double wall_ms = 0.0;
};

struct FitTrace {
  ObjectiveBreakdown initial;
  std::vector<IterationStat> iterations;
  bool converged = false;
  std::string reason;                  // "converged" | "iter_max" | abort text
  std::vector<std::string> warnings;   // inner caps reached etc.
  long exp_clips = 0;                  // exp-overflow guard activations
};

struct ValidationReport {
  struct Violation {
    std::string kind;  // "shape" | "nonfinite" | "empty_class" | "offset" | ...
    Index view = -1;
    Index subgroup = -1;
    std::string message;
  };
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Per-column transform learned on training data; applies identically to test
/// data. Constant columns carry scale 0 and map to all zeros.
struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;        // sample sd (n-1 denominator); 0 for constants
  std::vector<char> constant;   // per column
};

struct StandardizationParams {
  Standardization mode = Standardization::Subgroup;
  std::vector<std::vector<ColumnStats>> stats;  // [view][subgroup]
};

}  // namespace hip
