#pragma once

#include <utility>
#include <vector>

#include "hip/rng.hpp"
#include "hip/types.hpp"

namespace hip {

enum class Overlap { Full, Partial };

/// Synthetic-study scenario. Defaults mirror the low-dimensional two-view,
/// two-subgroup design: 50 signal variables per (view, subgroup), 25 of them
/// shared under Partial overlap.
struct ScenarioSpec {
  Overlap overlap = Overlap::Full;
  std::vector<Index> p = {300, 350};
  std::vector<Index> n = {250, 260};
  int k_true = 2;
  Family family = Family::Zip;
  Index signal_count = 50;
  double z_mean = 25.0;
  double z_sd = 3.0;
  double noise_sd = 1.0;  // test hook: 0 gives an exact factorization
  double tau = 0.25;      // Zip zero-state probability
  std::uint64_t seed = 0;

  Index num_views() const { return static_cast<Index>(p.size()); }
  Index num_subgroups() const { return static_cast<Index>(n.size()); }
  void validate() const;
  static ScenarioSpec high_dim(ScenarioSpec base);
  static ScenarioSpec high_dim() { return high_dim(ScenarioSpec{}); }
};

/// Generating quantities: signal sets, loadings, scores, and the outcome
/// model coefficients.
struct GroundTruth {
  std::vector<std::vector<std::vector<Index>>> signal;  // [view][subgroup]
  std::vector<std::vector<Eigen::MatrixXd>> b;          // [view][subgroup]
  std::vector<Eigen::MatrixXd> z;                       // training draw
  Eigen::MatrixXd theta;
  Eigen::RowVectorXd beta0;
  double tau = 0.0;

  /// Signal indices unique to subgroup s within view d.
  std::vector<Index> unique_signal(Index d, Index s) const;
};

/// One draw of covariates (and later outcome) for a fixed ground truth.
struct SimDraw {
  std::vector<std::vector<Eigen::MatrixXd>> x;  // [view][subgroup]
  std::vector<Eigen::MatrixXd> z;               // [subgroup]
  std::vector<OutcomeData> outcome;             // [subgroup]
};

/// Loadings with U(-1,-0.5) u U(0.5,1) signal rows, zeros elsewhere, columns
/// orthonormalized by QR of the signal-row block (so non-signal rows stay
/// exactly zero) with the leading nonzero of each column made positive.
GroundTruth generate_loadings(const ScenarioSpec& spec, Rng& rng);

/// Z^s ~ N(z_mean, z_sd^2), E ~ N(0, noise_sd^2), X = Z B^T + E.
SimDraw generate_views(const ScenarioSpec& spec, const GroundTruth& truth,
                       Rng& rng);

/// Fills draw.outcome. MultiClass: argmax rows of 1 beta0 + Z theta + noise.
/// Count families: columns of Z standardized first, counts Poisson with mean
/// exp(beta0 + Z theta); Zip multiplies by Bernoulli(1 - tau). Offsets are 1.
void generate_outcome(const ScenarioSpec& spec, const GroundTruth& truth,
                      SimDraw& draw, Rng& rng);

/// Packs a draw into a dataset with generated view/subgroup/variable names.
MultiViewDataset assemble_dataset(const ScenarioSpec& spec, const SimDraw& draw);

/// loadings -> views -> outcome, single seeded stream; truth.z is the
/// training-score draw.
std::pair<MultiViewDataset, GroundTruth> generate_dataset(const ScenarioSpec& spec);

}  // namespace hip
