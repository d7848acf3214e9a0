#pragma once

#include <utility>
#include <vector>

#include "hip/types.hpp"

namespace hip {

/// tau is clamped to (kTauEpsilon, 1 - kTauEpsilon); the Zip loss needs an
/// open interval for the logit.
constexpr double kTauEpsilon = 1e-4;

struct InnerResult {
  int iterations = 0;
  bool hit_cap = false;
};

/// Optional per-iteration log of an inner solve. objective[0] is the starting
/// value; step/iterates record accepted steps only. When an update spans
/// several blocks (S > 1 or D > 1) the logs are appended block after block.
struct InnerTrace {
  std::vector<double> objective;
  std::vector<double> step;
  std::vector<Eigen::MatrixXd> iterates;
};

/// FISTA with backtracking on prediction + association for each Z^s, followed
/// by column standardization to mean 0, variance 1. prediction_weight scales
/// the prediction term (test hook; the fit always uses 1).
InnerResult update_z(const MultiViewDataset& data, HipParams& params,
                     const FitConfig& config, const SolverSettings& settings,
                     double prediction_weight = 1.0, InnerTrace* trace = nullptr);

/// Adagrad on the view-d association + smoothed L2,1 penalty, for every view.
InnerResult update_g(const MultiViewDataset& data, HipParams& params,
                     const FitConfig& config, const SolverSettings& settings,
                     InnerTrace* trace = nullptr);

/// Same scheme per (view, subgroup) block with penalty weight lambda_xi.
InnerResult update_xi(const MultiViewDataset& data, HipParams& params,
                      const FitConfig& config, const SolverSettings& settings,
                      InnerTrace* trace = nullptr);

/// ISTA with backtracking on the summed prediction term over (Theta, beta0).
InnerResult update_theta(const MultiViewDataset& data, HipParams& params,
                         const FitConfig& config, const SolverSettings& settings,
                         InnerTrace* trace = nullptr);

/// Excess-zeros estimate of the zero-state probability, clamped to the open
/// interval. The offset is deliberately absent from the inner exponent.
double update_tau(const MultiViewDataset& data, const HipParams& params);

/// The full alternating loop: Z (standardized), G, Xi, Theta/beta0, tau,
/// until the relative change of the total objective drops below
/// config.epsilon_conv or iter_max is reached. Deterministic per seed.
std::pair<HipParams, FitTrace> fit(const MultiViewDataset& data,
                                   const FitConfig& config);

}  // namespace hip
