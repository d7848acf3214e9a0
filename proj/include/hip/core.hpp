#pragma once

#include <utility>

#include "hip/types.hpp"

namespace hip {

/// Checks every dataset invariant and returns the violations found; never
/// throws and never mutates. Checks: per-(view,subgroup) shape consistency,
/// finiteness, outcome integrity (one-hot rows, every class present in every
/// subgroup, integral non-negative counts, strictly positive offsets).
ValidationReport validate_dataset(const MultiViewDataset& data);

/// Column-standardizes each X^{d,s} to mean 0, sample variance 1 (n-1
/// denominator). Constant columns become all zeros and are flagged. The
/// returned params reproduce the transform on held-out data.
std::pair<MultiViewDataset, StandardizationParams> standardize_subgroup(
    const MultiViewDataset& data);

/// Applies training-time standardization to new data with the same layout.
/// Throws DataError on any dimension mismatch.
MultiViewDataset apply_standardization(const MultiViewDataset& data,
                                       const StandardizationParams& params);

/// Initial model state: Z^s ~ U(0.9, 1.1) from the seeded generator, G/Theta/
/// beta0 all ones, Xi^{d,s} the least-squares solve of X on Z, and (Zip) tau
/// from the excess-zeros rule, clamped. Deterministic given config.seed.
HipParams initialize_params(const MultiViewDataset& data, const FitConfig& config);

/// Same, but with caller-supplied Z (test hook for the closed-form Xi checks).
HipParams initialize_params_with_z(const MultiViewDataset& data,
                                   const FitConfig& config,
                                   std::vector<Eigen::MatrixXd> z);

}  // namespace hip
