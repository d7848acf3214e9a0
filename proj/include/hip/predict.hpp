#pragma once

#include <vector>

#include "hip/types.hpp"

namespace hip {

struct ScorePrediction {
  std::vector<Eigen::MatrixXd> z;   // per subgroup, n_test x K
  std::vector<char> regularized;    // per subgroup: ridge was applied
};

/// Closed-form test scores Z = X_cat B_cat (B_cat^T B_cat)^{-1} per subgroup,
/// with views concatenated column-wise. Near-singular B_cat^T B_cat gets a
/// ridge of 1e-8 * trace/K on the diagonal and the subgroup is flagged.
/// x_test and b are indexed [view][subgroup].
ScorePrediction predict_scores(
    const std::vector<std::vector<Eigen::MatrixXd>>& x_test,
    const std::vector<std::vector<Eigen::MatrixXd>>& b);

/// Row-wise argmax of the softmax scores; ties go to the smallest class.
Eigen::VectorXi predict_classes(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                const Eigen::Ref<const Eigen::RowVectorXd>& beta0);

/// Expected counts t*exp(beta0 + z theta), times (1 - tau) for Zip.
Eigen::VectorXd predict_counts(const Eigen::Ref<const Eigen::MatrixXd>& z,
                               const Eigen::Ref<const Eigen::MatrixXd>& theta,
                               const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                               Family family, double tau,
                               const Eigen::Ref<const Eigen::VectorXd>& offsets);

double classification_accuracy(const Eigen::Ref<const Eigen::VectorXi>& truth,
                               const Eigen::Ref<const Eigen::VectorXi>& predicted);

struct DevianceResult {
  double value = 0.0;
  bool defined = false;     // false when the null deviance is zero
  double d_null = 0.0;
  double d_model = 0.0;
};

/// Fraction of deviance explained, (D_null - D_model) / D_null, with
/// deviance = 2 (loss - saturated loss). mu is the Poisson-component mean
/// t*exp(eta) of the fitted model; tau its zero-state probability (0 for a
/// plain Poisson model, also accepted for Zip as the degenerate limit). The
/// null model is refit here: intercept-only for Poisson, intercept + tau via
/// EM for Zip. Saturated Zip zeros use the exact-zero fit.
DevianceResult deviance_explained(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::VectorXd>& t,
                                  const Eigen::Ref<const Eigen::VectorXd>& mu,
                                  Family family, double tau);

/// Intercept-only Zip fit by EM; returns (beta0, tau). Exposed for the null
/// model and for diagnostics.
std::pair<double, double> zip_intercept_fit(
    const Eigen::Ref<const Eigen::VectorXd>& y,
    const Eigen::Ref<const Eigen::VectorXd>& t);

struct SelectionScores {
  double tpr = 0.0;
  double fpr = 0.0;
  double f1 = 0.0;
  bool tpr_zero_division = false;
  bool fpr_zero_division = false;
  bool f1_zero_division = false;
};

/// TPR, FPR and F1 of a selected index set against the true signal set over
/// p variables; 0/0 ratios are defined as 0 and flagged.
SelectionScores selection_metrics(const std::vector<Index>& truth,
                                  const std::vector<Index>& selected, Index p);

}  // namespace hip
