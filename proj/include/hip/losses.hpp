#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hip/types.hpp"

namespace hip {

/// exp arguments are clipped to this magnitude; every clip is counted.
constexpr double kExpClip = 700.0;
/// eps inside the smoothed row-norm gradient sqrt(|v|^2 + eps).
constexpr double kPenaltySmoothing = 1e-8;

long exp_clip_count();
void reset_exp_clip_count();

namespace detail {

long& exp_clip_counter();

inline double exp_clipped(double x) {
  if (x > kExpClip) {
    ++exp_clip_counter();
    x = kExpClip;
  } else if (x < -kExpClip) {
    ++exp_clip_counter();
    x = -kExpClip;
  }
  return std::exp(x);
}

inline Eigen::ArrayXd exp_clipped(const Eigen::ArrayXd& x) {
  const long clips = (x.abs() > kExpClip).count();
  if (clips > 0) exp_clip_counter() += clips;
  return x.min(kExpClip).max(-kExpClip).exp();
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

/// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// log(exp(a) + exp(b)) without overflow.
inline double logaddexp(double a, double b) {
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

/// Squared Frobenius norm of X - Z B^T.
template <class DX, class DZ, class DB>
typename DX::Scalar association_loss(const Eigen::MatrixBase<DX>& X,
                                     const Eigen::MatrixBase<DZ>& Z,
                                     const Eigen::MatrixBase<DB>& B) {
  if (X.rows() != Z.rows() || X.cols() != B.rows() || Z.cols() != B.cols())
    throw std::invalid_argument("association_loss: nonconforming shapes");
  return (X - Z * B.transpose()).squaredNorm();
}

struct PenaltyValue {
  double g = 0.0;
  double xi = 0.0;
};

/// Block L2,1 penalty of Eq-style form: lambda_g sum_d gamma_d sum_l |g_l| +
/// lambda_xi sum_d gamma_d sum_s sum_l |xi_l|. Empty gamma means all ones.
PenaltyValue penalty_value(const std::vector<Eigen::MatrixXd>& G,
                           const std::vector<std::vector<Eigen::MatrixXd>>& Xi,
                           double lambda_g, double lambda_xi,
                           const std::vector<int>& gamma);

/// Sum of row L2 norms.
double l21_norm(const Eigen::Ref<const Eigen::MatrixXd>& V);

/// Row-wise lambda * v_l / sqrt(|v_l|^2 + kPenaltySmoothing).
Eigen::MatrixXd l21_smoothed_gradient(const Eigen::Ref<const Eigen::MatrixXd>& V,
                                      double lambda);

/// Cross-entropy with row-max-stabilized softmax of W = 1 beta0 + Z Theta.
double multiclass_loss(const Eigen::Ref<const Eigen::MatrixXd>& Y,
                       const Eigen::Ref<const Eigen::MatrixXd>& Z,
                       const Eigen::Ref<const Eigen::MatrixXd>& theta,
                       const Eigen::Ref<const Eigen::RowVectorXd>& beta0);

/// Poisson negative log-likelihood with offset and log link.
double poisson_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& t,
                    const Eigen::Ref<const Eigen::MatrixXd>& Z,
                    const Eigen::Ref<const Eigen::MatrixXd>& theta,
                    const Eigen::Ref<const Eigen::RowVectorXd>& beta0);

/// Zero-inflated Poisson negative log-likelihood. tau is the zero-state
/// probability and enters through its logit; must lie strictly in (0,1).
double zip_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                const Eigen::Ref<const Eigen::VectorXd>& t,
                const Eigen::Ref<const Eigen::MatrixXd>& Z,
                const Eigen::Ref<const Eigen::MatrixXd>& theta,
                const Eigen::Ref<const Eigen::RowVectorXd>& beta0, double tau);

/// Family dispatch over one subgroup's outcome.
double prediction_loss(const OutcomeData& outcome,
                       const Eigen::Ref<const Eigen::MatrixXd>& Z,
                       const Eigen::Ref<const Eigen::MatrixXd>& theta,
                       const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                       double tau);

ObjectiveBreakdown total_objective(const MultiViewDataset& data,
                                   const HipParams& params,
                                   const FitConfig& config);

// Gradient kernels (shared by the public dispatch below and the solvers).

Eigen::MatrixXd prediction_grad_z(const OutcomeData& outcome,
                                  const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                  const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                                  double tau);

/// Gradient for the stacked [beta0; theta] block, shape (K+1) x q with the
/// intercept in row 0.
Eigen::MatrixXd prediction_grad_theta_beta(
    const OutcomeData& outcome, const Eigen::Ref<const Eigen::MatrixXd>& Z,
    const Eigen::Ref<const Eigen::MatrixXd>& theta,
    const Eigen::Ref<const Eigen::RowVectorXd>& beta0, double tau);

struct ParamBlock {
  enum class Kind { Z, G, Xi, ThetaBeta };
  Kind kind;
  Index view = -1;
  Index subgroup = -1;

  static ParamBlock z(Index s) { return {Kind::Z, -1, s}; }
  static ParamBlock g(Index d) { return {Kind::G, d, -1}; }
  static ParamBlock xi(Index d, Index s) { return {Kind::Xi, d, s}; }
  static ParamBlock theta_beta() { return {Kind::ThetaBeta, -1, -1}; }
};

/// Gradient of the smooth objective (prediction + association + smoothed
/// penalty) with respect to one parameter block. ThetaBeta comes back as
/// (K+1) x q with beta0 in row 0.
Eigen::MatrixXd gradients(const MultiViewDataset& data, const HipParams& params,
                          const FitConfig& config, const ParamBlock& block);

}  // namespace hip
