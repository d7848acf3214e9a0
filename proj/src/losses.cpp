#include "hip/losses.hpp"

#include <cmath>

namespace hip {

namespace detail {

long& exp_clip_counter() {
  thread_local long count = 0;
  return count;
}

}  // namespace detail

long exp_clip_count() { return detail::exp_clip_counter(); }
void reset_exp_clip_count() { detail::exp_clip_counter() = 0; }

PenaltyValue penalty_value(const std::vector<Eigen::MatrixXd>& G,
                           const std::vector<std::vector<Eigen::MatrixXd>>& Xi,
                           double lambda_g, double lambda_xi,
                           const std::vector<int>& gamma) {
  if (!(lambda_g > 0.0) || !(lambda_xi > 0.0))
    throw std::invalid_argument("penalty_value: lambda_g, lambda_xi must be > 0");
  PenaltyValue out;
  for (size_t d = 0; d < G.size(); ++d) {
    const int gd = gamma.empty() ? 1 : gamma[d];
    if (gd == 0) continue;
    out.g += l21_norm(G[d]);
    for (const auto& xi : Xi[d]) out.xi += l21_norm(xi);
  }
  out.g *= lambda_g;
  out.xi *= lambda_xi;
  return out;
}

double l21_norm(const Eigen::Ref<const Eigen::MatrixXd>& V) {
  return V.rowwise().norm().sum();
}

Eigen::MatrixXd l21_smoothed_gradient(const Eigen::Ref<const Eigen::MatrixXd>& V,
                                      double lambda) {
  const Eigen::ArrayXd denom =
      (V.rowwise().squaredNorm().array() + kPenaltySmoothing).sqrt();
  return lambda * (V.array().colwise() / denom).matrix();
}

namespace {

// W = 1 beta0 + Z Theta
Eigen::MatrixXd score_matrix(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                             const Eigen::Ref<const Eigen::MatrixXd>& theta,
                             const Eigen::Ref<const Eigen::RowVectorXd>& beta0) {
  return (Z * theta).rowwise() + beta0;
}

Eigen::ArrayXd linear_predictor(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                const Eigen::Ref<const Eigen::RowVectorXd>& beta0) {
  return (Z * theta).col(0).array() + beta0(0);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& W) {
  const Eigen::VectorXd rowmax = W.rowwise().maxCoeff();
  Eigen::MatrixXd A = (W.colwise() - rowmax).array().exp();
  A.array().colwise() /= A.rowwise().sum().array();
  return A;
}

double logit(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("zip loss requires tau strictly inside (0,1)");
  return std::log(tau) - std::log1p(-tau);
}

}  // namespace

double multiclass_loss(const Eigen::Ref<const Eigen::MatrixXd>& Y,
                       const Eigen::Ref<const Eigen::MatrixXd>& Z,
                       const Eigen::Ref<const Eigen::MatrixXd>& theta,
                       const Eigen::Ref<const Eigen::RowVectorXd>& beta0) {
  const Eigen::MatrixXd W = score_matrix(Z, theta, beta0);
  const Eigen::VectorXd rowmax = W.rowwise().maxCoeff();
  const Eigen::ArrayXd lse =
      rowmax.array() +
      (W.colwise() - rowmax).array().exp().rowwise().sum().log();
  return lse.sum() - Y.cwiseProduct(W).sum();
}

double poisson_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& t,
                    const Eigen::Ref<const Eigen::MatrixXd>& Z,
                    const Eigen::Ref<const Eigen::MatrixXd>& theta,
                    const Eigen::Ref<const Eigen::RowVectorXd>& beta0) {
  const Eigen::ArrayXd eta = linear_predictor(Z, theta, beta0);
  const Eigen::ArrayXd lam = t.array() * detail::exp_clipped(eta);
  double loss = (lam - y.array() * (t.array().log() + eta)).sum();
  for (Index i = 0; i < y.size(); ++i) loss += std::lgamma(y(i) + 1.0);
  return loss;
}

double zip_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                const Eigen::Ref<const Eigen::VectorXd>& t,
                const Eigen::Ref<const Eigen::MatrixXd>& Z,
                const Eigen::Ref<const Eigen::MatrixXd>& theta,
                const Eigen::Ref<const Eigen::RowVectorXd>& beta0, double tau) {
  const double c = logit(tau);
  const Eigen::ArrayXd eta = linear_predictor(Z, theta, beta0);
  const Eigen::ArrayXd lam = t.array() * detail::exp_clipped(eta);
  double loss = static_cast<double>(y.size()) * detail::log1p_exp(c);
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) {
      loss -= detail::logaddexp(c, -lam(i));
    } else {
      loss += lam(i) - y(i) * (std::log(t(i)) + eta(i));
      loss += std::lgamma(y(i) + 1.0);
    }
  }
  return loss;
}

double prediction_loss(const OutcomeData& outcome,
                       const Eigen::Ref<const Eigen::MatrixXd>& Z,
                       const Eigen::Ref<const Eigen::MatrixXd>& theta,
                       const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                       double tau) {
  switch (outcome.family) {
    case Family::MultiClass:
      return multiclass_loss(outcome.indicators, Z, theta, beta0);
    case Family::Poisson:
      return poisson_loss(outcome.counts, outcome.offsets, Z, theta, beta0);
    case Family::Zip:
      return zip_loss(outcome.counts, outcome.offsets, Z, theta, beta0, tau);
  }
  throw std::logic_error("unreachable");
}

ObjectiveBreakdown total_objective(const MultiViewDataset& data,
                                   const HipParams& params,
                                   const FitConfig& config) {
  if (config.family != data.family())
    throw DataError("total_objective: config family does not match data");
  ObjectiveBreakdown out;
  for (Index s = 0; s < data.num_subgroups(); ++s)
    out.prediction += prediction_loss(data.outcome[s], params.Z[s], params.theta,
                                      params.beta0, params.tau);
  for (Index d = 0; d < data.num_views(); ++d)
    for (Index s = 0; s < data.num_subgroups(); ++s)
      out.association +=
          association_loss(data.x(d, s), params.Z[s], params.loading(d, s));
  const PenaltyValue pen = penalty_value(params.G, params.Xi, config.lambda_g,
                                         config.lambda_xi, config.gamma);
  out.penalty_g = pen.g;
  out.penalty_xi = pen.xi;
  out.total = out.prediction + out.association + out.penalty_g + out.penalty_xi;
  return out;
}

Eigen::MatrixXd prediction_grad_z(const OutcomeData& outcome,
                                  const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                  const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                                  double tau) {
  if (outcome.family == Family::MultiClass) {
    const Eigen::MatrixXd R =
        softmax_rows(score_matrix(Z, theta, beta0)) - outcome.indicators;
    return R * theta.transpose();
  }
  const Eigen::ArrayXd eta = linear_predictor(Z, theta, beta0);
  const Eigen::ArrayXd lam = outcome.offsets.array() * detail::exp_clipped(eta);
  Eigen::VectorXd dfdeta(eta.size());
  if (outcome.family == Family::Poisson) {
    dfdeta = lam - outcome.counts.array();
  } else {
    const double c = logit(tau);
    for (Index i = 0; i < eta.size(); ++i)
      dfdeta(i) = outcome.counts(i) > 0.0
                      ? lam(i) - outcome.counts(i)
                      : lam(i) * detail::sigmoid(-(c + lam(i)));
  }
  return dfdeta * theta.transpose();
}

Eigen::MatrixXd prediction_grad_theta_beta(
    const OutcomeData& outcome, const Eigen::Ref<const Eigen::MatrixXd>& Z,
    const Eigen::Ref<const Eigen::MatrixXd>& theta,
    const Eigen::Ref<const Eigen::RowVectorXd>& beta0, double tau) {
  const Index K = theta.rows();
  Eigen::MatrixXd grad(K + 1, theta.cols());
  if (outcome.family == Family::MultiClass) {
    const Eigen::MatrixXd R =
        softmax_rows(score_matrix(Z, theta, beta0)) - outcome.indicators;
    grad.row(0) = R.colwise().sum();
    grad.bottomRows(K) = Z.transpose() * R;
    return grad;
  }
  const Eigen::ArrayXd eta = linear_predictor(Z, theta, beta0);
  const Eigen::ArrayXd lam = outcome.offsets.array() * detail::exp_clipped(eta);
  Eigen::VectorXd dfdeta(eta.size());
  if (outcome.family == Family::Poisson) {
    dfdeta = lam - outcome.counts.array();
  } else {
    const double c = logit(tau);
    for (Index i = 0; i < eta.size(); ++i)
      dfdeta(i) = outcome.counts(i) > 0.0
                      ? lam(i) - outcome.counts(i)
                      : lam(i) * detail::sigmoid(-(c + lam(i)));
  }
  grad(0, 0) = dfdeta.sum();
  grad.bottomRows(K) = Z.transpose() * dfdeta;
  return grad;
}

Eigen::MatrixXd gradients(const MultiViewDataset& data, const HipParams& params,
                          const FitConfig& config, const ParamBlock& block) {
  switch (block.kind) {
    case ParamBlock::Kind::Z: {
      const Index s = block.subgroup;
      Eigen::MatrixXd grad = prediction_grad_z(data.outcome[s], params.Z[s],
                                               params.theta, params.beta0,
                                               params.tau);
      for (Index d = 0; d < data.num_views(); ++d) {
        const Eigen::MatrixXd B = params.loading(d, s);
        grad.noalias() -= 2.0 * ((data.x(d, s) - params.Z[s] * B.transpose()) * B);
      }
      return grad;
    }
    case ParamBlock::Kind::G: {
      const Index d = block.view;
      Eigen::MatrixXd grad =
          Eigen::MatrixXd::Zero(params.G[d].rows(), params.G[d].cols());
      for (Index s = 0; s < data.num_subgroups(); ++s) {
        const Eigen::MatrixXd B = params.loading(d, s);
        const Eigen::MatrixXd R = data.x(d, s) - params.Z[s] * B.transpose();
        grad.noalias() -=
            2.0 * (R.transpose() * params.Z[s]).cwiseProduct(params.Xi[d][s]);
      }
      if (config.gamma_for(d) == 1)
        grad += l21_smoothed_gradient(params.G[d], config.lambda_g);
      return grad;
    }
    case ParamBlock::Kind::Xi: {
      const Index d = block.view;
      const Index s = block.subgroup;
      const Eigen::MatrixXd B = params.loading(d, s);
      const Eigen::MatrixXd R = data.x(d, s) - params.Z[s] * B.transpose();
      Eigen::MatrixXd grad =
          -2.0 * (R.transpose() * params.Z[s]).cwiseProduct(params.G[d]);
      if (config.gamma_for(d) == 1)
        grad += l21_smoothed_gradient(params.Xi[d][s], config.lambda_xi);
      return grad;
    }
    case ParamBlock::Kind::ThetaBeta: {
      Eigen::MatrixXd grad =
          Eigen::MatrixXd::Zero(params.theta.rows() + 1, params.theta.cols());
      for (Index s = 0; s < data.num_subgroups(); ++s)
        grad += prediction_grad_theta_beta(data.outcome[s], params.Z[s],
                                           params.theta, params.beta0, params.tau);
      return grad;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace hip
