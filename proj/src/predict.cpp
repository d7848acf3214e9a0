#include "hip/predict.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hip/losses.hpp"

namespace hip {

ScorePrediction predict_scores(
    const std::vector<std::vector<Eigen::MatrixXd>>& x_test,
    const std::vector<std::vector<Eigen::MatrixXd>>& b) {
  if (x_test.empty() || x_test.size() != b.size())
    throw DataError("predict_scores: view count mismatch");
  const size_t S = x_test.front().size();
  const Index K = b.front().front().cols();

  ScorePrediction out;
  out.z.resize(S);
  out.regularized.assign(S, 0);
  for (size_t s = 0; s < S; ++s) {
    Index total_p = 0;
    const Index n = x_test.front()[s].rows();
    for (size_t d = 0; d < b.size(); ++d) {
      if (x_test[d][s].cols() != b[d][s].rows() || x_test[d][s].rows() != n)
        throw DataError("predict_scores: test data does not match loadings");
      total_p += b[d][s].rows();
    }
    Eigen::MatrixXd x_cat(n, total_p);
    Eigen::MatrixXd b_cat(total_p, K);
    Index at = 0;
    for (size_t d = 0; d < b.size(); ++d) {
      x_cat.middleCols(at, x_test[d][s].cols()) = x_test[d][s];
      b_cat.middleRows(at, b[d][s].rows()) = b[d][s];
      at += b[d][s].rows();
    }
    if (b_cat.isZero(0.0))
      throw NumericalError("predict_scores: B_cat is identically zero");

    Eigen::MatrixXd M = b_cat.transpose() * b_cat;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
      M.diagonal().array() += 1e-8 * M.trace() / static_cast<double>(K);
      out.regularized[s] = 1;
    }
    out.z[s] = M.ldlt().solve((x_cat * b_cat).transpose()).transpose();
  }
  return out;
}

Eigen::VectorXi predict_classes(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                const Eigen::Ref<const Eigen::RowVectorXd>& beta0) {
  const Eigen::MatrixXd w = (z * theta).rowwise() + beta0;
  Eigen::VectorXi labels(w.rows());
  for (Index i = 0; i < w.rows(); ++i) {
    Index best = 0;
    w.row(i).maxCoeff(&best);  // first maximum: ties go to the smaller class
    labels(i) = static_cast<int>(best);
  }
  return labels;
}

Eigen::VectorXd predict_counts(const Eigen::Ref<const Eigen::MatrixXd>& z,
                               const Eigen::Ref<const Eigen::MatrixXd>& theta,
                               const Eigen::Ref<const Eigen::RowVectorXd>& beta0,
                               Family family, double tau,
                               const Eigen::Ref<const Eigen::VectorXd>& offsets) {
  const Eigen::ArrayXd eta = (z * theta).col(0).array() + beta0(0);
  Eigen::VectorXd mu = offsets.array() * detail::exp_clipped(eta);
  if (family == Family::Zip) mu *= (1.0 - tau);
  return mu;
}

double classification_accuracy(const Eigen::Ref<const Eigen::VectorXi>& truth,
                               const Eigen::Ref<const Eigen::VectorXi>& predicted) {
  if (truth.size() == 0) throw DataError("classification_accuracy: empty input");
  if (truth.size() != predicted.size())
    throw DataError("classification_accuracy: length mismatch");
  return static_cast<double>((truth.array() == predicted.array()).count()) /
         static_cast<double>(truth.size());
}

namespace {

// Poisson NLL with given means; the y=0, mu=0 saturated corner contributes 0.
double poisson_nll_mu(const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& mu) {
  double loss = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    loss += mu(i) + std::lgamma(y(i) + 1.0);
    if (y(i) > 0.0) loss -= y(i) * std::log(mu(i));
  }
  return loss;
}

double zip_nll_mu(const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::Ref<const Eigen::VectorXd>& mu, double tau) {
  if (tau <= 0.0) return poisson_nll_mu(y, mu);
  const double c = std::log(tau) - std::log1p(-tau);
  double loss = static_cast<double>(y.size()) * detail::log1p_exp(c);
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) {
      loss -= detail::logaddexp(c, -mu(i));
    } else {
      loss += mu(i) - y(i) * std::log(mu(i)) + std::lgamma(y(i) + 1.0);
    }
  }
  return loss;
}

// Exact per-observation fit: probability one on zeros, Poisson mode on
// positives. Identical expression for both count families.
double saturated_loss(const Eigen::Ref<const Eigen::VectorXd>& y) {
  double loss = 0.0;
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) > 0.0)
      loss += y(i) - y(i) * std::log(y(i)) + std::lgamma(y(i) + 1.0);
  return loss;
}

}  // namespace

std::pair<double, double> zip_intercept_fit(
    const Eigen::Ref<const Eigen::VectorXd>& y,
    const Eigen::Ref<const Eigen::VectorXd>& t) {
  const Index n = y.size();
  const double zero_frac =
      static_cast<double>((y.array() == 0.0).count()) / static_cast<double>(n);
  double tau = std::min(0.5 * zero_frac + 1e-6, 0.999);
  double beta0 = std::log(std::max(y.sum(), 1e-12) / t.sum());
  for (int it = 0; it < 500; ++it) {
    double w_sum = 0.0, yw_sum = 0.0, tw_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      double w = 0.0;
      if (y(i) == 0.0) {
        const double lam = t(i) * std::exp(beta0);
        w = tau / (tau + (1.0 - tau) * std::exp(-lam));
      }
      w_sum += w;
      yw_sum += (1.0 - w) * y(i);
      tw_sum += (1.0 - w) * t(i);
    }
    const double tau_new = w_sum / static_cast<double>(n);
    const double beta0_new =
        std::log(std::max(yw_sum, 1e-12) / std::max(tw_sum, 1e-12));
    const bool done =
        std::abs(tau_new - tau) < 1e-12 && std::abs(beta0_new - beta0) < 1e-12;
    tau = tau_new;
    beta0 = beta0_new;
    if (done) break;
  }
  return {beta0, tau};
}

DevianceResult deviance_explained(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::VectorXd>& t,
                                  const Eigen::Ref<const Eigen::VectorXd>& mu,
                                  Family family, double tau) {
  if (family == Family::MultiClass)
    throw DataError("deviance_explained applies to count families only");
  const double sat = saturated_loss(y);

  double null_loss = 0.0;
  if (family == Family::Poisson) {
    const double rate = y.sum() / t.sum();
    null_loss = poisson_nll_mu(y, t * rate);
  } else {
    const auto [beta0, tau_null] = zip_intercept_fit(y, t);
    null_loss = zip_nll_mu(y, t * std::exp(beta0), tau_null);
  }
  const double model_loss =
      family == Family::Poisson ? poisson_nll_mu(y, mu) : zip_nll_mu(y, mu, tau);

  DevianceResult out;
  out.d_null = 2.0 * (null_loss - sat);
  out.d_model = 2.0 * (model_loss - sat);
  if (std::abs(out.d_null) < 1e-12) {
    out.defined = false;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.defined = true;
  out.value = (out.d_null - out.d_model) / out.d_null;
  return out;
}

SelectionScores selection_metrics(const std::vector<Index>& truth,
                                  const std::vector<Index>& selected, Index p) {
  const std::set<Index> truth_set(truth.begin(), truth.end());
  const std::set<Index> selected_set(selected.begin(), selected.end());
  double tp = 0, fp = 0;
  for (Index i : selected_set)
    truth_set.count(i) ? ++tp : ++fp;
  const double fn = static_cast<double>(truth_set.size()) - tp;
  const double tn = static_cast<double>(p) - tp - fp - fn;

  SelectionScores out;
  if (tp + fn > 0.0)
    out.tpr = tp / (tp + fn);
  else
    out.tpr_zero_division = true;
  if (tn + fp > 0.0)
    out.fpr = fp / (tn + fp);
  else
    out.fpr_zero_division = true;
  const double f1_denom = tp + 0.5 * (fp + fn);
  if (f1_denom > 0.0)
    out.f1 = tp / f1_denom;
  else
    out.f1_zero_division = true;
  return out;
}

}  // namespace hip
