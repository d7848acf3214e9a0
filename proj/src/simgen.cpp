#include "hip/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hip {

void ScenarioSpec::validate() const {
  if (p.empty() || n.empty()) throw DataError("scenario needs >= 1 view and subgroup");
  if (k_true < 1) throw DataError("scenario: k_true must be >= 1");
  if (signal_count < k_true)
    throw DataError("scenario: signal_count must be >= k_true for orthonormal loadings");
  const Index common = overlap == Overlap::Partial ? signal_count / 2 : signal_count;
  const Index unique = signal_count - common;
  const Index span = overlap == Overlap::Partial
                         ? common + num_subgroups() * unique
                         : signal_count;
  for (Index pd : p)
    if (span > pd) throw DataError("scenario: signal indices exceed view dimension");
  for (Index ns : n)
    if (ns < 2) throw DataError("scenario: subgroup sizes must be >= 2");
  if (!(tau >= 0.0 && tau < 1.0)) throw DataError("scenario: tau must be in [0,1)");
  if (!(noise_sd >= 0.0) || !(z_sd > 0.0)) throw DataError("scenario: bad sd");
}

ScenarioSpec ScenarioSpec::high_dim(ScenarioSpec base) {
  base.p = {2000, 3000};
  return base;
}

std::vector<Index> GroundTruth::unique_signal(Index d, Index s) const {
  const auto& sets = signal[static_cast<size_t>(d)];
  std::set<Index> others;
  for (size_t o = 0; o < sets.size(); ++o) {
    if (static_cast<Index>(o) == s) continue;
    others.insert(sets[o].begin(), sets[o].end());
  }
  std::vector<Index> unique;
  for (Index i : sets[static_cast<size_t>(s)])
    if (!others.count(i)) unique.push_back(i);
  return unique;
}

namespace {

std::vector<Index> signal_indices(const ScenarioSpec& spec, Index s) {
  std::vector<Index> idx;
  if (spec.overlap == Overlap::Full) {
    for (Index i = 0; i < spec.signal_count; ++i) idx.push_back(i);
    return idx;
  }
  const Index common = spec.signal_count / 2;
  const Index unique = spec.signal_count - common;
  for (Index i = 0; i < common; ++i) idx.push_back(i);
  const Index start = common + s * unique;
  for (Index i = 0; i < unique; ++i) idx.push_back(start + i);
  return idx;
}

// Theta rows cycle through the per-family generating pattern; the default
// k_true = 2 reproduces it exactly.
Eigen::MatrixXd generating_theta(const ScenarioSpec& spec) {
  const Index K = spec.k_true;
  if (spec.family == Family::MultiClass) {
    Eigen::MatrixXd theta(K, 2);
    for (Index k = 0; k < K; ++k)
      theta.row(k) = k % 2 == 0 ? Eigen::RowVector2d(1.0, 0.5)
                                : Eigen::RowVector2d(0.2, 0.8);
    return theta;
  }
  Eigen::MatrixXd theta(K, 1);
  for (Index k = 0; k < K; ++k) theta(k, 0) = k % 2 == 0 ? 0.7 : 0.2;
  return theta;
}

Eigen::RowVectorXd generating_beta0(const ScenarioSpec& spec) {
  if (spec.family == Family::MultiClass)
    return Eigen::RowVectorXd::Constant(2, 0.5);
  return Eigen::RowVectorXd::Constant(1, 2.0);
}

Eigen::MatrixXd standardized_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out = z;
  const Index n = z.rows();
  for (Index k = 0; k < z.cols(); ++k) {
    const double mean = out.col(k).mean();
    out.col(k).array() -= mean;
    const double sd =
        std::sqrt(out.col(k).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 1e-12) out.col(k) /= sd;
  }
  return out;
}

}  // namespace

GroundTruth generate_loadings(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  GroundTruth truth;
  truth.theta = generating_theta(spec);
  truth.beta0 = generating_beta0(spec);
  truth.tau = spec.family == Family::Zip ? spec.tau : 0.0;

  const Index D = spec.num_views();
  const Index S = spec.num_subgroups();
  truth.signal.resize(D);
  truth.b.resize(D);
  for (Index d = 0; d < D; ++d) {
    truth.signal[d].resize(S);
    truth.b[d].resize(S);
    for (Index s = 0; s < S; ++s) {
      const std::vector<Index> idx = signal_indices(spec, s);
      const Index m = static_cast<Index>(idx.size());

      Eigen::MatrixXd block(m, spec.k_true);
      for (Index r = 0; r < m; ++r)
        for (Index k = 0; k < spec.k_true; ++k) {
          const bool positive = rng.bernoulli(0.5);
          const double mag = rng.uniform(0.5, 1.0);
          block(r, k) = positive ? mag : -mag;
        }

      // Orthonormalize the signal block only; rows outside it stay exact zeros.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(block);
      Eigen::MatrixXd q =
          qr.householderQ() * Eigen::MatrixXd::Identity(m, spec.k_true);
      for (Index k = 0; k < q.cols(); ++k) {
        for (Index r = 0; r < q.rows(); ++r) {
          if (std::abs(q(r, k)) > 1e-12) {
            if (q(r, k) < 0.0) q.col(k) = -q.col(k);
            break;
          }
        }
      }

      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(spec.p[d], spec.k_true);
      for (Index r = 0; r < m; ++r) b.row(idx[r]) = q.row(r);
      truth.signal[d][s] = idx;
      truth.b[d][s] = std::move(b);
    }
  }
  return truth;
}

SimDraw generate_views(const ScenarioSpec& spec, const GroundTruth& truth,
                       Rng& rng) {
  const Index D = spec.num_views();
  const Index S = spec.num_subgroups();
  SimDraw draw;
  draw.z.resize(S);
  for (Index s = 0; s < S; ++s) {
    Eigen::MatrixXd z(spec.n[s], spec.k_true);
    for (Index i = 0; i < z.rows(); ++i)
      for (Index k = 0; k < z.cols(); ++k)
        z(i, k) = rng.normal(spec.z_mean, spec.z_sd);
    draw.z[s] = std::move(z);
  }
  draw.x.resize(D);
  for (Index d = 0; d < D; ++d) {
    draw.x[d].resize(S);
    for (Index s = 0; s < S; ++s) {
      Eigen::MatrixXd x = draw.z[s] * truth.b[d][s].transpose();
      if (spec.noise_sd > 0.0)
        for (Index i = 0; i < x.rows(); ++i)
          for (Index j = 0; j < x.cols(); ++j)
            x(i, j) += rng.normal(0.0, spec.noise_sd);
      draw.x[d][s] = std::move(x);
    }
  }
  return draw;
}

void generate_outcome(const ScenarioSpec& spec, const GroundTruth& truth,
                      SimDraw& draw, Rng& rng) {
  const Index S = spec.num_subgroups();
  draw.outcome.clear();
  draw.outcome.reserve(S);
  for (Index s = 0; s < S; ++s) {
    const Index n = spec.n[s];
    if (spec.family == Family::MultiClass) {
      Eigen::MatrixXd w = (draw.z[s] * truth.theta).rowwise() + truth.beta0;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < w.cols(); ++j) w(i, j) += rng.normal();
      Eigen::VectorXi labels(n);
      for (Index i = 0; i < n; ++i) {
        Index best = 0;
        w.row(i).maxCoeff(&best);
        labels(i) = static_cast<int>(best);
      }
      draw.outcome.push_back(OutcomeData::multiclass(labels, w.cols()));
    } else {
      const Eigen::MatrixXd z_std = standardized_columns(draw.z[s]);
      const Eigen::ArrayXd eta =
          (z_std * truth.theta).col(0).array() + truth.beta0(0);
      Eigen::VectorXd y(n);
      for (Index i = 0; i < n; ++i)
        y(i) = static_cast<double>(rng.poisson(std::exp(eta(i))));
      if (spec.family == Family::Zip)
        for (Index i = 0; i < n; ++i)
          if (rng.bernoulli(spec.tau)) y(i) = 0.0;
      draw.outcome.push_back(OutcomeData::count_family(
          spec.family, std::move(y), Eigen::VectorXd::Ones(n)));
    }
  }
}

MultiViewDataset assemble_dataset(const ScenarioSpec& spec, const SimDraw& draw) {
  MultiViewDataset data;
  for (Index d = 0; d < spec.num_views(); ++d) {
    ViewInfo view;
    view.name = "view" + std::to_string(d + 1);
    view.p = spec.p[d];
    view.variables.reserve(spec.p[d]);
    for (Index j = 0; j < spec.p[d]; ++j)
      view.variables.push_back(view.name + "_var" + std::to_string(j + 1));
    data.views.push_back(std::move(view));
  }
  for (Index s = 0; s < spec.num_subgroups(); ++s)
    data.subgroups.push_back({"subgroup" + std::to_string(s + 1), spec.n[s]});
  data.X = draw.x;
  data.outcome = draw.outcome;
  return data;
}

std::pair<MultiViewDataset, GroundTruth> generate_dataset(const ScenarioSpec& spec) {
  Rng rng(spec.seed);
  GroundTruth truth = generate_loadings(spec, rng);
  SimDraw draw = generate_views(spec, truth, rng);
  generate_outcome(spec, truth, draw, rng);
  truth.z = draw.z;
  return {assemble_dataset(spec, draw), std::move(truth)};
}

}  // namespace hip
