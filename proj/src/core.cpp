#include "hip/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hip/optim.hpp"
#include "hip/rng.hpp"

namespace hip {

namespace {

void add(ValidationReport& report, std::string kind, Index d, Index s,
         std::string message) {
  report.violations.push_back({std::move(kind), d, s, std::move(message)});
}

bool is_integral(double x) { return std::isfinite(x) && x == std::floor(x); }

}  // namespace

ValidationReport validate_dataset(const MultiViewDataset& data) {
  ValidationReport report;
  const Index D = data.num_views();
  const Index S = data.num_subgroups();
  if (D < 1) add(report, "structure", -1, -1, "dataset has no views");
  if (S < 1) add(report, "structure", -1, -1, "dataset has no subgroups");

  if (static_cast<Index>(data.X.size()) != D) {
    add(report, "structure", -1, -1, "X must hold one row of matrices per view");
    return report;
  }
  for (Index d = 0; d < D; ++d) {
    if (static_cast<Index>(data.X[d].size()) != S) {
      add(report, "structure", d, -1, "X[d] must hold one matrix per subgroup");
      return report;
    }
  }

  for (Index d = 0; d < D; ++d) {
    const auto& view = data.views[d];
    if (static_cast<Index>(view.variables.size()) != view.p)
      add(report, "structure", d, -1, "variable name list does not match p");
    for (Index s = 0; s < S; ++s) {
      const auto& x = data.x(d, s);
      std::ostringstream os;
      if (x.rows() != data.n(s) || x.cols() != data.p(d)) {
        os << "X is " << x.rows() << "x" << x.cols() << ", expected "
           << data.n(s) << "x" << data.p(d);
        add(report, "shape", d, s, os.str());
        continue;
      }
      if (!x.allFinite())
        add(report, "nonfinite", d, s, "matrix contains non-finite entries");
    }
  }

  if (static_cast<Index>(data.outcome.size()) != S) {
    add(report, "structure", -1, -1, "one outcome per subgroup required");
    return report;
  }
  const Family family = data.outcome.front().family;
  Index num_classes = data.outcome.front().num_classes();
  for (Index s = 0; s < S; ++s) {
    const auto& y = data.outcome[s];
    if (y.family != family)
      add(report, "family", -1, s, "outcome family differs across subgroups");
    if (y.n() != data.n(s)) {
      std::ostringstream os;
      os << "outcome has " << y.n() << " rows, expected " << data.n(s);
      add(report, "shape", -1, s, os.str());
      continue;
    }
    if (family == Family::MultiClass) {
      if (y.num_classes() != num_classes) {
        add(report, "shape", -1, s, "class count differs across subgroups");
        continue;
      }
      for (Index i = 0; i < y.indicators.rows(); ++i) {
        double sum = 0.0;
        bool binary = true;
        for (Index j = 0; j < y.indicators.cols(); ++j) {
          const double v = y.indicators(i, j);
          binary = binary && (v == 0.0 || v == 1.0);
          sum += v;
        }
        if (!binary || sum != 1.0) {
          std::ostringstream os;
          os << "row " << i << " is not a one-hot indicator";
          add(report, "indicator", -1, s, os.str());
          break;
        }
      }
      for (Index c = 0; c < num_classes; ++c) {
        if ((y.indicators.col(c).array() != 0.0).count() == 0) {
          std::ostringstream os;
          os << "class " << c << " has no observations in this subgroup";
          add(report, "empty_class", -1, s, os.str());
        }
      }
    } else {
      for (Index i = 0; i < y.counts.size(); ++i) {
        if (!is_integral(y.counts(i)) || y.counts(i) < 0.0) {
          std::ostringstream os;
          os << "count at row " << i << " is not a non-negative integer";
          add(report, "count", -1, s, os.str());
          break;
        }
      }
      for (Index i = 0; i < y.offsets.size(); ++i) {
        if (!(y.offsets(i) > 0.0) || !std::isfinite(y.offsets(i))) {
          std::ostringstream os;
          os << "offset at row " << i << " is not strictly positive";
          add(report, "offset", -1, s, os.str());
          break;
        }
      }
    }
  }
  return report;
}

namespace {

constexpr double kConstantTol = 1e-12;

}  // namespace

std::pair<MultiViewDataset, StandardizationParams> standardize_subgroup(
    const MultiViewDataset& data) {
  MultiViewDataset out = data;
  StandardizationParams params;
  params.mode = Standardization::Subgroup;
  params.stats.resize(data.X.size());
  for (Index d = 0; d < data.num_views(); ++d) {
    params.stats[d].resize(data.X[d].size());
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      const Eigen::MatrixXd& x = data.x(d, s);
      const Index n = x.rows();
      const Index p = x.cols();
      ColumnStats stats;
      stats.mean = x.colwise().mean();
      stats.scale.resize(p);
      stats.constant.assign(p, 0);
      Eigen::MatrixXd& y = out.X[d][s];
      for (Index j = 0; j < p; ++j) {
        const Eigen::VectorXd centered = x.col(j).array() - stats.mean(j);
        const double sd =
            n > 1 ? std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1))
                  : 0.0;
        if (sd < kConstantTol * std::max(1.0, std::abs(stats.mean(j)))) {
          stats.scale(j) = 0.0;
          stats.constant[j] = 1;
          y.col(j).setZero();
        } else {
          stats.scale(j) = sd;
          y.col(j) = centered / sd;
        }
      }
      params.stats[d][s] = std::move(stats);
    }
  }
  return {std::move(out), std::move(params)};
}

MultiViewDataset apply_standardization(const MultiViewDataset& data,
                                       const StandardizationParams& params) {
  if (params.mode == Standardization::None) return data;
  if (params.stats.size() != data.X.size())
    throw DataError("standardization params cover a different number of views");
  MultiViewDataset out = data;
  for (Index d = 0; d < data.num_views(); ++d) {
    if (params.stats[d].size() != data.X[d].size())
      throw DataError("standardization params cover a different number of subgroups");
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      const ColumnStats& stats = params.stats[d][s];
      const Eigen::MatrixXd& x = data.x(d, s);
      if (stats.mean.size() != x.cols())
        throw DataError("standardization params do not match data columns");
      Eigen::MatrixXd& y = out.X[d][s];
      for (Index j = 0; j < x.cols(); ++j) {
        if (stats.constant[j])
          y.col(j).setZero();
        else
          y.col(j) = (x.col(j).array() - stats.mean(j)) / stats.scale(j);
      }
    }
  }
  return out;
}

HipParams initialize_params_with_z(const MultiViewDataset& data,
                                   const FitConfig& config,
                                   std::vector<Eigen::MatrixXd> z) {
  const Index D = data.num_views();
  const Index S = data.num_subgroups();
  const Index K = config.k;
  const Index q = config.family == Family::MultiClass
                      ? data.outcome.front().num_classes()
                      : 1;

  HipParams params;
  params.Z = std::move(z);
  params.G.reserve(D);
  for (Index d = 0; d < D; ++d)
    params.G.push_back(Eigen::MatrixXd::Ones(data.p(d), K));
  params.theta = Eigen::MatrixXd::Ones(K, q);
  params.beta0 = Eigen::RowVectorXd::Ones(q);

  params.Xi.resize(D);
  for (Index d = 0; d < D; ++d) {
    params.Xi[d].resize(S);
    for (Index s = 0; s < S; ++s) {
      const Eigen::MatrixXd& Z = params.Z[s];
      Eigen::MatrixXd M = Z.transpose() * Z;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (!(lo > 0.0) || hi / lo > 1e12)
        M.diagonal().array() += 1e-8;
      // Xi = [ (Z^T Z)^-1 Z^T X ]^T
      params.Xi[d][s] =
          M.ldlt().solve(Z.transpose() * data.x(d, s)).transpose();
    }
  }

  if (config.family == Family::Zip) params.tau = update_tau(data, params);
  return params;
}

HipParams initialize_params(const MultiViewDataset& data, const FitConfig& config) {
  config.validate(data.num_views());
  if (config.family != data.family())
    throw DataError("config family does not match dataset family");
  for (Index d = 0; d < data.num_views(); ++d)
    for (Index s = 0; s < data.num_subgroups(); ++s)
      if (config.k > std::min(data.n(s), data.p(d)))
        throw DataError("K exceeds min(n_s, p_d)");

  Rng rng(config.seed);
  std::vector<Eigen::MatrixXd> z;
  z.reserve(data.num_subgroups());
  for (Index s = 0; s < data.num_subgroups(); ++s) {
    Eigen::MatrixXd zs(data.n(s), config.k);
    for (Index i = 0; i < zs.rows(); ++i)
      for (Index k = 0; k < zs.cols(); ++k) zs(i, k) = rng.uniform(0.9, 1.1);
    z.push_back(std::move(zs));
  }
  return initialize_params_with_z(data, config, std::move(z));
}

}  // namespace hip
