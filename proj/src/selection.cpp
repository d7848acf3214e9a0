#include "hip/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "hip/losses.hpp"
#include "hip/optim.hpp"
#include "hip/rng.hpp"

namespace hip {

void SearchSpec::validate(Index num_views) const {
  if (num_steps < 2) throw DataError("SearchSpec: num_steps must be >= 2");
  if (!(lambda_high > lambda_low) || lambda_low < 0.0)
    throw DataError("SearchSpec: need 0 <= low < high for the lambda range");
  if (criterion_delta != 0.0 && criterion_delta != 0.5 && criterion_delta != 1.0)
    throw DataError("SearchSpec: criterion delta must be 0, 0.5, or 1");
  if (!(random_fraction > 0.0) || random_fraction > 1.0)
    throw DataError("SearchSpec: random_fraction must be in (0, 1]");
  if (static_cast<Index>(n_top.size()) != num_views)
    throw DataError("SearchSpec: n_top must have one entry per view");
  for (Index v : n_top)
    if (v < 1) throw DataError("SearchSpec: n_top entries must be >= 1");
}

std::vector<double> SearchSpec::grid_values() const {
  const double step = (lambda_high - lambda_low) / num_steps;
  std::vector<double> values(num_steps);
  for (int i = 1; i <= num_steps; ++i) values[i - 1] = lambda_low + step * i;
  return values;
}

SelectionResult rank_variables(const HipParams& params,
                               const std::vector<Index>& n_top) {
  const Index D = static_cast<Index>(params.G.size());
  const Index S = static_cast<Index>(params.Z.size());
  if (static_cast<Index>(n_top.size()) != D)
    throw DataError("rank_variables: n_top must have one entry per view");

  SelectionResult result;
  result.union_by_view.resize(D);
  for (Index d = 0; d < D; ++d) {
    const Index p = params.G[d].rows();
    if (n_top[d] < 1 || n_top[d] > p)
      throw DataError("rank_variables: N_top outside [1, p_d]");
    std::set<Index> view_union;
    for (Index s = 0; s < S; ++s) {
      RankedBlock block;
      block.view = d;
      block.subgroup = s;
      block.scores = params.loading(d, s).rowwise().norm();
      block.order.resize(p);
      std::iota(block.order.begin(), block.order.end(), Index{0});
      std::sort(block.order.begin(), block.order.end(), [&](Index a, Index b) {
        if (block.scores(a) != block.scores(b))
          return block.scores(a) > block.scores(b);
        return a < b;  // ties by ascending variable index
      });
      block.top.assign(block.order.begin(), block.order.begin() + n_top[d]);
      std::sort(block.top.begin(), block.top.end());
      view_union.insert(block.top.begin(), block.top.end());
      result.ranked.push_back(std::move(block));
    }
    result.union_by_view[d].assign(view_union.begin(), view_union.end());
    result.nu += static_cast<Index>(view_union.size());
  }
  return result;
}

SubsetRefit subset_refit(const MultiViewDataset& data, const FitConfig& config,
                         const SelectionResult& selection) {
  SubsetRefit out;
  out.data.subgroups = data.subgroups;
  out.data.outcome = data.outcome;
  out.data.views.resize(data.views.size());
  out.data.X.resize(data.X.size());
  for (Index d = 0; d < data.num_views(); ++d) {
    const auto& keep = selection.union_by_view[d];
    if (keep.empty()) throw DataError("subset_refit: empty selection for a view");
    ViewInfo view;
    view.name = data.views[d].name;
    view.p = static_cast<Index>(keep.size());
    for (Index j : keep) view.variables.push_back(data.views[d].variables[j]);
    out.data.views[d] = std::move(view);
    out.data.X[d].resize(data.X[d].size());
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      Eigen::MatrixXd x(data.n(s), static_cast<Index>(keep.size()));
      for (size_t j = 0; j < keep.size(); ++j)
        x.col(static_cast<Index>(j)) = data.x(d, s).col(keep[j]);
      out.data.X[d][s] = std::move(x);
    }
  }
  auto [params, trace] = fit(out.data, config);
  out.params = std::move(params);
  out.trace = std::move(trace);
  return out;
}

double compute_ebic(const MultiViewDataset& data, const HipParams& subset_params,
                    const SelectionResult& selection, double delta) {
  const Index S = data.num_subgroups();
  double loss = 0.0;
  for (Index s = 0; s < S; ++s)
    loss += prediction_loss(data.outcome[s], subset_params.Z[s],
                            subset_params.theta, subset_params.beta0,
                            subset_params.tau);

  double log_n_nu = 0.0;
  for (Index s = 0; s < S; ++s)
    log_n_nu += std::log(static_cast<double>(data.n(s))) *
                static_cast<double>(selection.nu);

  double third = 0.0;
  if (delta != 0.0) {
    for (Index d = 0; d < data.num_views(); ++d) {
      const double p = static_cast<double>(data.p(d));
      const Index n_top = static_cast<Index>(selection.block(d, 0, S).top.size());
      const Index w_lo = n_top;
      const Index w_hi = std::min<Index>(S * n_top, data.p(d));
      // log sum_w C(p, w) via log-sum-exp over log C(p, w)
      double max_lc = -std::numeric_limits<double>::infinity();
      std::vector<double> lc;
      for (Index w = w_lo; w <= w_hi; ++w) {
        const double v = std::lgamma(p + 1.0) -
                         std::lgamma(static_cast<double>(w) + 1.0) -
                         std::lgamma(p - static_cast<double>(w) + 1.0);
        lc.push_back(v);
        max_lc = std::max(max_lc, v);
      }
      double sum = 0.0;
      for (double v : lc) sum += std::exp(v - max_lc);
      third += max_lc + std::log(sum);
    }
    third *= 2.0 * delta;
  }
  return 2.0 * loss + log_n_nu + third;
}

double EbicTriple::by_delta(double delta) const {
  if (delta == 0.0) return ebic0;
  if (delta == 0.5) return ebic05;
  if (delta == 1.0) return ebic1;
  throw DataError("eBIC delta must be 0, 0.5, or 1");
}

EbicTriple compute_ebic_triple(const MultiViewDataset& data,
                               const HipParams& subset_params,
                               const SelectionResult& selection) {
  EbicTriple out;
  out.ebic0 = compute_ebic(data, subset_params, selection, 0.0);
  out.ebic05 = compute_ebic(data, subset_params, selection, 0.5);
  out.ebic1 = compute_ebic(data, subset_params, selection, 1.0);
  return out;
}

namespace {

struct CandidatePair {
  double lambda_g;
  double lambda_xi;
};

std::vector<CandidatePair> candidate_pairs(const SearchSpec& spec) {
  const std::vector<double> values = spec.grid_values();
  std::vector<CandidatePair> all;
  all.reserve(values.size() * values.size());
  for (double lg : values)
    for (double lxi : values) all.push_back({lg, lxi});

  if (spec.mode == SearchMode::Grid) return all;

  const size_t m = static_cast<size_t>(
      std::ceil(spec.random_fraction * static_cast<double>(all.size())));
  std::vector<size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(spec.seed);
  for (size_t i = 0; i < m; ++i) {  // partial Fisher-Yates
    const size_t j =
        i + static_cast<size_t>(rng.uniform() * static_cast<double>(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  std::vector<CandidatePair> chosen;
  chosen.reserve(m);
  for (size_t i : idx) chosen.push_back(all[i]);
  return chosen;
}

}  // namespace

LambdaSearchOutcome lambda_search(const MultiViewDataset& data,
                                  const FitConfig& base, const SearchSpec& spec,
                                  int jobs) {
  spec.validate(data.num_views());
  base.validate(data.num_views());

  const std::vector<CandidatePair> pairs = candidate_pairs(spec);
  const size_t count = pairs.size();
  std::vector<CandidateSummary> summaries(count);
  std::vector<std::optional<FitBundle>> bundles(count);

  const auto evaluate = [&](size_t i) {
    const auto started = std::chrono::steady_clock::now();
    CandidateSummary& summary = summaries[i];
    summary.lambda_g = pairs[i].lambda_g;
    summary.lambda_xi = pairs[i].lambda_xi;
    try {
      FitBundle bundle;
      bundle.config = base;
      bundle.config.lambda_g = pairs[i].lambda_g;
      bundle.config.lambda_xi = pairs[i].lambda_xi;
      auto [params, trace] = fit(data, bundle.config);
      bundle.full_params = std::move(params);
      bundle.full_trace = std::move(trace);
      bundle.selection = rank_variables(bundle.full_params, spec.n_top);
      SubsetRefit refit = subset_refit(data, bundle.config, bundle.selection);
      bundle.subset_params = std::move(refit.params);
      bundle.subset_trace = std::move(refit.trace);
      bundle.subset_data = std::move(refit.data);
      bundle.ebic =
          compute_ebic_triple(data, bundle.subset_params, bundle.selection);
      summary.ok = true;
      summary.converged_full = bundle.full_trace.converged;
      summary.converged_subset = bundle.subset_trace.converged;
      summary.ebic = bundle.ebic;
      summary.criterion = bundle.ebic.by_delta(spec.criterion_delta);
      bundles[i] = std::move(bundle);
    } catch (const std::exception& e) {
      summary.ok = false;
      summary.error = e.what();
    }
    summary.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (size_t i = 0; i < count; ++i) evaluate(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (size_t i = static_cast<size_t>(w); i < count;
             i += static_cast<size_t>(workers))
          evaluate(i);
      });
    for (auto& th : pool) th.join();
  }

  LambdaSearchOutcome out;
  const int winner = pick_search_winner(summaries);
  if (winner < 0) {
    std::ostringstream os;
    os << "lambda_search: all " << count << " candidates failed";
    if (!summaries.empty()) os << "; first error: " << summaries[0].error;
    throw NumericalError(os.str());
  }
  out.candidates = std::move(summaries);
  out.winner = winner;
  out.best = std::move(*bundles[static_cast<size_t>(winner)]);
  return out;
}

int pick_search_winner(const std::vector<CandidateSummary>& candidates) {
  int winner = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].ok) continue;
    if (winner < 0 ||
        candidates[i].criterion < candidates[static_cast<size_t>(winner)].criterion)
      winner = static_cast<int>(i);
  }
  return winner;
}

int scree_k_from_sigma(const Eigen::VectorXd& sigma, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw DataError("scree threshold must lie in (0, 1)");
  if (sigma.size() == 0 || !(sigma(0) > 0.0))
    throw NumericalError("scree: zero matrix has no informative spectrum");
  int k = 1;
  for (Index i = 0; i + 1 < sigma.size(); ++i) {
    const double drop = (sigma(i) - sigma(i + 1)) / sigma(0);
    if (drop >= threshold) k = static_cast<int>(i) + 1;
  }
  return k;
}

ScreeResult select_k(const MultiViewDataset& data, double threshold,
                     ScreeTarget target) {
  ScreeResult result;
  if (target == ScreeTarget::Concatenated) {
    Index total_p = 0;
    for (Index d = 0; d < data.num_views(); ++d) total_p += data.p(d);
    Eigen::MatrixXd stacked(data.total_samples(), total_p);
    Index row = 0;
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      Index col = 0;
      for (Index d = 0; d < data.num_views(); ++d) {
        stacked.block(row, col, data.n(s), data.p(d)) = data.x(d, s);
        col += data.p(d);
      }
      row += data.n(s);
    }
    ScreeEntry entry;
    entry.label = "concatenated";
    entry.sigma = stacked.bdcSvd().singularValues();
    entry.k = scree_k_from_sigma(entry.sigma, threshold);
    result.suggested_k = entry.k;
    result.entries.push_back(std::move(entry));
    return result;
  }

  int best = 1;
  for (Index d = 0; d < data.num_views(); ++d) {
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      ScreeEntry entry;
      entry.view = d;
      entry.subgroup = s;
      entry.label = data.views[d].name + "/" + data.subgroups[s].name;
      entry.sigma = data.x(d, s).bdcSvd().singularValues();
      entry.k = scree_k_from_sigma(entry.sigma, threshold);
      best = std::max(best, entry.k);
      result.entries.push_back(std::move(entry));
    }
  }
  result.suggested_k = best;
  return result;
}

}  // namespace hip
