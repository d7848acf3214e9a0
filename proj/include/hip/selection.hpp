#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hip/types.hpp"

namespace hip {

enum class SearchMode { Grid, Random };

/// Lambda search plan. The grid for each of lambda_G, lambda_xi is
/// low + step*i for i = 1..num_steps with step = (high-low)/num_steps, so the
/// lower endpoint is excluded and the upper included.
struct SearchSpec {
  SearchMode mode = SearchMode::Random;
  int num_steps = 8;
  double lambda_low = 0.0;
  double lambda_high = 2.0;
  double criterion_delta = 1.0;    // 0 | 0.5 | 1
  double random_fraction = 0.20;   // fraction of the num_steps^2 pairs
  std::vector<Index> n_top;        // per view
  std::uint64_t seed = 0;

  void validate(Index num_views) const;
  std::vector<double> grid_values() const;
};

struct RankedBlock {
  Index view = 0;
  Index subgroup = 0;
  std::vector<Index> order;   // variable indices, descending row norm of B
  Eigen::VectorXd scores;     // row norms, indexed by variable
  std::vector<Index> top;     // first N_top of order, sorted ascending
};

struct SelectionResult {
  std::vector<RankedBlock> ranked;                 // d-major, then s
  std::vector<std::vector<Index>> union_by_view;   // sorted ascending
  Index nu = 0;                                    // sum of union sizes

  const RankedBlock& block(Index d, Index s, Index S) const {
    return ranked[static_cast<size_t>(d * S + s)];
  }
};

/// Ranks variables by descending row L2 norm of B^{d,s} (ties by ascending
/// index), selects the top N_top per (view, subgroup), and unions over
/// subgroups per view.
SelectionResult rank_variables(const HipParams& params,
                               const std::vector<Index>& n_top);

struct SubsetRefit {
  HipParams params;        // indexed by position within the reduced views
  FitTrace trace;
  MultiViewDataset data;   // the reduced dataset (union columns only)
};

/// Reruns fit on the union-selected columns with the same config and seed.
SubsetRefit subset_refit(const MultiViewDataset& data, const FitConfig& config,
                         const SelectionResult& selection);

/// eBIC_delta = 2 sum_s F + sum_s log(n_s) nu + 2 delta sum_d log sum_w C(p_d, w),
/// the binomial tail summed for w in [N_top_d, S*N_top_d] in log space.
double compute_ebic(const MultiViewDataset& data, const HipParams& subset_params,
                    const SelectionResult& selection, double delta);

struct EbicTriple {
  double ebic0 = 0.0;
  double ebic05 = 0.0;
  double ebic1 = 0.0;
  double by_delta(double delta) const;
};

EbicTriple compute_ebic_triple(const MultiViewDataset& data,
                               const HipParams& subset_params,
                               const SelectionResult& selection);

struct CandidateSummary {
  double lambda_g = 0.0;
  double lambda_xi = 0.0;
  bool ok = false;
  std::string error;
  bool converged_full = false;
  bool converged_subset = false;
  EbicTriple ebic;
  double criterion = 0.0;
  double wall_ms = 0.0;
};

/// Everything produced for one (lambda_G, lambda_xi) candidate.
struct FitBundle {
  FitConfig config;
  HipParams full_params;
  FitTrace full_trace;
  SelectionResult selection;
  HipParams subset_params;
  FitTrace subset_trace;
  MultiViewDataset subset_data;
  EbicTriple ebic;
};

struct LambdaSearchOutcome {
  std::vector<CandidateSummary> candidates;  // sorted by (lambda_g, lambda_xi)
  int winner = -1;                           // index into candidates
  FitBundle best;
};

/// Index of the minimal-criterion candidate among the ok ones; candidates are
/// expected sorted by (lambda_g, lambda_xi), which makes the first strict
/// minimum the lexicographic tie-break winner. -1 when none succeeded.
int pick_search_winner(const std::vector<CandidateSummary>& candidates);

/// Evaluates fit -> rank -> subset refit -> eBIC for every candidate pair and
/// returns the minimizer of the chosen criterion (ties broken by smaller
/// (lambda_g, lambda_xi)). Candidates run on `jobs` threads; the result does
/// not depend on jobs. Per-candidate failures are recorded and skipped;
/// throws only when every candidate fails.
LambdaSearchOutcome lambda_search(const MultiViewDataset& data,
                                  const FitConfig& base, const SearchSpec& spec,
                                  int jobs = 1);

enum class ScreeTarget { Concatenated, PerViewSubgroup };

struct ScreeEntry {
  std::string label;
  Index view = -1;
  Index subgroup = -1;
  Eigen::VectorXd sigma;
  int k = 1;
};

struct ScreeResult {
  std::vector<ScreeEntry> entries;
  int suggested_k = 1;
};

/// K from the singular-value drop rule: the largest k with
/// (sigma_k - sigma_{k+1}) / sigma_1 >= threshold, else 1.
int scree_k_from_sigma(const Eigen::VectorXd& sigma, double threshold);

ScreeResult select_k(const MultiViewDataset& data, double threshold,
                     ScreeTarget target);

}  // namespace hip
