#include <doctest.h>

#include <cmath>

#include "hip/core.hpp"
#include "hip/losses.hpp"
#include "hip/optim.hpp"
#include "hip/selection.hpp"
#include "hip/simgen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hip;

namespace {

// params whose loading rows are handed in directly (Xi = 1 so B = G)
HipParams params_with_loadings(const std::vector<Eigen::MatrixXd>& b_by_subgroup) {
  HipParams params;
  const Index p = b_by_subgroup.front().rows();
  const Index k = b_by_subgroup.front().cols();
  params.G = {Eigen::MatrixXd::Ones(p, k)};
  params.Xi.resize(1);
  for (const auto& b : b_by_subgroup) {
    params.Xi[0].push_back(b);
    params.Z.push_back(Eigen::MatrixXd::Zero(4, k));
  }
  params.theta = Eigen::MatrixXd::Ones(k, 1);
  params.beta0 = Eigen::RowVectorXd::Ones(1);
  return params;
}

FitConfig small_config(const MultiViewDataset& data) {
  FitConfig config;
  config.family = data.family();
  config.k = 2;
  config.lambda_g = 0.5;
  config.lambda_xi = 0.5;
  config.iter_max = 6;
  config.z_solver.max_iter = 60;
  config.g_solver.max_iter = 60;
  config.xi_solver.max_iter = 60;
  config.theta_solver.max_iter = 60;
  return config;
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("rank_variables: norms, top set, and scores") {
  Eigen::MatrixXd b(3, 2);
  b << 3.0, 4.0, 0.1, 0.1, 1.0, 0.0;
  const auto params = params_with_loadings({b});
  const auto sel = rank_variables(params, {2});
  CHECK(sel.ranked[0].scores(0) == doctest::Approx(5.0));
  CHECK(sel.ranked[0].scores(2) == doctest::Approx(1.0));
  CHECK(sel.ranked[0].top == std::vector<Index>{0, 2});
  CHECK(sel.union_by_view[0] == std::vector<Index>{0, 2});
  CHECK(sel.nu == 2);
}

TEST_CASE("union bounds: identical and disjoint subgroup selections") {
  Eigen::MatrixXd strong(4, 1), weak(4, 1);
  strong << 9.0, 8.0, 0.1, 0.2;
  const auto same = rank_variables(params_with_loadings({strong, strong}), {2});
  CHECK(same.union_by_view[0].size() == 2);

  weak << 0.1, 0.2, 9.0, 8.0;
  const auto disjoint = rank_variables(params_with_loadings({strong, weak}), {2});
  CHECK(disjoint.union_by_view[0].size() == 4);
  CHECK(disjoint.nu == 4);
}

TEST_CASE("rank_variables breaks norm ties by ascending index") {
  Eigen::MatrixXd b(4, 1);
  b << 2.0, 5.0, 2.0, 2.0;
  const auto sel = rank_variables(params_with_loadings({b}), {2});
  CHECK(sel.ranked[0].order[0] == 1);
  CHECK(sel.ranked[0].order[1] == 0);  // tie among {0,2,3} -> smallest index
  CHECK(sel.ranked[0].top == std::vector<Index>{0, 1});
}

TEST_CASE("ranking is invariant to a positive rescaling of B") {
  auto data = testutil::random_dataset(Family::Poisson, {10}, {6}, 90);
  auto params = testutil::random_params(data, 2, 91);
  const auto before = rank_variables(params, {3});
  for (auto& row : params.Xi)
    for (auto& xi : row) xi *= 4.2;
  const auto after = rank_variables(params, {3});
  CHECK(before.ranked[0].order == after.ranked[0].order);
  CHECK(before.union_by_view == after.union_by_view);
}

TEST_CASE("nu equals the naive union oracle") {
  auto data = testutil::random_dataset(Family::Poisson, {10, 12}, {9, 7}, 92);
  auto params = testutil::random_params(data, 2, 93);
  const auto sel = rank_variables(params, {4, 3});
  Index nu = 0;
  for (Index d = 0; d < 2; ++d) {
    std::vector<std::vector<Index>> tops;
    for (Index s = 0; s < 2; ++s) tops.push_back(sel.block(d, s, 2).top);
    nu += oracle::union_count(tops);
  }
  CHECK(sel.nu == nu);
}

TEST_CASE("rank_variables rejects N_top above the view dimension") {
  auto data = testutil::random_dataset(Family::Poisson, {10}, {4}, 94);
  auto params = testutil::random_params(data, 2, 95);
  CHECK_THROWS_AS(rank_variables(params, {5}), DataError);
}

TEST_CASE("subset refit on the full selection reproduces the full fit") {
  const auto raw = testutil::random_dataset(Family::Poisson, {16, 14}, {5, 4}, 96);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  config.seed = 17;
  const auto [full_params, full_trace] = fit(data, config);
  const auto sel = rank_variables(full_params, {5, 4});  // everything
  REQUIRE(sel.nu == 9);
  const auto refit = subset_refit(data, config, sel);
  REQUIRE(refit.trace.iterations.size() == full_trace.iterations.size());
  for (size_t i = 0; i < full_trace.iterations.size(); ++i)
    CHECK(refit.trace.iterations[i].objective.total ==
          full_trace.iterations[i].objective.total);
}

TEST_CASE("subset refit keeps exactly the union columns") {
  const auto raw = testutil::random_dataset(Family::Poisson, {16, 14}, {8, 6}, 97);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  const auto [full_params, full_trace] = fit(data, config);
  const auto sel = rank_variables(full_params, {3, 2});
  const auto refit = subset_refit(data, config, sel);
  for (Index d = 0; d < 2; ++d) {
    CHECK(refit.params.G[d].rows() ==
          static_cast<Index>(sel.union_by_view[d].size()));
    CHECK(refit.data.p(d) == static_cast<Index>(sel.union_by_view[d].size()));
    // variable names map back to the originals
    for (size_t j = 0; j < sel.union_by_view[d].size(); ++j)
      CHECK(refit.data.views[d].variables[j] ==
            data.views[d].variables[sel.union_by_view[d][j]]);
  }
}

TEST_CASE("true-signal refit does not lose association on the kept columns") {
  ScenarioSpec spec;
  spec.p = {30, 25};
  spec.n = {40, 42};
  spec.signal_count = 6;
  spec.family = Family::Poisson;
  spec.seed = 5;
  auto [raw, truth] = generate_dataset(spec);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  config.iter_max = 30;
  const auto [full_params, full_trace] = fit(data, config);

  SelectionResult sel;
  sel.union_by_view.resize(2);
  for (Index d = 0; d < 2; ++d) {
    for (Index s = 0; s < 2; ++s) {
      RankedBlock block;
      block.view = d;
      block.subgroup = s;
      block.top = truth.signal[d][s];
      sel.ranked.push_back(block);
    }
    sel.union_by_view[d] = truth.signal[d][0];
    sel.nu += static_cast<Index>(sel.union_by_view[d].size());
  }
  const auto refit = subset_refit(data, config, sel);

  double full_assoc_on_kept = 0.0, refit_assoc = 0.0;
  for (Index d = 0; d < 2; ++d) {
    for (Index s = 0; s < 2; ++s) {
      const auto& keep = sel.union_by_view[d];
      Eigen::MatrixXd x_kept(data.n(s), static_cast<Index>(keep.size()));
      Eigen::MatrixXd b_kept(static_cast<Index>(keep.size()), 2);
      const Eigen::MatrixXd b_full = full_params.loading(d, s);
      for (size_t j = 0; j < keep.size(); ++j) {
        x_kept.col(static_cast<Index>(j)) = data.x(d, s).col(keep[j]);
        b_kept.row(static_cast<Index>(j)) = b_full.row(keep[j]);
      }
      full_assoc_on_kept += association_loss(x_kept, full_params.Z[s], b_kept);
      refit_assoc += association_loss(refit.data.x(d, s), refit.params.Z[s],
                                      refit.params.loading(d, s));
    }
  }
  CHECK(refit_assoc <= full_assoc_on_kept * (1.0 + 1e-9));
}

TEST_CASE("eBIC: delta 0 drops the combinatorial term; hand case 2 log 6") {
  auto data = testutil::random_dataset(Family::Poisson, {9, 8}, {3}, 98);
  auto params = testutil::random_params(data, 1, 99);
  const auto sel = rank_variables(params, {1});

  const double e0 = compute_ebic(data, params, sel, 0.0);
  double loss = 0.0;
  for (Index s = 0; s < 2; ++s)
    loss += prediction_loss(data.outcome[s], params.Z[s], params.theta,
                            params.beta0, params.tau);
  const double expected0 =
      2.0 * loss + (std::log(9.0) + std::log(8.0)) * static_cast<double>(sel.nu);
  CHECK(e0 == doctest::Approx(expected0).epsilon(1e-12));

  // D=1, p=3, N_top=1, S=2: third term at delta=1 is 2 log(C(3,1)+C(3,2))
  const double e1 = compute_ebic(data, params, sel, 1.0);
  CHECK(e1 - e0 == doctest::Approx(2.0 * std::log(6.0)).epsilon(1e-10));
}

TEST_CASE("eBIC grows linearly in nu at fixed loss") {
  auto data = testutil::random_dataset(Family::Poisson, {9, 8}, {6}, 100);
  auto params = testutil::random_params(data, 2, 101);
  Eigen::MatrixXd strong(6, 1), weak(6, 1);
  strong << 9, 8, 7, 0.1, 0.1, 0.1;
  weak << 0.1, 0.1, 0.1, 9, 8, 7;
  auto identical = rank_variables(params_with_loadings({strong, strong}), {3});
  auto disjoint = rank_variables(params_with_loadings({strong, weak}), {3});
  REQUIRE(disjoint.nu == 2 * identical.nu);
  const double log_n = std::log(9.0) + std::log(8.0);
  const double diff = compute_ebic(data, params, disjoint, 0.0) -
                      compute_ebic(data, params, identical, 0.0);
  CHECK(diff == doctest::Approx(log_n * static_cast<double>(identical.nu))
                    .epsilon(1e-10));
}

TEST_CASE("eBIC is monotone in delta") {
  auto data = testutil::random_dataset(Family::Zip, {11, 10}, {7, 5}, 102);
  auto params = testutil::random_params(data, 2, 103);
  const auto sel = rank_variables(params, {3, 2});
  const auto triple = compute_ebic_triple(data, params, sel);
  CHECK(triple.ebic0 <= triple.ebic05);
  CHECK(triple.ebic05 <= triple.ebic1);
}

TEST_CASE("grid values exclude the low endpoint and include the high one") {
  SearchSpec spec;
  spec.num_steps = 8;
  spec.lambda_low = 0.0;
  spec.lambda_high = 2.0;
  const auto values = spec.grid_values();
  REQUIRE(values.size() == 8);
  CHECK(values.front() == doctest::Approx(0.25));
  CHECK(values.back() == doctest::Approx(2.0));
  for (size_t i = 0; i < values.size(); ++i)
    CHECK(values[i] == doctest::Approx(0.25 * static_cast<double>(i + 1)));
}

TEST_CASE("lambda_search: candidate counts for grid and random modes") {
  const auto raw = testutil::random_dataset(Family::Poisson, {12, 11}, {5, 4}, 104);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  config.iter_max = 3;

  SearchSpec spec;
  spec.mode = SearchMode::Grid;
  spec.num_steps = 2;
  spec.n_top = {3, 3};
  const auto grid = lambda_search(data, config, spec);
  CHECK(grid.candidates.size() == 4);

  SearchSpec random_spec;
  random_spec.mode = SearchMode::Random;
  random_spec.num_steps = 8;
  random_spec.n_top = {3, 3};
  random_spec.seed = 3;
  const auto values = random_spec.grid_values();
  const auto random = lambda_search(data, config, random_spec);
  CHECK(random.candidates.size() == 13);  // ceil(0.20 * 64)
  // every random candidate lies on the grid
  for (const auto& c : random.candidates) {
    bool on_grid_g = false, on_grid_xi = false;
    for (double v : values) {
      on_grid_g = on_grid_g || std::abs(c.lambda_g - v) < 1e-12;
      on_grid_xi = on_grid_xi || std::abs(c.lambda_xi - v) < 1e-12;
    }
    CHECK(on_grid_g);
    CHECK(on_grid_xi);
  }
}

TEST_CASE("random search with fraction 1.0 equals the grid search") {
  const auto raw = testutil::random_dataset(Family::Poisson, {12, 10}, {4, 4}, 105);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  config.iter_max = 2;

  SearchSpec grid_spec;
  grid_spec.mode = SearchMode::Grid;
  grid_spec.num_steps = 2;
  grid_spec.n_top = {2, 2};
  SearchSpec random_spec = grid_spec;
  random_spec.mode = SearchMode::Random;
  random_spec.random_fraction = 1.0;
  random_spec.seed = 9;

  const auto a = lambda_search(data, config, grid_spec);
  const auto b = lambda_search(data, config, random_spec);
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(a.candidates[i].lambda_g == b.candidates[i].lambda_g);
    CHECK(a.candidates[i].lambda_xi == b.candidates[i].lambda_xi);
    CHECK(a.candidates[i].criterion == b.candidates[i].criterion);
  }
  CHECK(a.winner == b.winner);
}

TEST_CASE("search results are identical across jobs counts") {
  const auto raw = testutil::random_dataset(Family::Zip, {12, 10}, {4, 4}, 106);
  const auto [data, sp] = standardize_subgroup(raw);
  auto config = small_config(data);
  config.family = Family::Zip;
  config.iter_max = 2;
  SearchSpec spec;
  spec.mode = SearchMode::Grid;
  spec.num_steps = 2;
  spec.n_top = {2, 2};
  const auto seq = lambda_search(data, config, spec, 1);
  const auto par = lambda_search(data, config, spec, 4);
  REQUIRE(seq.candidates.size() == par.candidates.size());
  for (size_t i = 0; i < seq.candidates.size(); ++i)
    CHECK(seq.candidates[i].criterion == par.candidates[i].criterion);
  CHECK(seq.winner == par.winner);
}

TEST_CASE("exact criterion ties go to the lexicographically smaller lambdas") {
  std::vector<CandidateSummary> candidates(3);
  candidates[0] = {0.5, 1.0, true, "", true, true, {}, 10.0, 0.0};
  candidates[1] = {0.5, 1.5, true, "", true, true, {}, 10.0, 0.0};
  candidates[2] = {1.0, 0.5, true, "", true, true, {}, 11.0, 0.0};
  CHECK(pick_search_winner(candidates) == 0);
  candidates[0].ok = false;
  CHECK(pick_search_winner(candidates) == 1);
  candidates[1].criterion = 12.0;
  CHECK(pick_search_winner(candidates) == 2);
}

TEST_CASE("scree drop rule hand cases") {
  Eigen::VectorXd a(4);
  a << 10.0, 1.0, 0.9, 0.8;
  CHECK(scree_k_from_sigma(a, 0.2) == 1);
  Eigen::VectorXd b(4);
  b << 10.0, 7.0, 1.0, 0.9;
  CHECK(scree_k_from_sigma(b, 0.2) == 2);
  Eigen::VectorXd c(3);
  c << 5.0, 4.9, 4.8;  // no qualifying drop
  CHECK(scree_k_from_sigma(c, 0.2) == 1);
  CHECK_THROWS_AS(scree_k_from_sigma(a, 0.0), DataError);
  CHECK_THROWS_AS(scree_k_from_sigma(Eigen::VectorXd::Zero(3), 0.2),
                  NumericalError);
}

TEST_CASE("rank-1 matrix suggests K = 1 at any threshold") {
  auto data = testutil::random_dataset(Family::Poisson, {18}, {6}, 107);
  Rng rng(108);
  Eigen::VectorXd u(18), v(6);
  for (Index i = 0; i < 18; ++i) u(i) = rng.normal();
  for (Index j = 0; j < 6; ++j) v(j) = rng.normal();
  data.X[0][0] = u * v.transpose();
  for (double threshold : {0.1, 0.5, 0.9})
    CHECK(select_k(data, threshold, ScreeTarget::Concatenated).suggested_k == 1);
}

TEST_CASE("scree recovery on simulated data at threshold 0.20") {
  ScenarioSpec spec;
  spec.family = Family::Poisson;
  spec.seed = 21;
  auto [raw, truth] = generate_dataset(spec);  // full low-dim scenario
  const auto [data, sp] = standardize_subgroup(raw);

  // each (view, subgroup) block carries exactly K_true components
  const auto per_block = select_k(data, 0.20, ScreeTarget::PerViewSubgroup);
  CHECK(per_block.entries.size() == 4);
  for (const auto& entry : per_block.entries) CHECK(entry.k == 2);

  // stacking subgroups sees both subgroups' independent loading subspaces,
  // so the concatenated spectrum carries S * K_true strong components
  const auto stacked = select_k(data, 0.20, ScreeTarget::Concatenated);
  CHECK(stacked.suggested_k == 4);
  CHECK(stacked.entries[0].sigma.size() > 4);

  // with a single subgroup the concatenated rule recovers K_true directly
  ScenarioSpec single = spec;
  single.n = {250};
  single.seed = 22;
  auto [raw1, truth1] = generate_dataset(single);
  const auto [data1, sp1] = standardize_subgroup(raw1);
  CHECK(select_k(data1, 0.20, ScreeTarget::Concatenated).suggested_k == 2);
}

}  // TEST_SUITE
