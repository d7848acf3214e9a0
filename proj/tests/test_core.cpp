#include <doctest.h>

#include <cmath>

#include "hip/core.hpp"
#include "hip/optim.hpp"
#include "hip/rng.hpp"
#include "test_util.hpp"

using namespace hip;

TEST_SUITE("core") {

TEST_CASE("rng is deterministic and portable across instances") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(42);
  // mt19937_64 reference value: the raw stream is standard-specified
  std::mt19937_64 ref(42);
  CHECK(c.next_u64() == ref());
}

TEST_CASE("rng distributions have sane moments") {
  Rng rng(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(3.0, 2.0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 3.0) < 0.05);
  CHECK(std::abs(var - 4.0) < 0.15);

  double psum = 0.0;
  for (int i = 0; i < n; ++i) psum += static_cast<double>(rng.poisson(40.0));
  CHECK(std::abs(psum / n - 40.0) < 0.3);
  double big = 0.0;
  for (int i = 0; i < 2000; ++i) big += static_cast<double>(rng.poisson(800.0));
  CHECK(std::abs(big / 2000 - 800.0) < 5.0);
}

TEST_CASE("validate_dataset passes a consistent two-view dataset") {
  const auto data =
      testutil::random_dataset(Family::Poisson, {20, 22}, {5, 7}, 1);
  CHECK(validate_dataset(data).ok());
}

TEST_CASE("validate_dataset flags a row-count mismatch naming the block") {
  auto data = testutil::random_dataset(Family::Poisson, {20, 22}, {5, 7}, 2);
  data.X[1][0].conservativeResize(19, Eigen::NoChange);
  const auto report = validate_dataset(data);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations[0].kind == "shape");
  CHECK(report.violations[0].view == 1);
  CHECK(report.violations[0].subgroup == 0);
}

TEST_CASE("validate_dataset flags zero offsets and non-finite entries") {
  auto data = testutil::random_dataset(Family::Zip, {12}, {4}, 3);
  data.outcome[0].offsets(5) = 0.0;
  data.X[0][0](1, 1) = std::numeric_limits<double>::quiet_NaN();
  const auto report = validate_dataset(data);
  bool saw_offset = false, saw_nonfinite = false;
  for (const auto& v : report.violations) {
    saw_offset = saw_offset || v.kind == "offset";
    saw_nonfinite = saw_nonfinite || v.kind == "nonfinite";
  }
  CHECK(saw_offset);
  CHECK(saw_nonfinite);
}

TEST_CASE("validate_dataset flags an empty class in one subgroup") {
  auto data =
      testutil::random_dataset(Family::MultiClass, {12, 12}, {4}, 4, 3);
  Eigen::VectorXi labels(12);
  for (Index i = 0; i < 12; ++i) labels(i) = static_cast<int>(i % 2);  // class 2 missing
  data.outcome[1] = OutcomeData::multiclass(labels, 3);
  const auto report = validate_dataset(data);
  bool saw = false;
  for (const auto& v : report.violations)
    saw = saw || (v.kind == "empty_class" && v.subgroup == 1);
  CHECK(saw);
}

TEST_CASE("standardize_subgroup: [1,2,3] becomes mean 0, variance 1") {
  auto data = testutil::random_dataset(Family::Poisson, {3}, {1}, 5);
  data.X[0][0] << 1.0, 2.0, 3.0;
  const auto [out, params] = standardize_subgroup(data);
  const auto& col = out.X[0][0];
  CHECK(std::abs(col.mean()) < 1e-15);
  const double var = (col.array() - col.mean()).square().sum() / 2.0;
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(params.stats[0][0].mean(0) == doctest::Approx(2.0));
  CHECK(params.stats[0][0].scale(0) == doctest::Approx(1.0));
}

TEST_CASE("standardize_subgroup zeroes constant columns and flags them") {
  auto data = testutil::random_dataset(Family::Poisson, {3}, {2}, 6);
  data.X[0][0].col(0).setConstant(5.0);
  const auto [out, params] = standardize_subgroup(data);
  CHECK(out.X[0][0].col(0).isZero(0.0));
  CHECK(params.stats[0][0].constant[0] == 1);
  CHECK(params.stats[0][0].constant[1] == 0);
}

TEST_CASE("held-out data transforms with training parameters, not its own") {
  auto train = testutil::random_dataset(Family::Poisson, {25}, {3}, 7);
  auto test = testutil::random_dataset(Family::Poisson, {10}, {3}, 8);
  const auto [train_std, params] = standardize_subgroup(train);
  const auto test_std = apply_standardization(test, params);
  for (Index j = 0; j < 3; ++j) {
    const double mean = params.stats[0][0].mean(j);
    const double scale = params.stats[0][0].scale(j);
    for (Index i = 0; i < 10; ++i) {
      const double expected = (test.X[0][0](i, j) - mean) / scale;
      CHECK(test_std.X[0][0](i, j) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("standardization is idempotent to 1e-12") {
  auto data = testutil::random_dataset(Family::Poisson, {30, 17}, {6, 4}, 9);
  const auto [once, p1] = standardize_subgroup(data);
  const auto [twice, p2] = standardize_subgroup(once);
  for (Index d = 0; d < data.num_views(); ++d)
    for (Index s = 0; s < data.num_subgroups(); ++s)
      CHECK((twice.X[d][s] - once.X[d][s]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initialize_params is bit-identical for a fixed seed") {
  const auto data = testutil::random_dataset(Family::Zip, {15, 18}, {6, 5}, 10);
  FitConfig config;
  config.family = Family::Zip;
  config.k = 2;
  config.seed = 99;
  const auto a = initialize_params(data, config);
  const auto b = initialize_params(data, config);
  for (Index s = 0; s < data.num_subgroups(); ++s) CHECK(a.Z[s] == b.Z[s]);
  for (Index d = 0; d < data.num_views(); ++d) {
    CHECK(a.G[d] == b.G[d]);
    for (Index s = 0; s < data.num_subgroups(); ++s)
      CHECK(a.Xi[d][s] == b.Xi[d][s]);
  }
  CHECK(a.theta == b.theta);
  CHECK(a.beta0 == b.beta0);
  CHECK(a.tau == b.tau);
  CHECK(a.Z[0].minCoeff() >= 0.9);
  CHECK(a.Z[0].maxCoeff() <= 1.1);
}

TEST_CASE("Xi init solves the K=1 constant-column least squares by hand") {
  auto data = testutil::random_dataset(Family::Poisson, {8}, {1}, 11);
  data.X[0][0].setConstant(2.0);
  FitConfig config;
  config.family = Family::Poisson;
  config.k = 1;
  const auto params = initialize_params_with_z(
      data, config, {Eigen::MatrixXd::Ones(8, 1)});
  CHECK(params.Xi[0][0](0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Xi init reproduces the loadings in the noiseless case") {
  Rng rng(12);
  const Index n = 20, p = 6, k = 2;
  Eigen::MatrixXd z(n, k), m(p, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j) z(i, j) = rng.normal();
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < k; ++j) m(i, j) = rng.normal();
  auto data = testutil::random_dataset(Family::Poisson, {n}, {p}, 13);
  data.X[0][0] = z * m.transpose();
  FitConfig config;
  config.family = Family::Poisson;
  config.k = k;
  const auto params = initialize_params_with_z(data, config, {z});
  CHECK((params.Xi[0][0] - m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("zip tau init equals the excess-zero formula on all-zero data") {
  auto data = testutil::random_dataset(Family::Zip, {10}, {3}, 14);
  data.outcome[0] = OutcomeData::count_family(
      Family::Zip, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Ones(10));
  FitConfig config;
  config.family = Family::Zip;
  config.k = 2;
  config.seed = 5;
  const auto params = initialize_params(data, config);
  // with I(y=0) everywhere the raw value is 1 - mean(exp(-exp(beta0 + Z theta)))
  double mean_pred = 0.0;
  for (Index i = 0; i < 10; ++i) {
    const double eta = 1.0 + params.Z[0].row(i).sum();
    mean_pred += std::exp(-std::exp(eta));
  }
  mean_pred /= 10.0;
  const double expected =
      std::min(1.0 - kTauEpsilon, std::max(kTauEpsilon, 1.0 - mean_pred));
  CHECK(params.tau == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("initialize_params rejects K above the data bound") {
  const auto data = testutil::random_dataset(Family::Poisson, {10}, {4}, 15);
  FitConfig config;
  config.family = Family::Poisson;
  config.k = 5;  // > p
  CHECK_THROWS_AS(initialize_params(data, config), DataError);
}

}  // TEST_SUITE
