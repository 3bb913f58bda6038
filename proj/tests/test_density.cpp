#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "dipedl/datasets.hpp"
#include "dipedl/density.hpp"

using namespace dipedl;
using Catch::Approx;

namespace {

// Trapezoid quadrature of exp(log_density) over [lo, hi].
template <typename Model>
double integrate_1d(const Model& model, double lo, double hi, int steps) {
  const double h = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + h * i;
    const double f = std::exp(log_density(model, std::vector<double>{x}));
    total += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  return total * h;
}

template <typename Model>
double integrate_2d(const Model& model, double lo, double hi, int steps) {
  const double h = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      const double wi = (i == 0 || i == steps) ? 0.5 : 1.0;
      const double wj = (j == 0 || j == steps) ? 0.5 : 1.0;
      total += wi * wj *
               std::exp(log_density(model, {lo + h * i, lo + h * j}));
    }
  }
  return total * h * h;
}

}  // namespace

TEST_CASE("kde: single point with unit bandwidth is a standard Gaussian") {
  const KDEModel model = kde_build({{0.0}}, BandwidthRule::fixed(1.0));
  REQUIRE(log_density(model, {0.0}) ==
          Approx(-0.5 * std::log(2.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("kde: symmetric data gives a symmetric density") {
  const KDEModel model =
      kde_build({{-2.0}, {-1.0}, {1.0}, {2.0}}, BandwidthRule::scott());
  for (double x : {0.3, 0.9, 1.7, 3.0}) {
    REQUIRE(log_density(model, {x}) ==
            Approx(log_density(model, {-x})).margin(1e-12));
  }
}

TEST_CASE("kde: integrates to one") {
  Rng rng(RandomSeed{5});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 60; ++i) data.push_back({rng.normal() * 1.3 + 0.4});
  const KDEModel model = kde_build(data, BandwidthRule::scott());
  const double h = model.bandwidth[0];
  REQUIRE(integrate_1d(model, -10.0 * h - 5.0, 10.0 * h + 5.0, 4000) ==
          Approx(1.0).margin(1e-3));
}

TEST_CASE("kde: scott bandwidth and degenerate dimensions") {
  Rng rng(RandomSeed{6});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 50; ++i) data.push_back({rng.normal(), 3.0});
  const KDEModel model = kde_build(data, BandwidthRule::scott());
  // Second dimension has zero variance: floored bandwidth, reported.
  REQUIRE(model.bandwidth[1] == 1e-3);
  REQUIRE_FALSE(model.warnings.empty());
  // First dimension follows sigma * n^(-1/(d+4)).
  double mean = 0.0;
  for (const auto& row : data) mean += row[0];
  mean /= 50.0;
  double ss = 0.0;
  for (const auto& row : data) ss += (row[0] - mean) * (row[0] - mean);
  const double sigma = std::sqrt(ss / 49.0);
  REQUIRE(model.bandwidth[0] ==
          Approx(sigma * std::pow(50.0, -1.0 / 6.0)).epsilon(1e-12));
}

TEST_CASE("kde: far queries stay finite") {
  const KDEModel model = kde_build({{0.0, 0.0}, {1.0, 1.0}}, BandwidthRule::fixed(0.5));
  const double far = log_density(model, {1e6, -1e6});
  REQUIRE(std::isfinite(far));
  REQUIRE(far < -1e9);
  REQUIRE_THROWS_AS(log_density(model, {1.0}), std::invalid_argument);
}

TEST_CASE("gmm: single component recovers the exact MLE") {
  Rng rng(RandomSeed{7});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 80; ++i) {
    data.push_back({0.7 + rng.normal(), -0.3 + 0.5 * rng.normal()});
  }
  const GaussianMixtureModel model = gmm_fit_em(data, 1, RandomSeed{8}, 1e-10, 100);
  REQUIRE(model.components.size() == 1);
  double mean[2] = {0.0, 0.0};
  for (const auto& row : data) {
    mean[0] += row[0];
    mean[1] += row[1];
  }
  mean[0] /= 80.0;
  mean[1] /= 80.0;
  double cov[3] = {0.0, 0.0, 0.0};  // xx, xy, yy
  for (const auto& row : data) {
    cov[0] += (row[0] - mean[0]) * (row[0] - mean[0]);
    cov[1] += (row[0] - mean[0]) * (row[1] - mean[1]);
    cov[2] += (row[1] - mean[1]) * (row[1] - mean[1]);
  }
  for (double& c : cov) c /= 80.0;
  const GaussianComponent& comp = model.components[0];
  REQUIRE(comp.weight == Approx(1.0).margin(1e-12));
  REQUIRE(comp.mean[0] == Approx(mean[0]).margin(1e-10));
  REQUIRE(comp.mean[1] == Approx(mean[1]).margin(1e-10));
  REQUIRE(comp.covariance[0] == Approx(cov[0]).margin(1e-10));
  REQUIRE(comp.covariance[1] == Approx(cov[1]).margin(1e-10));
  REQUIRE(comp.covariance[3] == Approx(cov[2]).margin(1e-10));
}

TEST_CASE("gmm: recovers two well-separated clusters") {
  Rng rng(RandomSeed{9});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 150; ++i) data.push_back({-5.0 + rng.normal(), rng.normal()});
  for (int i = 0; i < 150; ++i) data.push_back({5.0 + rng.normal(), rng.normal()});
  const GaussianMixtureModel model = gmm_fit_em(data, 2, RandomSeed{10}, 1e-9, 300);
  std::vector<double> xs = {model.components[0].mean[0], model.components[1].mean[0]};
  std::sort(xs.begin(), xs.end());
  REQUIRE(std::fabs(xs[0] + 5.0) < 0.2);
  REQUIRE(std::fabs(xs[1] - 5.0) < 0.2);
}

TEST_CASE("gmm: EM log-likelihood trace is non-decreasing") {
  Rng rng(RandomSeed{11});
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> data;
    for (int i = 0; i < 100; ++i) {
      data.push_back({rng.normal() * (1.0 + rng.u01()), rng.normal()});
    }
    const GaussianMixtureModel model =
        gmm_fit_em(data, 3, RandomSeed{rng.next_u64()}, 1e-9, 80);
    REQUIRE(model.loglik_trace.size() >= 2);
    for (size_t i = 1; i < model.loglik_trace.size(); ++i) {
      const bool crosses_recovery =
          std::find(model.recovery_iterations.begin(),
                    model.recovery_iterations.end(),
                    static_cast<int>(i)) != model.recovery_iterations.end();
      if (crosses_recovery) continue;
      REQUIRE(model.loglik_trace[i] >= model.loglik_trace[i - 1] - 1e-10);
    }
  }
}

TEST_CASE("gmm: integrates to one") {
  Rng rng(RandomSeed{12});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 120; ++i) {
    data.push_back({rng.normal() + (i % 2 == 0 ? 2.0 : -2.0), rng.normal()});
  }
  const GaussianMixtureModel model = gmm_fit_em(data, 2, RandomSeed{13}, 1e-8, 100);
  REQUIRE(integrate_2d(model, -9.0, 9.0, 240) == Approx(1.0).margin(1e-3));
}

TEST_CASE("gmm: singular covariance triggers the ridge recovery") {
  // All-duplicate data: the scatter matrix is exactly singular, so the raw
  // factorization must fail and the ridge rescue must report itself.
  std::vector<std::vector<double>> data(30, std::vector<double>{2.0, 1.0});
  const GaussianMixtureModel model = gmm_fit_em(data, 1, RandomSeed{20}, 1e-9, 10);
  REQUIRE_FALSE(model.warnings.empty());
  double weight_sum = 0.0;
  for (const GaussianComponent& comp : model.components) weight_sum += comp.weight;
  REQUIRE(weight_sum == Approx(1.0).margin(1e-9));
  REQUIRE(std::isfinite(log_density(model, {2.0, 1.0})));
  REQUIRE(std::isfinite(log_density(model, {0.0, 0.0})));
}

TEST_CASE("gmm: preconditions") {
  std::vector<std::vector<double>> tiny = {{0.0, 0.0}, {1.0, 1.0}};
  REQUIRE_THROWS_AS(gmm_fit_em(tiny, 3, RandomSeed{1}), std::invalid_argument);
  REQUIRE_THROWS_AS(gmm_fit_em(tiny, 1, RandomSeed{1}, 0.0), std::invalid_argument);
}

TEST_CASE("gda: weights are class frequencies; one class equals gmm M=1") {
  Rng rng(RandomSeed{14});
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    features.push_back({-3.0 + rng.normal(), rng.normal()});
    labels.push_back(1);
  }
  for (int i = 0; i < 60; ++i) {
    features.push_back({3.0 + rng.normal(), rng.normal()});
    labels.push_back(2);
  }
  const GaussianMixtureModel gda = gda_fit(features, labels, 2);
  REQUIRE(gda.components[0].weight == Approx(0.5).margin(1e-12));
  REQUIRE(gda.components[1].weight == Approx(0.5).margin(1e-12));

  // Marginal log-density near a class mean matches ln(pi_k) + peak term.
  const GaussianComponent& c0 = gda.components[0];
  const double at_mean = log_density(gda, c0.mean);
  const double det = c0.covariance[0] * c0.covariance[3] -
                     c0.covariance[1] * c0.covariance[2];
  const double peak = -std::log(2.0 * 3.14159265358979323846) - 0.5 * std::log(det);
  REQUIRE(at_mean == Approx(std::log(0.5) + peak).margin(0.05));

  // One class only: identical to the single-component EM fit.
  std::vector<std::vector<double>> one_class(features.begin(), features.begin() + 60);
  std::vector<int> one_labels(60, 1);
  const GaussianMixtureModel via_gda = gda_fit(one_class, one_labels, 1);
  const GaussianMixtureModel via_em = gmm_fit_em(one_class, 1, RandomSeed{15});
  for (int i = 0; i < 2; ++i) {
    REQUIRE(via_gda.components[0].mean[static_cast<size_t>(i)] ==
            Approx(via_em.components[0].mean[static_cast<size_t>(i)]).margin(1e-9));
  }

  // Under-populated class: ridge floor, reported.
  std::vector<std::vector<double>> sparse = {{0.0, 0.0}, {1.0, 0.5}, {0.2, 0.1},
                                             {5.0, 5.0}};
  std::vector<int> sparse_labels = {1, 1, 1, 2};
  const GaussianMixtureModel floored = gda_fit(sparse, sparse_labels, 2);
  REQUIRE_FALSE(floored.warnings.empty());
  REQUIRE(floored.components[1].covariance[0] >= 1e-4);

  std::vector<int> missing = {1, 1, 1, 1};
  REQUIRE_THROWS_AS(gda_fit(sparse, missing, 2), std::invalid_argument);
}

TEST_CASE("standard gaussian mixture density at the origin") {
  GaussianMixtureModel model;
  model.dim = 2;
  GaussianComponent comp;
  comp.weight = 1.0;
  comp.mean = {0.0, 0.0};
  comp.covariance = {1.0, 0.0, 0.0, 1.0};
  detail::factor_component(comp, 2, nullptr);
  model.components = {comp};
  REQUIRE(log_density(model, {0.0, 0.0}) ==
          Approx(-std::log(2.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("kde: 2-d density integrates to one") {
  Rng rng(RandomSeed{18});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 80; ++i) data.push_back({rng.normal(), 0.8 * rng.normal()});
  const KDEModel model = kde_build(data, BandwidthRule::scott());
  REQUIRE(integrate_2d(model, -7.0, 7.0, 280) == Approx(1.0).margin(1e-3));
}

TEST_CASE("mixture with a zero-weight component ignores it") {
  GaussianMixtureModel model;
  model.dim = 1;
  GaussianComponent a;
  a.weight = 1.0;
  a.mean = {0.0};
  a.covariance = {1.0};
  detail::factor_component(a, 1, nullptr);
  GaussianComponent b;
  b.weight = 0.0;
  b.mean = {100.0};
  b.covariance = {1.0};
  detail::factor_component(b, 1, nullptr);
  model.components = {a, b};
  REQUIRE(log_density(model, {0.5}) ==
          Approx(detail::gaussian_log_pdf(a, 1, {0.5})).margin(1e-14));
}

TEST_CASE("normalizer: population statistics") {
  const LogLikelihoodNormalizer norm = normalizer_fit({-2.0, 0.0, 2.0});
  REQUIRE(norm.mean_loglik == Approx(0.0).margin(1e-15));
  REQUIRE(norm.std_loglik == Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));

  REQUIRE_THROWS_AS(normalizer_fit({1.0, 1.0, 1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(normalizer_fit({1.0}), std::invalid_argument);

  // Translation moves the mean and leaves the spread.
  const LogLikelihoodNormalizer shifted = normalizer_fit({-2.0 + 5.0, 5.0, 2.0 + 5.0});
  REQUIRE(shifted.mean_loglik == Approx(5.0).margin(1e-12));
  REQUIRE(shifted.std_loglik == Approx(norm.std_loglik).epsilon(1e-12));
}

TEST_CASE("density scale: z-scored exponential with clamping") {
  const LogLikelihoodNormalizer norm{-10.0, 2.0};
  REQUIRE(density_scale(norm, -10.0, 30.0) == Approx(1.0).margin(1e-15));
  REQUIRE(density_scale(norm, -8.0, 30.0) == Approx(std::exp(1.0)).epsilon(1e-15));
  REQUIRE(density_scale(norm, -10.0 - 2e6, 30.0) == Approx(std::exp(-30.0)).epsilon(1e-15));
  REQUIRE_THROWS_AS(density_scale(norm, 0.0, 0.0), std::invalid_argument);

  // Monotone in the log-density.
  double prev = 0.0;
  for (double loglik : {-40.0, -20.0, -10.0, -5.0, 0.0}) {
    const double s = density_scale(norm, loglik, 30.0);
    REQUIRE(s > prev);
    prev = s;
  }
}

TEST_CASE("density checkpoint round trips bit-exactly") {
  Rng rng(RandomSeed{16});
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 40; ++i) data.push_back({rng.normal(), rng.normal() * 2.0});

  FittedDensity kde;
  kde.model = kde_build(data, BandwidthRule::scott());
  std::vector<double> logliks;
  for (const auto& x : data) logliks.push_back(kde.log_density_at(x));
  kde.normalizer = normalizer_fit(logliks);

  const auto tmp = std::filesystem::temp_directory_path();
  const std::string kde_path = (tmp / "dipedl_kde_test.ckpt").string();
  save_density(kde, kde_path);
  const FittedDensity kde2 = load_density(kde_path);
  REQUIRE(kde2.normalizer.mean_loglik == kde.normalizer.mean_loglik);
  REQUIRE(kde2.normalizer.std_loglik == kde.normalizer.std_loglik);
  for (const auto& x : data) {
    REQUIRE(kde2.log_density_at(x) == kde.log_density_at(x));
  }
  std::remove(kde_path.c_str());

  FittedDensity gmm;
  gmm.model = gmm_fit_em(data, 2, RandomSeed{17});
  gmm.normalizer = kde.normalizer;
  const std::string gmm_path = (tmp / "dipedl_gmm_test.ckpt").string();
  save_density(gmm, gmm_path);
  const FittedDensity gmm2 = load_density(gmm_path);
  for (const auto& x : data) {
    REQUIRE(gmm2.log_density_at(x) == gmm.log_density_at(x));
  }
  std::remove(gmm_path.c_str());
}

TEST_CASE("kde consistency improves with sample size") {
  const auto centers = std::vector<std::vector<double>>{{-2.0, 0.0}, {2.0, 0.0}};
  const LabelledDataset probes = make_blobs(2, 50, centers, 1.0, RandomSeed{20});
  const GeneratorTruth& truth = *probes.truth;
  double prev_err = 1e300;
  for (int n_per_class : {250, 2500, 25000}) {
    const LabelledDataset data =
        make_blobs(2, n_per_class, centers, 1.0,
                   RandomSeed{static_cast<std::uint64_t>(21 + n_per_class)});
    const KDEModel kde = kde_build(data.features, BandwidthRule::scott());
    double err = 0.0;
    for (const auto& x : probes.features) {
      err += std::fabs(log_density(kde, x) - truth.log_density_at(x));
    }
    err /= static_cast<double>(probes.features.size());
    REQUIRE(err < prev_err);
    prev_err = err;
  }
}
