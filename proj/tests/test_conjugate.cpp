#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dipedl/conjugate.hpp"

using namespace dipedl;
using Catch::Approx;

TEST_CASE("icd posterior: one-hot and tempered updates") {
  const ConcentrationVector a{{1.0, 1.0, 1.0}};
  const ConcentrationVector p1 = icd_posterior(a, 2, 1.0);
  REQUIRE(p1[0] == 1.0);
  REQUIRE(p1[1] == 2.0);
  REQUIRE(p1[2] == 1.0);

  const ConcentrationVector p2 = icd_posterior(ConcentrationVector({1.0, 1.0}), 1, 2.0);
  REQUIRE(p2[0] == 3.0);
  REQUIRE(p2[1] == 1.0);

  const ConcentrationVector p3 =
      icd_posterior(ConcentrationVector({0.5, 0.5}), 1, 0.1);
  REQUIRE(p3[0] == Approx(0.6).margin(1e-15));
  REQUIRE(p3[1] == 0.5);

  REQUIRE_THROWS_AS(icd_posterior(a, 4, 1.0), std::out_of_range);
  REQUIRE_THROWS_AS(icd_posterior(a, 1, 0.0), std::invalid_argument);
}

TEST_CASE("icd predictive: prior ratios, label-independent") {
  const ProbabilityVector p = icd_predictive(ConcentrationVector({2.0, 1.0, 1.0}));
  REQUIRE(p[0] == Approx(0.5).margin(1e-15));
  REQUIRE(p[1] == Approx(0.25).margin(1e-15));

  const ProbabilityVector u = icd_predictive(ConcentrationVector({1.0, 1.0, 1.0, 1.0}));
  for (int k = 0; k < 4; ++k) REQUIRE(u[k] == Approx(0.25).margin(1e-15));

  const ProbabilityVector r = icd_predictive(ConcentrationVector({3.0, 1.0}));
  REQUIRE(r[0] == Approx(0.75).margin(1e-15));

  // Prior reversion: the predictive never looks at the labels, so any two
  // label histories give literally the same answer.
  const ConcentrationVector alpha{{0.7, 1.9}};
  const ProbabilityVector before = icd_predictive(alpha);
  (void)tempered_posterior_joint(alpha, {1, 2, 2, 1, 1}, 1.0);
  (void)tempered_posterior_joint(alpha, {2, 2, 2, 2, 2}, 3.0);
  const ProbabilityVector after = icd_predictive(alpha);
  REQUIRE(before[0] == after[0]);
  REQUIRE(before[1] == after[1]);
}

TEST_CASE("cicd posterior counts") {
  DiscreteDataset data;
  data.covariates = {"a", "a", "b"};
  data.labels = {1, 2, 1};
  const auto counts = cicd_posterior_counts(data, 2);
  REQUIRE(counts.size() == 2);
  REQUIRE(counts.at("a")[0] == 1.0);
  REQUIRE(counts.at("a")[1] == 1.0);
  REQUIRE(counts.at("b")[0] == 1.0);
  REQUIRE(counts.at("b")[1] == 0.0);

  DiscreteDataset single;
  single.covariates = {"a"};
  single.labels = {1};
  const auto one = cicd_posterior_counts(single, 3);
  REQUIRE(one.at("a")[0] == 1.0);
  REQUIRE(one.at("a")[1] == 0.0);
  REQUIRE(one.at("a")[2] == 0.0);

  // All-distinct covariates reduce to one-hot counts.
  DiscreteDataset distinct;
  distinct.covariates = {"p", "q", "r"};
  distinct.labels = {2, 1, 2};
  for (const auto& [key, c] : cicd_posterior_counts(distinct, 2)) {
    REQUIRE(c.total() == 1.0);
  }

  REQUIRE_THROWS_AS(cicd_posterior_counts(DiscreteDataset{}, 2),
                    std::invalid_argument);
}

TEST_CASE("cicd counts: permutation invariance and conservation") {
  DiscreteDataset data;
  data.covariates = {"x", "y", "x", "z", "y", "x"};
  data.labels = {1, 2, 2, 1, 1, 1};
  const auto counts = cicd_posterior_counts(data, 2);

  DiscreteDataset shuffled;
  for (int i : {3, 0, 5, 2, 4, 1}) {
    shuffled.covariates.push_back(data.covariates[static_cast<size_t>(i)]);
    shuffled.labels.push_back(data.labels[static_cast<size_t>(i)]);
  }
  const auto counts2 = cicd_posterior_counts(shuffled, 2);
  REQUIRE(counts.size() == counts2.size());
  double total = 0.0;
  for (const auto& [key, c] : counts) {
    total += c.total();
    for (int k = 0; k < c.size(); ++k) REQUIRE(c[k] == counts2.at(key)[k]);
  }
  REQUIRE(total == 6.0);
}

TEST_CASE("cicd predictive: seen and unseen keys") {
  const ConcentrationVector alpha{{1.0, 1.0}};
  std::map<std::string, LabelCountVector> counts;
  counts.emplace("a", LabelCountVector({1.0, 1.0}));
  const ProbabilityVector seen = cicd_predictive(alpha, counts, "a");
  REQUIRE(seen[0] == Approx(0.5).margin(1e-15));

  const ProbabilityVector unseen = cicd_predictive(alpha, counts, "zzz");
  REQUIRE(unseen[0] == Approx(0.5).margin(1e-15));

  std::map<std::string, LabelCountVector> heavy;
  heavy.emplace("b", LabelCountVector({3.0, 0.0}));
  const ProbabilityVector skew = cicd_predictive(alpha, heavy, "b");
  REQUIRE(skew[0] == Approx(0.8).margin(1e-15));
  REQUIRE(skew[1] == Approx(0.2).margin(1e-15));
}

TEST_CASE("cicd predictive agrees with posterior mean at seen keys") {
  DiscreteDataset data;
  data.covariates = {"a", "a", "a", "b", "b", "c"};
  data.labels = {1, 1, 2, 2, 2, 1};
  const ConcentrationVector alpha{{0.4, 2.3}};
  const auto counts = cicd_posterior_counts(data, 2);
  for (const auto& [key, c] : counts) {
    std::vector<double> beta(alpha.values());
    for (int k = 0; k < 2; ++k) beta[static_cast<size_t>(k)] += c[k];
    const ProbabilityVector mean = dirichlet_mean(ConcentrationVector(beta));
    const ProbabilityVector pred = cicd_predictive(alpha, counts, key);
    for (int k = 0; k < 2; ++k) {
      REQUIRE(std::fabs(mean[k] - pred[k]) <= 1e-12);
    }
  }
}

TEST_CASE("tempered joint posterior factorizes") {
  const ConcentrationVector alpha{{1.0, 1.0}};
  const auto joint = tempered_posterior_joint(alpha, {1, 2}, 1.0);
  REQUIRE(joint.size() == 2);
  REQUIRE(joint[0][0] == 2.0);
  REQUIRE(joint[0][1] == 1.0);
  REQUIRE(joint[1][0] == 1.0);
  REQUIRE(joint[1][1] == 2.0);

  const auto single = tempered_posterior_joint(ConcentrationVector({1.0, 1.0, 1.0}),
                                               {1}, 3.0);
  REQUIRE(single[0][0] == 4.0);

  const auto repeated = tempered_posterior_joint(alpha, {2, 2, 2, 2, 2}, 0.7);
  for (const ConcentrationVector& post : repeated) {
    REQUIRE(post[0] == repeated[0][0]);
    REQUIRE(post[1] == repeated[0][1]);
  }

  REQUIRE_THROWS_AS(tempered_posterior_joint(alpha, {}, 1.0), std::invalid_argument);
}

TEST_CASE("label count vector rejects negatives") {
  REQUIRE_THROWS_AS(LabelCountVector({1.0, -0.5}), std::invalid_argument);
  REQUIRE_NOTHROW(LabelCountVector({0.0, 0.0}));
}
