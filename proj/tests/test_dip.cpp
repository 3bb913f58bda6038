#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "dipedl/dip.hpp"

using namespace dipedl;
using Catch::Approx;

TEST_CASE("dip concentration: pseudo-count arithmetic") {
  const DIPConfig config(ConcentrationVector({1.0, 1.0}), 100);
  const ConcentrationVector beta =
      dip_concentration(config, 0.05, ProbabilityVector({0.8, 0.2}));
  REQUIRE(beta[0] == Approx(5.0).margin(1e-12));  // 1 + 100*0.05*0.8
  REQUIRE(beta[1] == Approx(2.0).margin(1e-12));
}

TEST_CASE("dip concentration: zero density collapses to the prior") {
  const DIPConfig config(ConcentrationVector({0.7, 1.3}), 100000);
  const ConcentrationVector beta =
      dip_concentration(config, 0.0, ProbabilityVector({0.9, 0.1}));
  REQUIRE(beta[0] == 0.7);
  REQUIRE(beta[1] == 1.3);
}

TEST_CASE("dip concentration: nn toggle gives identical evidence per class") {
  const DIPConfig config(ConcentrationVector(std::vector<double>(10, 1.0)), 2000,
                         true, true, /*nn_on=*/false);
  const std::vector<double> skew = {0.9, 0.1 / 9, 0.1 / 9, 0.1 / 9, 0.1 / 9,
                                    0.1 / 9, 0.1 / 9, 0.1 / 9, 0.1 / 9, 0.1 / 9};
  const DIPPosterior post = dip_predict(config, 0.7, ProbabilityVector(skew));
  for (int k = 1; k < 10; ++k) {
    REQUIRE(post.concentration[k] == post.concentration[0]);
    REQUIRE(post.predictive[k] == post.predictive[0]);
  }
  // Argmax ties break at the lowest index.
  REQUIRE(post.hard_label == 1);
}

TEST_CASE("dip concentration: n and de toggles use neutral elements") {
  const ConcentrationVector alpha{{1.0, 1.0}};
  const ProbabilityVector probs{{0.6, 0.4}};
  const DIPConfig no_n(ConcentrationVector(alpha.values()), 1000, false, true, true);
  const ConcentrationVector b1 = dip_concentration(no_n, 2.0, probs);
  REQUIRE(b1[0] == Approx(1.0 + 2.0 * 0.6).margin(1e-15));

  const DIPConfig no_de(ConcentrationVector(alpha.values()), 1000, true, false, true);
  const ConcentrationVector b2 = dip_concentration(no_de, 123.0, probs);
  REQUIRE(b2[0] == Approx(1.0 + 1000.0 * 0.6).margin(1e-12));

  // All toggles on with n=1, DE=1 reproduce alpha + NN exactly.
  const DIPConfig unit(ConcentrationVector(alpha.values()), 1);
  const ConcentrationVector b3 = dip_concentration(unit, 1.0, probs);
  REQUIRE(b3[0] == alpha[0] + probs[0]);
  REQUIRE(b3[1] == alpha[1] + probs[1]);
}

TEST_CASE("dip concentration: evidence clamp binds") {
  const DIPConfig config(ConcentrationVector({1.0, 1.0}), 1000000, true, true, true,
                         /*clamp=*/10.0);
  const ConcentrationVector beta =
      dip_concentration(config, 100.0, ProbabilityVector({0.5, 0.5}));
  REQUIRE(beta[0] == Approx(11.0).margin(1e-12));

  REQUIRE_THROWS_AS(dip_concentration(
                        config, std::numeric_limits<double>::infinity(),
                        ProbabilityVector({0.5, 0.5})),
                    std::invalid_argument);
}

TEST_CASE("dip predict: prior-only posterior is uniform with full vacuity") {
  const DIPConfig config(ConcentrationVector(std::vector<double>(10, 1.0)), 500);
  const std::vector<double> uniform(10, 0.1);
  const DIPPosterior post = dip_predict(config, 0.0, ProbabilityVector(uniform));
  REQUIRE(post.vacuity == 1.0);
  for (int k = 0; k < 10; ++k) REQUIRE(post.predictive[k] == Approx(0.1).margin(1e-15));

  // OOD Brier against a uniform target would be zero here.
  double brier = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double e = post.predictive[k] - 0.1;
    brier += e * e;
  }
  REQUIRE(brier <= 1e-30);
}

TEST_CASE("dip predict: large n concentrates on the conditional") {
  const DIPConfig config(ConcentrationVector({1.0, 1.0}), 1000000);
  const DIPPosterior post =
      dip_predict(config, 0.05, ProbabilityVector({0.9, 0.1}));
  REQUIRE(post.predictive[0] == Approx(0.9).margin(1e-4));
  REQUIRE(post.vacuity < 1e-4);

  const DIPConfig single(ConcentrationVector({1.0, 1.0}), 1);
  const DIPPosterior p1 = dip_predict(single, 1.0, ProbabilityVector({0.9, 0.1}));
  REQUIRE(p1.predictive[0] == Approx(1.9 / 3.0).epsilon(1e-12));
  REQUIRE(p1.predictive[1] == Approx(1.1 / 3.0).epsilon(1e-12));
}

TEST_CASE("dip predict: vacuity strictly decreases with density") {
  const DIPConfig config(ConcentrationVector({1.0, 1.0, 1.0}), 300);
  const ProbabilityVector probs{{0.5, 0.3, 0.2}};
  double prev = 2.0;
  for (double scale : {0.0, 0.01, 0.1, 1.0, 10.0}) {
    const double u = dip_predict(config, scale, probs).vacuity;
    REQUIRE(u < prev);
    prev = u;
  }
}

TEST_CASE("uncertainty scores") {
  const DIPConfig config(ConcentrationVector(std::vector<double>(10, 1.0)), 100);
  const std::vector<double> uniform(10, 0.1);
  const DIPPosterior prior_like = dip_predict(config, 0.0, ProbabilityVector(uniform));
  REQUIRE(uncertainty_score(prior_like, UncertaintyKind::vacuity) == 1.0);
  REQUIRE(uncertainty_score(prior_like, UncertaintyKind::max_prob) ==
          Approx(0.1).margin(1e-15));
  REQUIRE(uncertainty_score(prior_like, UncertaintyKind::total_evidence) ==
          Approx(10.0).margin(1e-12));

  // Concentration [1001, 1, ..., 1]: vacuity 10/1010.
  std::vector<double> sharp(10, 1.0);
  sharp[0] = 1001.0;
  const ConcentrationVector conc{sharp};
  const DIPPosterior posterior{ConcentrationVector(sharp), dirichlet_mean(conc),
                               vacuity(conc), 1};
  REQUIRE(uncertainty_score(posterior, UncertaintyKind::vacuity) ==
          Approx(10.0 / 1010.0).epsilon(1e-12));
}

TEST_CASE("dip config validation") {
  REQUIRE_THROWS_AS(DIPConfig(ConcentrationVector({1.0, 1.0}), 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(DIPConfig(ConcentrationVector({1.0, 1.0}), 10, true, true, true,
                              0.0),
                    std::invalid_argument);
  const DIPConfig config(ConcentrationVector({1.0, 1.0}), 10);
  REQUIRE_THROWS_AS(
      dip_concentration(config, 1.0, ProbabilityVector({0.5, 0.25, 0.25})),
      std::invalid_argument);
}
