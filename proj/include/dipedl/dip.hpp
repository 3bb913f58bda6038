#pragma once

// Density-informed pseudo-count head. Assembles the posterior
// Dir(alpha + n * DE(x) * NN(x)) from a density scale and a conditional
// class-probability estimate, and exposes the three ablation toggles with
// neutral elements n -> 1, DE -> 1, NN -> uniform.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/dirichlet.hpp"

namespace dipedl {

struct DIPConfig {
  ConcentrationVector alpha;
  long n_train = 1;
  bool use_n = true;
  bool use_de = true;
  bool use_nn = true;
  double evidence_clamp = 1e12;

  DIPConfig(ConcentrationVector prior, long n, bool n_on = true,
            bool de_on = true, bool nn_on = true, double clamp = 1e12)
      : alpha(std::move(prior)),
        n_train(n),
        use_n(n_on),
        use_de(de_on),
        use_nn(nn_on),
        evidence_clamp(clamp) {
    if (n_train < 1) throw std::invalid_argument("DIPConfig: n_train must be >= 1");
    if (!(evidence_clamp > 0.0)) {
      throw std::invalid_argument("DIPConfig: evidence_clamp must be > 0");
    }
  }
};

inline ConcentrationVector dip_concentration(const DIPConfig& config,
                                             double density_scale_value,
                                             const ProbabilityVector& class_probs) {
  const int K = config.alpha.size();
  if (class_probs.size() != K) {
    throw std::invalid_argument("dip_concentration: class_probs dimension mismatch");
  }
  const double n_eff = config.use_n ? static_cast<double>(config.n_train) : 1.0;
  const double de_eff = config.use_de ? density_scale_value : 1.0;
  if (!(de_eff >= 0.0) || !std::isfinite(de_eff)) {
    throw std::invalid_argument(
        "dip_concentration: density scale is not a finite non-negative value: " +
        std::to_string(density_scale_value));
  }
  const double uniform = 1.0 / static_cast<double>(K);
  std::vector<double> beta(config.alpha.values());
  for (int k = 0; k < K; ++k) {
    const double p = config.use_nn ? class_probs[k] : uniform;
    double evidence = n_eff * de_eff * p;
    if (!std::isfinite(evidence)) {
      throw std::invalid_argument(
          "dip_concentration: non-finite evidence from n=" + std::to_string(n_eff) +
          ", de=" + std::to_string(de_eff) + ", nn=" + std::to_string(p));
    }
    if (evidence < 0.0) evidence = 0.0;
    if (evidence > config.evidence_clamp) evidence = config.evidence_clamp;
    beta[static_cast<size_t>(k)] += evidence;
  }
  return ConcentrationVector(std::move(beta));
}

struct DIPPosterior {
  ConcentrationVector concentration;
  ProbabilityVector predictive;  // = dirichlet_mean(concentration)
  double vacuity = 0.0;          // K / sum(concentration)
  int hard_label = 1;            // argmax of predictive, lowest index on ties
};

inline int argmax_lowest_index(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<size_t>(i)] > values[static_cast<size_t>(best)]) best = i;
  }
  return best + 1;  // 1-based class index
}

inline DIPPosterior dip_predict(const DIPConfig& config,
                                double density_scale_value,
                                const ProbabilityVector& class_probs) {
  ConcentrationVector beta =
      dip_concentration(config, density_scale_value, class_probs);
  ProbabilityVector predictive = dirichlet_mean(beta);
  const double u = vacuity(beta);
  const int label = argmax_lowest_index(predictive.values());
  return DIPPosterior{std::move(beta), std::move(predictive), u, label};
}

enum class UncertaintyKind { vacuity, max_prob, total_evidence };

// max_prob and total_evidence decrease with OOD-ness; the evaluator flips
// their sign when it needs an OOD-increasing score. total_evidence returns
// the total concentration mass, which orders samples identically to the
// summed network evidence for a fixed prior.
inline double uncertainty_score(const DIPPosterior& posterior,
                                UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::vacuity:
      return posterior.vacuity;
    case UncertaintyKind::max_prob: {
      double m = posterior.predictive[0];
      for (int k = 1; k < posterior.predictive.size(); ++k) {
        if (posterior.predictive[k] > m) m = posterior.predictive[k];
      }
      return m;
    }
    case UncertaintyKind::total_evidence:
      return posterior.concentration.total();
  }
  throw std::invalid_argument("uncertainty_score: unknown kind");
}

}  // namespace dipedl
