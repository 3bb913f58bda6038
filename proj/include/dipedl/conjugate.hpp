#pragma once

// Closed-form posteriors and predictives for the conjugate hierarchical
// models (independent, covariate-indexed, and tempered categorical-Dirichlet).
// These are exact and serve as ground-truth oracles for the verification
// harness. Covariate keys are opaque tokens; only equality matters.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/dirichlet.hpp"

namespace dipedl {

// Per-covariate label counts; real-valued so tempered counts fit too.
class LabelCountVector {
 public:
  explicit LabelCountVector(std::vector<double> counts)
      : counts_(std::move(counts)) {
    for (double c : counts_) {
      if (!(c >= 0.0)) {
        throw std::invalid_argument("LabelCountVector: counts must be >= 0");
      }
    }
  }

  int size() const { return static_cast<int>(counts_.size()); }
  double operator[](int i) const { return counts_[static_cast<size_t>(i)]; }
  const std::vector<double>& counts() const { return counts_; }
  double total() const {
    double s = 0.0;
    for (double c : counts_) s += c;
    return s;
  }

 private:
  std::vector<double> counts_;
};

struct DiscreteDataset {
  std::vector<std::string> covariates;
  std::vector<int> labels;  // 1..K
};

// Tempered single-observation posterior Dir(alpha + nu e_y); nu = 1 gives
// the untempered case.
inline ConcentrationVector icd_posterior(const ConcentrationVector& alpha,
                                         int y, double nu) {
  detail::require_class_index(y, alpha.size(), "icd_posterior");
  if (!(nu > 0.0)) {
    throw std::invalid_argument("icd_posterior: nu must be positive");
  }
  std::vector<double> post(alpha.values());
  post[static_cast<size_t>(y - 1)] += nu;
  return ConcentrationVector(std::move(post));
}

// Posterior predictive Cat(alpha / alpha_0); independent of the observed
// labels (the no-generalization property of the conjugate model).
inline ProbabilityVector icd_predictive(const ConcentrationVector& alpha) {
  return dirichlet_mean(alpha);
}

// Count vectors c_j = sum_i I(X_i = x*_j) e_{Y_i} per distinct covariate key.
inline std::map<std::string, LabelCountVector> cicd_posterior_counts(
    const DiscreteDataset& data, int num_classes) {
  if (data.covariates.empty()) {
    throw std::invalid_argument("cicd_posterior_counts: empty dataset");
  }
  if (data.covariates.size() != data.labels.size()) {
    throw std::invalid_argument(
        "cicd_posterior_counts: covariates and labels differ in length");
  }
  std::map<std::string, std::vector<double>> raw;
  for (size_t i = 0; i < data.covariates.size(); ++i) {
    const int y = data.labels[i];
    detail::require_class_index(y, num_classes, "cicd_posterior_counts");
    auto [it, inserted] = raw.try_emplace(
        data.covariates[i], std::vector<double>(static_cast<size_t>(num_classes), 0.0));
    it->second[static_cast<size_t>(y - 1)] += 1.0;
  }
  std::map<std::string, LabelCountVector> out;
  for (auto& [key, counts] : raw) {
    out.emplace(key, LabelCountVector(std::move(counts)));
  }
  return out;
}

// Predictive for a query key: (alpha + c_x) / (alpha_0 + S_x) when the key
// was seen, alpha / alpha_0 otherwise (c_x = 0).
inline ProbabilityVector cicd_predictive(
    const ConcentrationVector& alpha,
    const std::map<std::string, LabelCountVector>& counts,
    const std::string& query) {
  const auto it = counts.find(query);
  if (it == counts.end()) return dirichlet_mean(alpha);
  if (it->second.size() != alpha.size()) {
    throw std::invalid_argument("cicd_predictive: count dimension mismatch");
  }
  std::vector<double> post(alpha.values());
  for (int k = 0; k < alpha.size(); ++k) post[static_cast<size_t>(k)] += it->second[k];
  return dirichlet_mean(ConcentrationVector(std::move(post)));
}

// Joint tempered posterior; factorizes across observations.
inline std::vector<ConcentrationVector> tempered_posterior_joint(
    const ConcentrationVector& alpha, const std::vector<int>& labels,
    double nu) {
  if (labels.empty()) {
    throw std::invalid_argument("tempered_posterior_joint: empty labels");
  }
  std::vector<ConcentrationVector> out;
  out.reserve(labels.size());
  for (int y : labels) out.push_back(icd_posterior(alpha, y, nu));
  return out;
}

}  // namespace dipedl
