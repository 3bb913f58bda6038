#pragma once

// The EDL training objective (expected-NLL data term plus a KL regularizer
// toward the prior), the tempered-KL objective it is equivalent to up to a
// parameter-independent constant, the averaged empirical risk, the linear
// annealing schedule, and the oracle concentration recovered by risk
// minimization. The loss is summed here; the trainer uses the mean.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dipedl/dirichlet.hpp"
#include "dipedl/mlp.hpp"

namespace dipedl {

// Hyperparameters of the EDL objective. lambda and nu are tied by
// lambda * nu = 1; either may be supplied and the other is derived.
struct EDLLossConfig {
  ConcentrationVector alpha;
  double lambda = 1.0;
  double nu = 1.0;
  int anneal_epochs = 0;

  EDLLossConfig(ConcentrationVector prior, std::optional<double> lambda_in,
                std::optional<double> nu_in, int anneal)
      : alpha(std::move(prior)), anneal_epochs(anneal) {
    if (anneal_epochs < 0) {
      throw std::invalid_argument("EDLLossConfig: anneal_epochs must be >= 0");
    }
    if (lambda_in && nu_in) {
      if (std::fabs(*lambda_in * *nu_in - 1.0) > 1e-12) {
        throw std::invalid_argument(
            "EDLLossConfig: lambda * nu must equal 1 within 1e-12");
      }
      lambda = *lambda_in;
      nu = *nu_in;
    } else if (lambda_in) {
      lambda = *lambda_in;
      nu = 1.0 / lambda;
    } else if (nu_in) {
      nu = *nu_in;
      lambda = 1.0 / nu;
    }
    if (!(lambda > 0.0) || !(nu > 0.0)) {
      throw std::invalid_argument("EDLLossConfig: lambda and nu must be positive");
    }
  }

  static EDLLossConfig from_lambda(ConcentrationVector prior, double lambda,
                                   int anneal = 0) {
    return EDLLossConfig(std::move(prior), lambda, std::nullopt, anneal);
  }
  static EDLLossConfig from_nu(ConcentrationVector prior, double nu,
                               int anneal = 0) {
    return EDLLossConfig(std::move(prior), std::nullopt, nu, anneal);
  }
};

// -E_{Dir(beta)}[ log Cat(y | p) ] = psi(beta_0) - psi(beta_y); always > 0.
inline double edl_data_term(const ConcentrationVector& beta, int y) {
  detail::require_class_index(y, beta.size(), "edl_data_term");
  return digamma(beta.total()) - digamma(beta[y - 1]);
}

namespace detail {

inline void check_evidence_batch(const std::vector<std::vector<double>>& evidence,
                                 const std::vector<int>& targets, int K) {
  if (evidence.empty() || evidence.size() != targets.size()) {
    throw std::invalid_argument("evidence batch: empty or ragged");
  }
  for (const auto& e : evidence) {
    if (static_cast<int>(e.size()) != K) {
      throw std::invalid_argument("evidence batch: dimension mismatch");
    }
  }
}

inline ConcentrationVector posterior_from_evidence(
    const ConcentrationVector& alpha, const std::vector<double>& evidence) {
  std::vector<double> beta(alpha.values());
  for (size_t k = 0; k < beta.size(); ++k) beta[k] += evidence[k];
  return ConcentrationVector(std::move(beta));
}

}  // namespace detail

// Summed EDL loss for explicit per-sample evidence vectors:
//   sum_i [psi(beta_0) - psi(beta_y)] + anneal * lambda * sum_i KL(q_i || prior)
inline double edl_loss_from_evidence(
    const std::vector<std::vector<double>>& evidence,
    const std::vector<int>& targets, const EDLLossConfig& config,
    double anneal_factor) {
  if (!(anneal_factor >= 0.0 && anneal_factor <= 1.0)) {
    throw std::invalid_argument("edl_loss: anneal_factor outside [0,1]");
  }
  detail::check_evidence_batch(evidence, targets, config.alpha.size());
  double total = 0.0;
  for (size_t i = 0; i < evidence.size(); ++i) {
    const ConcentrationVector q =
        detail::posterior_from_evidence(config.alpha, evidence[i]);
    total += edl_data_term(q, targets[i]);
    total += anneal_factor * config.lambda * dirichlet_kl(q, config.alpha);
  }
  return total;
}

inline std::vector<std::vector<double>> network_evidence(
    const MLPParameters& params, const Batch& batch) {
  if (params.head_kind != HeadKind::evidence) {
    throw std::invalid_argument("network_evidence: needs an evidence head");
  }
  std::vector<std::vector<double>> out;
  out.reserve(batch.inputs.size());
  for (const auto& x : batch.inputs) out.push_back(mlp_forward(params, x));
  return out;
}

inline double edl_loss(const MLPParameters& params, const Batch& batch,
                       const EDLLossConfig& config, double anneal_factor) {
  return edl_loss_from_evidence(network_evidence(params, batch), batch.targets,
                                config, anneal_factor);
}

// Summed per-sample KL to the tempered posteriors:
//   sum_i KL( Dir(alpha + NN(x_i)) || Dir(alpha + nu e_{y_i}) )
inline double tempered_kl_from_evidence(
    const std::vector<std::vector<double>>& evidence,
    const std::vector<int>& targets, const ConcentrationVector& alpha,
    double nu) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("tempered_kl_objective: nu must be positive");
  }
  detail::check_evidence_batch(evidence, targets, alpha.size());
  double total = 0.0;
  for (size_t i = 0; i < evidence.size(); ++i) {
    const ConcentrationVector q =
        detail::posterior_from_evidence(alpha, evidence[i]);
    std::vector<double> b(alpha.values());
    detail::require_class_index(targets[i], alpha.size(), "tempered_kl_objective");
    b[static_cast<size_t>(targets[i] - 1)] += nu;
    total += dirichlet_kl(q, ConcentrationVector(std::move(b)));
  }
  return total;
}

inline double tempered_kl_objective(const MLPParameters& params,
                                    const Batch& batch,
                                    const ConcentrationVector& alpha,
                                    double nu) {
  return tempered_kl_from_evidence(network_evidence(params, batch),
                                   batch.targets, alpha, nu);
}

// Empirical risk: the tempered KL objective averaged over the batch.
inline double empirical_risk(const MLPParameters& params, const Batch& batch,
                             const ConcentrationVector& alpha, double nu) {
  if (batch.inputs.empty()) {
    throw std::invalid_argument("empirical_risk: empty batch");
  }
  return tempered_kl_objective(params, batch, alpha, nu) /
         static_cast<double>(batch.inputs.size());
}

// Linear ramp min(1, epoch / anneal_epochs); anneal_epochs = 0 means the KL
// weight is always fully on.
inline double anneal_coefficient(int epoch, int anneal_epochs) {
  if (epoch < 0) throw std::invalid_argument("anneal_coefficient: negative epoch");
  if (anneal_epochs < 0) {
    throw std::invalid_argument("anneal_coefficient: negative anneal_epochs");
  }
  if (anneal_epochs == 0) return 1.0;
  const double ramp = static_cast<double>(epoch) / static_cast<double>(anneal_epochs);
  return ramp < 1.0 ? ramp : 1.0;
}

// The risk-minimizing variational concentration alpha + nu * p_true; its
// vacuity is K / (alpha_0 + nu) for every p_true.
inline ConcentrationVector oracle_concentration(const ProbabilityVector& p_true,
                                                const ConcentrationVector& alpha,
                                                double nu) {
  if (p_true.size() != alpha.size()) {
    throw std::invalid_argument("oracle_concentration: dimension mismatch");
  }
  if (!(nu > 0.0)) {
    throw std::invalid_argument("oracle_concentration: nu must be positive");
  }
  std::vector<double> c(alpha.values());
  for (int k = 0; k < alpha.size(); ++k) c[static_cast<size_t>(k)] += nu * p_true[k];
  return ConcentrationVector(std::move(c));
}

}  // namespace dipedl
