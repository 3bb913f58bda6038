#pragma once

// Numerical certificates for the statistical claims the library is built on:
// the tempered-KL / EDL-loss equivalence and its constant offset, the risk
// scaling, the oracle concentration recovered by risk minimization, the
// asymptotic consistency and 1/n variance rate of the density-informed head,
// conjugate closed forms, Monte Carlo agreement of the Dirichlet numerics,
// gradient integrity, and the metric/EM oracles. Each check reports one
// pass/fail line; the whole suite runs in well under two minutes.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dipedl/conjugate.hpp"
#include "dipedl/datasets.hpp"
#include "dipedl/density.hpp"
#include "dipedl/dip.hpp"
#include "dipedl/dirichlet.hpp"
#include "dipedl/edl_objective.hpp"
#include "dipedl/metrics.hpp"
#include "dipedl/mlp.hpp"

namespace dipedl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace verify_detail {

inline std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

inline ConcentrationVector random_concentration(Rng& rng, int k, double lo = 0.3,
                                                double hi = 8.0) {
  std::vector<double> v(static_cast<size_t>(k));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (double& x : v) x = std::exp(log_lo + (log_hi - log_lo) * rng.u01());
  return ConcentrationVector(std::move(v));
}

inline Batch random_batch(Rng& rng, int n, int d, int k) {
  Batch batch;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(static_cast<size_t>(d));
    for (double& v : x) v = rng.normal();
    batch.inputs.push_back(std::move(x));
    batch.targets.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
  }
  return batch;
}

}  // namespace verify_detail

// Over random (parameters, batch, nu) triples, tempered_kl - nu * edl_loss
// must be constant in the parameters and equal to
// sum_i [logB(alpha + nu e_{y_i}) - logB(alpha)], and the two gradients must
// agree elementwise up to the factor nu.
inline CheckResult check_tempered_edl_equivalence(RandomSeed seed) {
  Rng rng(seed);
  const double nus[3] = {0.2, 1.0, 5.0};
  double worst_offset = 0.0;
  double worst_grad = 0.0;
  for (int trial = 0; trial < 21; ++trial) {
    const double nu = nus[trial % 3];
    const int K = 2 + trial % 4;
    const ConcentrationVector alpha =
        verify_detail::random_concentration(rng, K, 0.5, 2.0);
    const Batch batch = verify_detail::random_batch(rng, 8, 3, K);
    const EDLLossConfig config =
        EDLLossConfig::from_nu(ConcentrationVector(alpha.values()), nu);

    double predicted = 0.0;
    for (int y : batch.targets) {
      predicted += log_multivariate_beta(icd_posterior(alpha, y, nu)) -
                   log_multivariate_beta(alpha);
    }

    double first_diff = 0.0;
    for (int rep = 0; rep < 2; ++rep) {
      const MLPParameters params =
          make_mlp(3, {8}, K, HeadKind::evidence,
                   RandomSeed{rng.next_u64()});
      const double tempered = tempered_kl_objective(params, batch, alpha, nu);
      const double edl = edl_loss(params, batch, config, 1.0);
      const double diff = tempered - nu * edl;
      if (rep == 0) first_diff = diff;
      worst_offset = std::max(worst_offset, std::fabs(diff - predicted));
      if (rep == 1) worst_offset = std::max(worst_offset, std::fabs(diff - first_diff));

      LossSpec tempered_spec;
      tempered_spec.kind = LossKind::tempered_kl;
      tempered_spec.alpha = alpha.values();
      tempered_spec.nu = nu;
      LossSpec edl_spec;
      edl_spec.kind = LossKind::edl;
      edl_spec.alpha = alpha.values();
      edl_spec.lambda = 1.0 / nu;
      edl_spec.anneal = 1.0;
      const GradientBundle gt = mlp_gradient(params, batch, tempered_spec);
      const GradientBundle ge = mlp_gradient(params, batch, edl_spec);
      for (size_t l = 0; l < gt.layers.size(); ++l) {
        auto compare = [&](const std::vector<double>& a,
                           const std::vector<double>& b) {
          for (size_t i = 0; i < a.size(); ++i) {
            const double expect = nu * b[i];
            const double rel = std::fabs(a[i] - expect) /
                               (std::max(std::fabs(a[i]), std::fabs(expect)) + 1e-12);
            worst_grad = std::max(worst_grad, rel);
          }
        };
        compare(gt.layers[l].weights, ge.layers[l].weights);
        compare(gt.layers[l].biases, ge.layers[l].biases);
      }
    }
  }
  const bool ok = worst_offset <= 1e-8 && worst_grad <= 1e-6;
  return CheckResult{"tempered_edl_equivalence", ok,
                     "max offset deviation " + verify_detail::fmt(worst_offset) +
                         " (tol 1e-8), max gradient rel err " +
                         verify_detail::fmt(worst_grad) + " (tol 1e-6)"};
}

// Empirical risk = tempered objective / n; invariant under batch duplication
// and tied to the EDL loss by the factor nu/n up to the constant offset.
inline CheckResult check_risk_scaling(RandomSeed seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int K = 2 + trial % 3;
    const double nu = 0.5 + 2.0 * rng.u01();
    const ConcentrationVector alpha =
        verify_detail::random_concentration(rng, K, 0.5, 2.0);
    const Batch batch = verify_detail::random_batch(rng, 6, 2, K);
    const MLPParameters params =
        make_mlp(2, {6}, K, HeadKind::evidence, RandomSeed{rng.next_u64()});
    const double risk = empirical_risk(params, batch, alpha, nu);
    const double tempered = tempered_kl_objective(params, batch, alpha, nu);
    worst = std::max(worst,
                     std::fabs(risk - tempered / static_cast<double>(batch.inputs.size())));

    Batch doubled = batch;
    doubled.inputs.insert(doubled.inputs.end(), batch.inputs.begin(), batch.inputs.end());
    doubled.targets.insert(doubled.targets.end(), batch.targets.begin(), batch.targets.end());
    worst = std::max(worst,
                     std::fabs(empirical_risk(params, doubled, alpha, nu) - risk));

    const MLPParameters other =
        make_mlp(2, {6}, K, HeadKind::evidence, RandomSeed{rng.next_u64()});
    const EDLLossConfig config =
        EDLLossConfig::from_nu(ConcentrationVector(alpha.values()), nu);
    const double lhs = empirical_risk(params, batch, alpha, nu) -
                       empirical_risk(other, batch, alpha, nu);
    const double rhs = nu / static_cast<double>(batch.inputs.size()) *
                       (edl_loss(params, batch, config, 1.0) -
                        edl_loss(other, batch, config, 1.0));
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  return CheckResult{"risk_scaling", worst <= 1e-8,
                     "max identity deviation " + verify_detail::fmt(worst) +
                         " (tol 1e-8)"};
}

namespace verify_detail {

// Gradient of (1/n) sum_i KL(Dir(c) || Dir(alpha + nu e_{y_i})) in c, grouped
// by label counts.
inline std::vector<double> risk_gradient(const std::vector<double>& c,
                                         const std::vector<double>& alpha,
                                         const std::vector<double>& freq,
                                         double nu) {
  const int K = static_cast<int>(c.size());
  double c0 = 0.0;
  for (double v : c) c0 += v;
  const double tg0 = trigamma(c0);
  double excess0 = 0.0;  // sum_j (c_j - mean target_j) = c0 - alpha0 - nu
  for (int j = 0; j < K; ++j) excess0 += c[static_cast<size_t>(j)] - alpha[static_cast<size_t>(j)];
  excess0 -= nu;  // sum_k freq_k nu = nu
  std::vector<double> g(static_cast<size_t>(K));
  for (int j = 0; j < K; ++j) {
    const double mean_target = alpha[static_cast<size_t>(j)] +
                               nu * freq[static_cast<size_t>(j)];
    g[static_cast<size_t>(j)] =
        trigamma(c[static_cast<size_t>(j)]) * (c[static_cast<size_t>(j)] - mean_target) -
        tg0 * excess0;
  }
  return g;
}

inline double risk_value(const std::vector<double>& c,
                         const std::vector<double>& alpha,
                         const std::vector<double>& freq, double nu) {
  const ConcentrationVector q{c};
  double value = 0.0;
  for (size_t k = 0; k < freq.size(); ++k) {
    if (freq[k] == 0.0) continue;
    std::vector<double> b(alpha);
    b[k] += nu;
    value += freq[k] * dirichlet_kl(q, ConcentrationVector(std::move(b)));
  }
  return value;
}

}  // namespace verify_detail

// Unconstrained minimization of the per-point empirical risk on 1e5 labels
// from a fixed 3-class distribution must recover alpha + nu * empirical
// frequency, with the vacuity pinned at K / (alpha_0 + nu).
inline CheckResult check_oracle_recovery(RandomSeed seed) {
  const std::vector<double> p_star = {0.5, 0.3, 0.2};
  const std::vector<double> alpha = {0.8, 1.1, 1.6};
  const double nu = 2.5;
  const int n = 100000;

  Rng rng(seed);
  std::vector<double> freq(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.u01();
    const int label = u < p_star[0] ? 0 : (u < p_star[0] + p_star[1] ? 1 : 2);
    freq[static_cast<size_t>(label)] += 1.0;
  }
  for (double& f : freq) f /= n;

  // Diagonally preconditioned Newton iteration c_j <- c_j - g_j / psi'(c_j)
  // from c = ones; contracts to the stationary point of the risk.
  std::vector<double> c(3, 1.0);
  int iterations = 0;
  for (; iterations < 5000; ++iterations) {
    const std::vector<double> g = verify_detail::risk_gradient(c, alpha, freq, nu);
    double g_inf = 0.0;
    for (double v : g) g_inf = std::max(g_inf, std::fabs(v));
    if (g_inf <= 1e-14) break;
    for (size_t j = 0; j < c.size(); ++j) {
      c[j] = std::max(c[j] - g[j] / trigamma(c[j]), 1e-9);
    }
  }

  double recovery_err = 0.0;
  double freq_err = 0.0;
  for (size_t j = 0; j < c.size(); ++j) {
    recovery_err = std::max(recovery_err, std::fabs(c[j] - (alpha[j] + nu * freq[j])));
    freq_err = std::max(freq_err, std::fabs(freq[j] - p_star[j]));
  }
  const double alpha0 = alpha[0] + alpha[1] + alpha[2];
  const double vac = vacuity(ConcentrationVector(c));
  const double vac_err = std::fabs(vac - 3.0 / (alpha0 + nu));
  const bool ok = recovery_err <= 1e-6 && freq_err <= 0.01 && vac_err <= 1e-9;
  return CheckResult{"oracle_concentration_recovery", ok,
                     "L_inf(c* - alpha - nu*freq) " + verify_detail::fmt(recovery_err) +
                         " (tol 1e-6), |freq - p*|_inf " + verify_detail::fmt(freq_err) +
                         " (tol 0.01), vacuity err " + verify_detail::fmt(vac_err) +
                         " (tol 1e-9), " + std::to_string(iterations) + " iterations"};
}

// With the generator's true density and conditional plugged into the head,
// the mean L1 predictive error at 100 probe points decreases over
// n in {1e2, 1e3, 1e4} and the per-class variance ratio between n=1e3 and
// n=1e4 sits in [8, 12] (median over probes).
inline CheckResult check_asymptotic_consistency(RandomSeed seed) {
  // Overlapping clusters keep the probe conditionals away from {0,1}, so the
  // 1/n variance regime is reached by n = 1e3.
  const auto centers = std::vector<std::vector<double>>{{-0.8, 0.0}, {0.8, 0.0}};
  const LabelledDataset probes = make_blobs(2, 50, centers, 1.0, seed);
  const GeneratorTruth& truth = *probes.truth;
  const ConcentrationVector alpha{std::vector<double>{1.0, 1.0}};

  const long sizes[3] = {100, 1000, 10000};
  double l1[3] = {0.0, 0.0, 0.0};
  std::vector<std::vector<double>> ratios(2);  // per class
  std::vector<double> var_mid(probes.features.size() * 2, 0.0);
  for (int s = 0; s < 3; ++s) {
    const DIPConfig config(ConcentrationVector(alpha.values()), sizes[s]);
    double total = 0.0;
    for (size_t i = 0; i < probes.features.size(); ++i) {
      const auto& x = probes.features[i];
      const double density = truth.density_at(x);
      const std::vector<double> conditional = truth.conditional_at(x);
      const DIPPosterior post =
          dip_predict(config, density, ProbabilityVector(conditional));
      for (int k = 0; k < 2; ++k) {
        total += std::fabs(post.predictive[k] - conditional[static_cast<size_t>(k)]);
        if (s == 1) {
          var_mid[i * 2 + static_cast<size_t>(k)] =
              dirichlet_variance(post.concentration, k + 1);
        } else if (s == 2) {
          ratios[static_cast<size_t>(k)].push_back(
              var_mid[i * 2 + static_cast<size_t>(k)] /
              dirichlet_variance(post.concentration, k + 1));
        }
      }
    }
    l1[s] = total / static_cast<double>(probes.features.size());
  }

  double ratio_lo = 1e300;
  double ratio_hi = 0.0;
  for (auto& r : ratios) {
    std::sort(r.begin(), r.end());
    const double median = r[r.size() / 2];
    ratio_lo = std::min(ratio_lo, median);
    ratio_hi = std::max(ratio_hi, median);
  }
  const bool decreasing = l1[0] > l1[1] && l1[1] > l1[2];
  const bool rate_ok = ratio_lo >= 8.0 && ratio_hi <= 12.0;
  return CheckResult{"asymptotic_consistency", decreasing && rate_ok,
                     "mean L1 " + verify_detail::fmt(l1[0]) + " > " +
                         verify_detail::fmt(l1[1]) + " > " + verify_detail::fmt(l1[2]) +
                         "; median variance ratio per class in [" +
                         verify_detail::fmt(ratio_lo) + ", " +
                         verify_detail::fmt(ratio_hi) + "] (window [8,12])"};
}

// Conjugate-model closed forms: tempered one-hot posteriors, label-invariant
// predictives (prior reversion), count sufficiency and conservation, and
// agreement between the count posterior mean and the predictive.
inline CheckResult check_conjugate_closed_forms(RandomSeed seed) {
  Rng rng(seed);
  double worst = 0.0;
  bool structural_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 4;
    const ConcentrationVector alpha = verify_detail::random_concentration(rng, K);
    const double nu = 0.1 + 3.0 * rng.u01();
    const int y = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    const ConcentrationVector post = icd_posterior(alpha, y, nu);
    for (int k = 0; k < K; ++k) {
      const double expect = alpha[k] + (k + 1 == y ? nu : 0.0);
      worst = std::max(worst, std::fabs(post[k] - expect));
    }
    // Predictive is invariant to the observed labels.
    const ProbabilityVector pred = icd_predictive(alpha);
    const ProbabilityVector mean = dirichlet_mean(alpha);
    for (int k = 0; k < K; ++k) {
      if (pred[k] != mean[k]) structural_ok = false;
    }
  }

  // Count sufficiency and conservation on a small discrete dataset.
  DiscreteDataset data;
  data.covariates = {"a", "a", "b", "c", "a", "b"};
  data.labels = {1, 2, 1, 2, 1, 1};
  const auto counts = cicd_posterior_counts(data, 2);
  double total = 0.0;
  for (const auto& [key, c] : counts) total += c.total();
  structural_ok = structural_ok && std::fabs(total - 6.0) < 1e-15;

  DiscreteDataset permuted;
  const int order[6] = {5, 2, 0, 4, 1, 3};
  for (int i : order) {
    permuted.covariates.push_back(data.covariates[static_cast<size_t>(i)]);
    permuted.labels.push_back(data.labels[static_cast<size_t>(i)]);
  }
  const auto counts2 = cicd_posterior_counts(permuted, 2);
  structural_ok = structural_ok && counts.size() == counts2.size();
  for (const auto& [key, c] : counts) {
    const auto it = counts2.find(key);
    if (it == counts2.end()) {
      structural_ok = false;
      continue;
    }
    for (int k = 0; k < c.size(); ++k) {
      if (c[k] != it->second[k]) structural_ok = false;
    }
  }

  // Posterior mean of Dir(alpha + c_j) matches the predictive at seen keys.
  const ConcentrationVector alpha2{std::vector<double>{0.7, 1.4}};
  for (const auto& [key, c] : counts) {
    std::vector<double> beta(alpha2.values());
    for (int k = 0; k < c.size(); ++k) beta[static_cast<size_t>(k)] += c[k];
    const ProbabilityVector mean = dirichlet_mean(ConcentrationVector(beta));
    const ProbabilityVector pred = cicd_predictive(alpha2, counts, key);
    for (int k = 0; k < 2; ++k) {
      worst = std::max(worst, std::fabs(mean[k] - pred[k]));
    }
  }
  const bool ok = structural_ok && worst <= 1e-12;
  return CheckResult{"conjugate_closed_forms", ok,
                     "max numeric deviation " + verify_detail::fmt(worst) +
                         std::string(structural_ok ? "" : "; structural check failed")};
}

// At the interpolating evidence nu * e_y the tempered objective vanishes and
// every in-sample vacuity equals K / (alpha_0 + nu).
inline CheckResult check_interpolation_vacuity(RandomSeed seed) {
  Rng rng(seed);
  double worst_objective = 0.0;
  double worst_vacuity = 0.0;
  bool exact_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int K = 2 + trial % 5;
    const double nu = trial % 2 == 0 ? 1.0 : 2.5;
    // Unit uniform prior: both vacuity routes are exact in floating point.
    const ConcentrationVector alpha{std::vector<double>(static_cast<size_t>(K), 1.0)};
    const int n = 12;
    std::vector<std::vector<double>> evidence;
    std::vector<int> targets;
    for (int i = 0; i < n; ++i) {
      const int y = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      std::vector<double> e(static_cast<size_t>(K), 0.0);
      e[static_cast<size_t>(y - 1)] = nu;
      evidence.push_back(std::move(e));
      targets.push_back(y);
    }
    worst_objective = std::max(
        worst_objective, tempered_kl_from_evidence(evidence, targets, alpha, nu));
    const double expected = static_cast<double>(K) / (alpha.total() + nu);
    for (int i = 0; i < n; ++i) {
      const double u = vacuity(icd_posterior(alpha, targets[static_cast<size_t>(i)], nu));
      if (u != expected) exact_ok = false;
    }
    // Random priors: exact up to one rounding of the total.
    const ConcentrationVector ralpha = verify_detail::random_concentration(rng, K);
    const int y = targets[0];
    const double u = vacuity(icd_posterior(ralpha, y, nu));
    worst_vacuity = std::max(
        worst_vacuity,
        std::fabs(u - static_cast<double>(K) / (ralpha.total() + nu)) / u);
  }
  const bool ok = worst_objective <= 1e-10 && exact_ok && worst_vacuity <= 1e-12;
  return CheckResult{"interpolation_vacuity", ok,
                     "max tempered objective at interpolation " +
                         verify_detail::fmt(worst_objective) +
                         " (tol 1e-10); uniform-prior vacuity exact: " +
                         (exact_ok ? "yes" : "NO")};
}

// KL non-negativity with equality iff the arguments match.
inline CheckResult check_kl_nonnegativity(RandomSeed seed) {
  Rng rng(seed);
  double min_kl = 1e300;
  double max_self = 0.0;
  bool positive_when_distinct = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + trial % 9;
    const ConcentrationVector a = verify_detail::random_concentration(rng, K);
    const ConcentrationVector b = verify_detail::random_concentration(rng, K);
    min_kl = std::min(min_kl, dirichlet_kl(a, b));
    max_self = std::max(max_self, std::fabs(dirichlet_kl(a, a)));
    std::vector<double> perturbed(a.values());
    perturbed[0] *= 1.01;
    if (!(dirichlet_kl(a, ConcentrationVector(perturbed)) > 0.0)) {
      positive_when_distinct = false;
    }
  }
  const bool ok = min_kl >= -1e-12 && max_self <= 1e-12 && positive_when_distinct;
  return CheckResult{"kl_nonnegativity", ok,
                     "min KL " + verify_detail::fmt(min_kl) +
                         " (floor -1e-12), max self-KL " +
                         verify_detail::fmt(max_self)};
}

// Closed-form KL, mean and variance against 1e6-sample Monte Carlo, each
// within three standard errors.
inline CheckResult check_dirichlet_monte_carlo(RandomSeed seed) {
  Rng rng(seed);
  const int n_samples = 1000000;
  double worst_kl_z = 0.0;
  double worst_mean_z = 0.0;
  double worst_var_z = 0.0;
  const int ks[3] = {2, 5, 10};
  for (int trial = 0; trial < 20; ++trial) {
    const int K = ks[trial % 3];
    const ConcentrationVector a = verify_detail::random_concentration(rng, K, 0.4, 6.0);
    const ConcentrationVector b = verify_detail::random_concentration(rng, K, 0.4, 6.0);
    const double closed = dirichlet_kl(a, b);
    const double log_beta_term = log_multivariate_beta(b) - log_multivariate_beta(a);
    const auto samples = dirichlet_sample(a, n_samples, RandomSeed{rng.next_u64()});
    // KL estimate: mean over samples of sum_k (a_k - b_k) log p_k, plus the
    // log-Beta offset.
    double mean_term = 0.0;
    double ss = 0.0;
    long count = 0;
    for (const ProbabilityVector& p : samples) {
      double t = 0.0;
      for (int k = 0; k < K; ++k) t += (a[k] - b[k]) * std::log(p[k]);
      ++count;
      const double delta = t - mean_term;
      mean_term += delta / static_cast<double>(count);
      ss += delta * (t - mean_term);
    }
    const double se = std::sqrt(ss / (static_cast<double>(count) - 1.0) /
                                static_cast<double>(count));
    const double mc = mean_term + log_beta_term;
    worst_kl_z = std::max(worst_kl_z, std::fabs(mc - closed) / se);

    if (trial < 5) {
      // First moment and variance of one coordinate.
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      double mean_p = 0.0;
      double m2 = 0.0;
      double m4 = 0.0;
      for (const ProbabilityVector& p : samples) {
        mean_p += p[k];
      }
      mean_p /= n_samples;
      for (const ProbabilityVector& p : samples) {
        const double c = p[k] - mean_p;
        m2 += c * c;
        m4 += c * c * c * c;
      }
      m2 /= n_samples;
      m4 /= n_samples;
      const double closed_mean = dirichlet_mean(a)[k];
      const double closed_var = dirichlet_variance(a, k + 1);
      const double se_mean = std::sqrt(m2 / n_samples);
      const double se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n_samples);
      worst_mean_z = std::max(worst_mean_z, std::fabs(mean_p - closed_mean) / se_mean);
      worst_var_z = std::max(worst_var_z, std::fabs(m2 - closed_var) / se_var);
    }
  }
  const bool ok = worst_kl_z <= 3.0 && worst_mean_z <= 3.0 && worst_var_z <= 3.0;
  return CheckResult{"dirichlet_monte_carlo", ok,
                     "max |z|: KL " + verify_detail::fmt(worst_kl_z) + ", mean " +
                         verify_detail::fmt(worst_mean_z) + ", variance " +
                         verify_detail::fmt(worst_var_z) + " (all vs 3 SE)"};
}

// Analytic gradients against central finite differences for both loss kinds
// (and the tempered objective) on random configurations.
inline CheckResult check_gradient_integrity(RandomSeed seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int K = 2 + trial % 3;
    const Batch batch = verify_detail::random_batch(rng, 6, 3, K);
    const ConcentrationVector alpha =
        verify_detail::random_concentration(rng, K, 0.5, 2.0);

    LossSpec edl_spec;
    edl_spec.kind = LossKind::edl;
    edl_spec.alpha = alpha.values();
    edl_spec.lambda = 0.7;
    edl_spec.anneal = 0.6;
    const MLPParameters evidence_net =
        make_mlp(3, {5}, K, HeadKind::evidence, RandomSeed{rng.next_u64()});
    worst = std::max(worst,
                     finite_difference_check(evidence_net, batch, edl_spec, 1e-5));

    LossSpec tempered_spec;
    tempered_spec.kind = LossKind::tempered_kl;
    tempered_spec.alpha = alpha.values();
    tempered_spec.nu = 1.5;
    worst = std::max(
        worst, finite_difference_check(evidence_net, batch, tempered_spec, 1e-5));

    LossSpec ce_spec;
    ce_spec.kind = LossKind::cross_entropy;
    const MLPParameters prob_net =
        make_mlp(3, {5}, K, HeadKind::probability, RandomSeed{rng.next_u64()});
    worst = std::max(worst, finite_difference_check(prob_net, batch, ce_spec, 1e-5));
  }
  return CheckResult{"gradient_integrity", worst <= 1e-4,
                     "max relative error " + verify_detail::fmt(worst) +
                         " (tol 1e-4)"};
}

// AUROC hand value, exact invariance under strictly increasing transforms,
// and the AUPR oracles.
inline CheckResult check_metric_oracles(RandomSeed seed) {
  Rng rng(seed);
  bool ok = true;
  std::string failure;

  const double hand = auroc({0.1, 0.2}, {0.15, 0.3});
  if (std::fabs(hand - 0.75) > 1e-12) {
    ok = false;
    failure = "2x2 AUROC " + verify_detail::fmt(hand);
  }

  std::vector<double> id_scores(40);
  std::vector<double> ood_scores(40);
  for (double& v : id_scores) v = rng.u01() * 4.0 - 2.0;
  for (double& v : ood_scores) v = rng.u01() * 4.0 - 2.0 + 0.5;
  const double base = auroc(id_scores, ood_scores);
  double worst_invariance = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double a = 0.5 + rng.u01() * 3.0;
    const double b = rng.u01() * 5.0 - 2.5;
    const int kind = t % 3;
    auto transform = [&](double x) {
      if (kind == 0) return a * x + b;
      if (kind == 1) return a * x * x * x + b;
      return a * std::atan(x) + b;
    };
    std::vector<double> tid(id_scores.size());
    std::vector<double> tood(ood_scores.size());
    for (size_t i = 0; i < id_scores.size(); ++i) tid[i] = transform(id_scores[i]);
    for (size_t i = 0; i < ood_scores.size(); ++i) tood[i] = transform(ood_scores[i]);
    worst_invariance = std::max(worst_invariance,
                                std::fabs(auroc(tid, tood) - base));
  }
  if (worst_invariance > 1e-12) {
    ok = false;
    failure += " monotone invariance " + verify_detail::fmt(worst_invariance);
  }

  const double complement = auroc(id_scores, ood_scores) +
                            auroc(ood_scores, id_scores);
  if (std::fabs(complement - 1.0) > 1e-12) {
    ok = false;
    failure += " complement " + verify_detail::fmt(complement);
  }

  if (std::fabs(aupr({0.0, 0.1, 0.2}, {0.5, 0.6}) - 1.0) > 1e-12) ok = false;
  std::vector<double> nine_id;
  for (int i = 0; i < 9; ++i) nine_id.push_back(0.1 * i);
  if (std::fabs(aupr(nine_id, {2.0}) - 1.0) > 1e-12) ok = false;
  std::vector<double> rid(10000);
  std::vector<double> rood(10000);
  for (double& v : rid) v = rng.u01();
  for (double& v : rood) v = rng.u01();
  const double random_aupr = aupr(rid, rood);
  if (std::fabs(random_aupr - 0.5) > 0.02) {
    ok = false;
    failure += " random-baseline AUPR " + verify_detail::fmt(random_aupr);
  }
  return CheckResult{"metric_oracles", ok,
                     ok ? "AUROC 0.75 exact, transform-invariant to 1e-12, AUPR oracles hold"
                        : failure};
}

// EM mean log-likelihood is non-decreasing on random datasets. Iterations
// containing a reported degenerate-component recovery are restart events and
// are excluded from the comparison.
inline CheckResult check_em_monotonicity(RandomSeed seed) {
  Rng rng(seed);
  double worst_drop = 0.0;
  long recoveries = 0;
  long compared = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> data;
    const double cx = rng.u01() * 4.0 - 2.0;
    for (int i = 0; i < 120; ++i) {
      const double offset = i % 2 == 0 ? cx : -cx;
      data.push_back({offset + rng.normal(), rng.normal() * (0.5 + rng.u01())});
    }
    const GaussianMixtureModel model =
        gmm_fit_em(data, 3, RandomSeed{rng.next_u64()}, 1e-9, 60);
    recoveries += static_cast<long>(model.recovery_iterations.size());
    for (size_t i = 1; i < model.loglik_trace.size(); ++i) {
      const bool crosses_recovery =
          std::find(model.recovery_iterations.begin(),
                    model.recovery_iterations.end(),
                    static_cast<int>(i)) != model.recovery_iterations.end();
      if (crosses_recovery) continue;
      ++compared;
      worst_drop = std::max(worst_drop,
                            model.loglik_trace[i - 1] - model.loglik_trace[i]);
    }
  }
  return CheckResult{"em_monotonicity", worst_drop <= 1e-10 && compared > 100,
                     "worst per-iteration drop " + verify_detail::fmt(worst_drop) +
                         " (tol 1e-10) over " + std::to_string(compared) +
                         " steps, " + std::to_string(recoveries) +
                         " recovery events excluded"};
}

// KDE consistency proxy: mean absolute log-density error against the known
// generator decreases as n grows 500 -> 5000 -> 50000.
inline CheckResult check_density_consistency(RandomSeed seed) {
  const auto centers = std::vector<std::vector<double>>{{-2.0, 0.0}, {2.0, 0.0}};
  const LabelledDataset probe_set =
      make_blobs(2, 50, centers, 1.0, substream(seed, 7));
  const GeneratorTruth& truth = *probe_set.truth;
  const int sizes[3] = {250, 2500, 25000};
  double err[3] = {0.0, 0.0, 0.0};
  for (int s = 0; s < 3; ++s) {
    const LabelledDataset data =
        make_blobs(2, sizes[s], centers, 1.0, substream(seed, 8 + static_cast<std::uint64_t>(s)));
    const KDEModel kde = kde_build(data.features, BandwidthRule::scott());
    double total = 0.0;
    for (const auto& x : probe_set.features) {
      total += std::fabs(log_density(kde, x) - truth.log_density_at(x));
    }
    err[s] = total / static_cast<double>(probe_set.features.size());
  }
  const bool ok = err[0] > err[1] && err[1] > err[2];
  return CheckResult{"density_consistency", ok,
                     "mean |log err| " + verify_detail::fmt(err[0]) + " -> " +
                         verify_detail::fmt(err[1]) + " -> " +
                         verify_detail::fmt(err[2]) + " for n 500 -> 5000 -> 50000"};
}

inline CheckResult check_anneal_schedule() {
  const bool ok = anneal_coefficient(0, 10) == 0.0 &&
                  anneal_coefficient(5, 10) == 0.5 &&
                  anneal_coefficient(25, 10) == 1.0 &&
                  anneal_coefficient(3, 0) == 1.0;
  return CheckResult{"anneal_schedule", ok, "linear ramp with saturation"};
}

// Head-level invariants: prior reversion at zero density, vacuity strictly
// decreasing in the density scale, toggle neutrality.
inline CheckResult check_dip_properties(RandomSeed seed) {
  Rng rng(seed);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 5;
    const ConcentrationVector alpha = verify_detail::random_concentration(rng, K);
    std::vector<double> p(static_cast<size_t>(K));
    double s = 0.0;
    for (double& v : p) {
      v = 0.05 + rng.u01();
      s += v;
    }
    for (double& v : p) v /= s;
    const ProbabilityVector probs{p};
    const DIPConfig config(ConcentrationVector(alpha.values()), 500);

    // Prior reversion: zero density scale collapses to the prior exactly.
    const DIPPosterior prior_only = dip_predict(config, 0.0, probs);
    const ProbabilityVector prior_mean = dirichlet_mean(alpha);
    for (int k = 0; k < K; ++k) {
      if (prior_only.predictive[k] != prior_mean[k]) ok = false;
    }

    // Vacuity strictly decreasing in the density scale.
    double prev = dip_predict(config, 1e-6, probs).vacuity;
    for (double scale : {1e-3, 1e-1, 1.0, 10.0}) {
      const double u = dip_predict(config, scale, probs).vacuity;
      if (!(u < prev)) ok = false;
      prev = u;
    }

    // Toggle neutrality: n=1, DE=1 reproduces alpha + NN.
    const DIPConfig unit(ConcentrationVector(alpha.values()), 1);
    const ConcentrationVector beta = dip_concentration(unit, 1.0, probs);
    for (int k = 0; k < K; ++k) {
      if (beta[k] != alpha[k] + probs[k]) ok = false;
    }
  }
  return CheckResult{"dip_properties", ok,
                     "prior reversion exact, vacuity monotone, toggles neutral"};
}

inline std::vector<CheckResult> run_verification(RandomSeed seed) {
  std::vector<CheckResult> results;
  results.push_back(check_tempered_edl_equivalence(substream(seed, 101)));
  results.push_back(check_risk_scaling(substream(seed, 102)));
  results.push_back(check_oracle_recovery(substream(seed, 103)));
  results.push_back(check_asymptotic_consistency(substream(seed, 104)));
  results.push_back(check_conjugate_closed_forms(substream(seed, 105)));
  results.push_back(check_interpolation_vacuity(substream(seed, 106)));
  results.push_back(check_kl_nonnegativity(substream(seed, 107)));
  results.push_back(check_dirichlet_monte_carlo(substream(seed, 108)));
  results.push_back(check_gradient_integrity(substream(seed, 109)));
  results.push_back(check_metric_oracles(substream(seed, 110)));
  results.push_back(check_em_monotonicity(substream(seed, 111)));
  results.push_back(check_density_consistency(substream(seed, 112)));
  results.push_back(check_anneal_schedule());
  results.push_back(check_dip_properties(substream(seed, 113)));
  return results;
}

}  // namespace dipedl
