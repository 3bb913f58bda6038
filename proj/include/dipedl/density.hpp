#pragma once

// Marginal-density estimators: Gaussian KDE with Scott or fixed bandwidth,
// an EM-fitted Gaussian mixture, and a per-class Gaussian (GDA-style
// marginal). Log-densities are evaluated with log-sum-exp and stay finite
// for any finite input. A z-score normalizer turns log-likelihoods into a
// bounded positive evidence scale.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dipedl/mlp.hpp"  // format_g17
#include "dipedl/rng.hpp"

namespace dipedl {

struct BandwidthRule {
  enum class Kind { scott, fixed };
  Kind kind = Kind::scott;
  double value = 0.0;

  static BandwidthRule scott() { return BandwidthRule{Kind::scott, 0.0}; }
  static BandwidthRule fixed(double h) {
    if (!(h > 0.0)) throw std::invalid_argument("BandwidthRule: h must be > 0");
    return BandwidthRule{Kind::fixed, h};
  }
};

struct KDEModel {
  std::vector<std::vector<double>> support_points;  // n x d
  std::vector<double> bandwidth;                    // per dimension
  std::vector<std::string> warnings;

  int dim() const { return static_cast<int>(bandwidth.size()); }
};

struct GaussianComponent {
  double weight = 0.0;
  std::vector<double> mean;        // d
  std::vector<double> covariance;  // row-major d x d
  // Cached lower Cholesky factor of the (possibly ridged) covariance and the
  // corresponding Gaussian log-normalizer -0.5 (d log 2pi + log det).
  std::vector<double> chol;
  double log_norm = 0.0;
};

struct GaussianMixtureModel {
  int dim = 0;
  std::vector<GaussianComponent> components;
  std::vector<double> loglik_trace;  // mean log-likelihood per EM iteration
  // Trace indices whose model includes a degenerate-component recovery
  // (re-seed or ridge rescue); the trace is non-decreasing except across
  // these reported events.
  std::vector<int> recovery_iterations;
  std::vector<std::string> warnings;
};

namespace detail {

// Plain lower-triangular Cholesky; returns false if the matrix is not
// numerically positive definite.
inline bool cholesky(const std::vector<double>& a, int d,
                     std::vector<double>& lower) {
  lower.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<size_t>(i) * d + j];
      for (int k = 0; k < j; ++k) {
        s -= lower[static_cast<size_t>(i) * d + k] *
             lower[static_cast<size_t>(j) * d + k];
      }
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        lower[static_cast<size_t>(i) * d + i] = std::sqrt(s);
      } else {
        lower[static_cast<size_t>(i) * d + j] =
            s / lower[static_cast<size_t>(j) * d + j];
      }
    }
  }
  return true;
}

// Factorizes the component covariance. The raw matrix is tried first; if it
// is not PD, a ridge of 1e-6 * trace/d is added, escalating tenfold until
// the factorization succeeds. Returns true when a ridge was needed.
inline bool factor_component(GaussianComponent& comp, int d,
                             std::vector<std::string>* warnings) {
  double trace = 0.0;
  for (int i = 0; i < d; ++i) trace += comp.covariance[static_cast<size_t>(i) * d + i];
  double ridge = 0.0;
  std::vector<double> work = comp.covariance;
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (cholesky(work, d, comp.chol)) {
      double logdet = 0.0;
      for (int i = 0; i < d; ++i) {
        logdet += 2.0 * std::log(comp.chol[static_cast<size_t>(i) * d + i]);
      }
      comp.log_norm = -0.5 * (d * std::log(2.0 * 3.14159265358979323846) + logdet);
      if (ridge > 0.0 && warnings) {
        warnings->push_back("covariance ridged by " + format_g17(ridge) +
                            " for positive definiteness");
      }
      return ridge > 0.0;
    }
    ridge = ridge == 0.0 ? std::max(1e-6 * trace / d, 1e-12) : ridge * 10.0;
    work = comp.covariance;
    for (int i = 0; i < d; ++i) work[static_cast<size_t>(i) * d + i] += ridge;
  }
  throw std::runtime_error("density: covariance could not be factorized");
}

// log N(x; mean, LL^T) via forward substitution.
inline double gaussian_log_pdf(const GaussianComponent& comp, int d,
                               const std::vector<double>& x) {
  std::vector<double> u(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    double s = x[static_cast<size_t>(i)] - comp.mean[static_cast<size_t>(i)];
    for (int k = 0; k < i; ++k) {
      s -= comp.chol[static_cast<size_t>(i) * d + k] * u[static_cast<size_t>(k)];
    }
    u[static_cast<size_t>(i)] = s / comp.chol[static_cast<size_t>(i) * d + i];
  }
  double q = 0.0;
  for (double v : u) q += v * v;
  return comp.log_norm - 0.5 * q;
}

inline void check_point_dim(int d, const std::vector<double>& x, const char* who) {
  if (static_cast<int>(x.size()) != d) {
    throw std::invalid_argument(std::string(who) + ": point has dim " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(d));
  }
}

inline void check_data_matrix(const std::vector<std::vector<double>>& data,
                              const char* who) {
  if (data.empty() || data.front().empty()) {
    throw std::invalid_argument(std::string(who) + ": empty data");
  }
  const size_t d = data.front().size();
  for (const auto& row : data) {
    if (row.size() != d) {
      throw std::invalid_argument(std::string(who) + ": ragged data rows");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(who) + ": non-finite value");
      }
    }
  }
}

}  // namespace detail

inline KDEModel kde_build(const std::vector<std::vector<double>>& data,
                          BandwidthRule rule) {
  detail::check_data_matrix(data, "kde_build");
  const int n = static_cast<int>(data.size());
  const int d = static_cast<int>(data.front().size());
  KDEModel model;
  model.support_points = data;
  model.bandwidth.resize(static_cast<size_t>(d));
  if (rule.kind == BandwidthRule::Kind::fixed) {
    std::fill(model.bandwidth.begin(), model.bandwidth.end(), rule.value);
    return model;
  }
  // Scott rule: h_j = sigma_j * n^(-1/(d+4)), per dimension.
  const double factor = std::pow(static_cast<double>(n), -1.0 / (d + 4.0));
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& row : data) mean += row[static_cast<size_t>(j)];
    mean /= n;
    double ss = 0.0;
    for (const auto& row : data) {
      const double c = row[static_cast<size_t>(j)] - mean;
      ss += c * c;
    }
    const double sigma = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    double h = sigma * factor;
    if (!(h > 0.0)) {
      h = 1e-3;
      model.warnings.push_back("dimension " + std::to_string(j + 1) +
                               ": zero variance, bandwidth floored at 1e-3");
    }
    model.bandwidth[static_cast<size_t>(j)] = h;
  }
  return model;
}

inline double log_density(const KDEModel& model, const std::vector<double>& x) {
  detail::check_point_dim(model.dim(), x, "log_density(kde)");
  const int d = model.dim();
  const int n = static_cast<int>(model.support_points.size());
  double log_kernel_norm = 0.0;
  for (double h : model.bandwidth) {
    log_kernel_norm -= std::log(h) + 0.5 * std::log(2.0 * 3.14159265358979323846);
  }
  // log (1/n sum_i prod_j N(x_j; X_ij, h_j)) via log-sum-exp.
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> exponents(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double q = 0.0;
    const auto& p = model.support_points[static_cast<size_t>(i)];
    for (int j = 0; j < d; ++j) {
      const double z = (x[static_cast<size_t>(j)] - p[static_cast<size_t>(j)]) /
                       model.bandwidth[static_cast<size_t>(j)];
      q += z * z;
    }
    exponents[static_cast<size_t>(i)] = -0.5 * q;
    if (exponents[static_cast<size_t>(i)] > max_e) max_e = exponents[static_cast<size_t>(i)];
  }
  double s = 0.0;
  for (double e : exponents) s += std::exp(e - max_e);
  return max_e + std::log(s) - std::log(static_cast<double>(n)) + log_kernel_norm;
}

inline double log_density(const GaussianMixtureModel& model,
                          const std::vector<double>& x) {
  detail::check_point_dim(model.dim, x, "log_density(gmm)");
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(model.components.size());
  for (const GaussianComponent& comp : model.components) {
    if (comp.weight <= 0.0) continue;
    terms.push_back(std::log(comp.weight) +
                    detail::gaussian_log_pdf(comp, model.dim, x));
    if (terms.back() > max_e) max_e = terms.back();
  }
  if (terms.empty()) {
    throw std::runtime_error("log_density(gmm): no components with mass");
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_e);
  return max_e + std::log(s);
}

namespace detail {

inline GaussianComponent mle_component(
    const std::vector<std::vector<double>>& data,
    const std::vector<double>& resp, double resp_total, int d) {
  GaussianComponent comp;
  comp.mean.assign(static_cast<size_t>(d), 0.0);
  for (size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < d; ++j) {
      comp.mean[static_cast<size_t>(j)] += resp[i] * data[i][static_cast<size_t>(j)];
    }
  }
  for (double& v : comp.mean) v /= resp_total;
  comp.covariance.assign(static_cast<size_t>(d) * d, 0.0);
  std::vector<double> c(static_cast<size_t>(d));
  for (size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < d; ++j) {
      c[static_cast<size_t>(j)] =
          data[i][static_cast<size_t>(j)] - comp.mean[static_cast<size_t>(j)];
    }
    for (int r = 0; r < d; ++r) {
      for (int j = 0; j <= r; ++j) {
        comp.covariance[static_cast<size_t>(r) * d + j] +=
            resp[i] * c[static_cast<size_t>(r)] * c[static_cast<size_t>(j)];
      }
    }
  }
  for (int r = 0; r < d; ++r) {
    for (int j = 0; j <= r; ++j) {
      comp.covariance[static_cast<size_t>(r) * d + j] /= resp_total;
      comp.covariance[static_cast<size_t>(j) * d + r] =
          comp.covariance[static_cast<size_t>(r) * d + j];
    }
  }
  return comp;
}

}  // namespace detail

// Fits an M-component Gaussian mixture by EM. Iterates until the mean
// log-likelihood improves by less than tol or max_iter is reached; the
// per-iteration mean log-likelihood trace is kept on the model.
inline GaussianMixtureModel gmm_fit_em(
    const std::vector<std::vector<double>>& data, int components,
    RandomSeed seed, double tol = 1e-8, int max_iter = 200) {
  detail::check_data_matrix(data, "gmm_fit_em");
  const int n = static_cast<int>(data.size());
  const int d = static_cast<int>(data.front().size());
  if (components < 1) throw std::invalid_argument("gmm_fit_em: components < 1");
  if (n < components) {
    throw std::invalid_argument("gmm_fit_em: need n >= components");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("gmm_fit_em: tol must be > 0");

  GaussianMixtureModel model;
  model.dim = d;

  // Initial components: distinct random data points as means, shared global
  // covariance, uniform weights.
  Rng rng(seed);
  std::vector<int> picked;
  while (static_cast<int>(picked.size()) < components) {
    const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (std::find(picked.begin(), picked.end(), idx) == picked.end()) {
      picked.push_back(idx);
    }
  }
  std::vector<double> unit(static_cast<size_t>(n), 1.0);
  GaussianComponent global = detail::mle_component(data, unit, n, d);
  for (int m = 0; m < components; ++m) {
    GaussianComponent comp = global;
    comp.weight = 1.0 / components;
    comp.mean = data[static_cast<size_t>(picked[static_cast<size_t>(m)])];
    detail::factor_component(comp, d, &model.warnings);
    model.components.push_back(std::move(comp));
  }

  std::vector<std::vector<double>> resp(
      static_cast<size_t>(components), std::vector<double>(static_cast<size_t>(n), 0.0));
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    // E step.
    double ll = 0.0;
    std::vector<double> logs(static_cast<size_t>(components));
    for (int i = 0; i < n; ++i) {
      double max_e = -std::numeric_limits<double>::infinity();
      for (int m = 0; m < components; ++m) {
        const GaussianComponent& comp = model.components[static_cast<size_t>(m)];
        logs[static_cast<size_t>(m)] =
            (comp.weight > 0.0 ? std::log(comp.weight)
                               : -std::numeric_limits<double>::infinity()) +
            detail::gaussian_log_pdf(comp, d, data[static_cast<size_t>(i)]);
        if (logs[static_cast<size_t>(m)] > max_e) max_e = logs[static_cast<size_t>(m)];
      }
      double s = 0.0;
      for (int m = 0; m < components; ++m) s += std::exp(logs[static_cast<size_t>(m)] - max_e);
      const double lse = max_e + std::log(s);
      ll += lse;
      for (int m = 0; m < components; ++m) {
        resp[static_cast<size_t>(m)][static_cast<size_t>(i)] =
            std::exp(logs[static_cast<size_t>(m)] - lse);
      }
    }
    ll /= n;
    model.loglik_trace.push_back(ll);
    if (iter > 0 && ll - prev_ll < tol) break;
    prev_ll = ll;

    // M step.
    bool recovered = false;
    for (int m = 0; m < components; ++m) {
      double mass = 0.0;
      for (int i = 0; i < n; ++i) mass += resp[static_cast<size_t>(m)][static_cast<size_t>(i)];
      if (mass < 1e-8) {
        // Degenerate component: re-seed it from a random datum.
        GaussianComponent comp = global;
        comp.weight = 1.0 / n;
        comp.mean = data[static_cast<size_t>(rng.below(static_cast<std::uint64_t>(n)))];
        detail::factor_component(comp, d, &model.warnings);
        model.components[static_cast<size_t>(m)] = std::move(comp);
        model.warnings.push_back("component " + std::to_string(m + 1) +
                                 " degenerated and was re-seeded");
        recovered = true;
        continue;
      }
      GaussianComponent comp =
          detail::mle_component(data, resp[static_cast<size_t>(m)], mass, d);
      comp.weight = mass / n;
      if (detail::factor_component(comp, d, &model.warnings)) recovered = true;
      model.components[static_cast<size_t>(m)] = std::move(comp);
    }
    // The next trace entry evaluates a model containing the recovery, so
    // exact-EM monotonicity does not bind across it. A re-seed also leaves
    // the weights off the simplex until renormalized.
    if (recovered) {
      model.recovery_iterations.push_back(iter + 1);
      double weight_sum = 0.0;
      for (const GaussianComponent& comp : model.components) weight_sum += comp.weight;
      for (GaussianComponent& comp : model.components) comp.weight /= weight_sum;
    }
  }
  return model;
}

// Per-class Gaussian fit; the class-weighted mixture of the class
// conditionals serves as the marginal density. Labels are 1..K.
inline GaussianMixtureModel gda_fit(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, int num_classes) {
  detail::check_data_matrix(features, "gda_fit");
  if (features.size() != labels.size()) {
    throw std::invalid_argument("gda_fit: features/labels length mismatch");
  }
  const int n = static_cast<int>(features.size());
  const int d = static_cast<int>(features.front().size());
  GaussianMixtureModel model;
  model.dim = d;
  for (int k = 1; k <= num_classes; ++k) {
    std::vector<double> resp(static_cast<size_t>(n), 0.0);
    double count = 0.0;
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<size_t>(i)] == k) {
        resp[static_cast<size_t>(i)] = 1.0;
        count += 1.0;
      }
    }
    if (count == 0.0) {
      throw std::invalid_argument("gda_fit: class " + std::to_string(k) +
                                  " has no observations");
    }
    GaussianComponent comp = detail::mle_component(features, resp, count, d);
    comp.weight = count / n;
    if (count < d + 1) {
      // Under-populated class: inflate the covariance with a 1e-4 floor.
      for (int i = 0; i < d; ++i) comp.covariance[static_cast<size_t>(i) * d + i] += 1e-4;
      model.warnings.push_back("class " + std::to_string(k) + " has " +
                               std::to_string(static_cast<int>(count)) +
                               " < d+1 samples; covariance floored at 1e-4*I");
    }
    detail::factor_component(comp, d, &model.warnings);
    model.components.push_back(std::move(comp));
  }
  return model;
}

// Mean and population standard deviation of the training-set log-densities.
struct LogLikelihoodNormalizer {
  double mean_loglik = 0.0;
  double std_loglik = 1.0;
};

inline LogLikelihoodNormalizer normalizer_fit(
    const std::vector<double>& train_logliks) {
  if (train_logliks.size() < 2) {
    throw std::invalid_argument("normalizer_fit: need at least 2 values");
  }
  double mean = 0.0;
  for (double v : train_logliks) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("normalizer_fit: non-finite log-likelihood");
    }
    mean += v;
  }
  mean /= static_cast<double>(train_logliks.size());
  double ss = 0.0;
  for (double v : train_logliks) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(train_logliks.size()));
  if (!(sd > 0.0)) {
    throw std::invalid_argument("normalizer_fit: zero spread in log-likelihoods");
  }
  return LogLikelihoodNormalizer{mean, sd};
}

// exp(clip(z, -clamp, +clamp)) with z the normalized log-density; monotone
// in the log-density and bounded in [e^-clamp, e^+clamp].
inline double density_scale(const LogLikelihoodNormalizer& normalizer,
                            double log_density_value, double clamp) {
  if (!(clamp > 0.0)) throw std::invalid_argument("density_scale: clamp must be > 0");
  double z = (log_density_value - normalizer.mean_loglik) / normalizer.std_loglik;
  if (z > clamp) z = clamp;
  if (z < -clamp) z = -clamp;
  return std::exp(z);
}

// A fitted marginal-density estimator together with its z-score normalizer.
struct FittedDensity {
  std::variant<KDEModel, GaussianMixtureModel> model;
  LogLikelihoodNormalizer normalizer;

  double log_density_at(const std::vector<double>& x) const {
    if (const auto* kde = std::get_if<KDEModel>(&model)) return log_density(*kde, x);
    return log_density(std::get<GaussianMixtureModel>(model), x);
  }
  double scale_at(const std::vector<double>& x, double clamp) const {
    return density_scale(normalizer, log_density_at(x), clamp);
  }
  int dim() const {
    if (const auto* kde = std::get_if<KDEModel>(&model)) return kde->dim();
    return std::get<GaussianMixtureModel>(model).dim;
  }
};

// Text checkpoint. KDE:
//   kde <d> <n>, one line of d bandwidths, n lines of d coordinates.
// GMM:
//   gmm <d> <M>, per component: weight line, mean line, d covariance rows.
// Both end with `norm <mean> <std>`.
inline void save_density(const FittedDensity& fd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_density: cannot open " + path);
  if (const auto* kde = std::get_if<KDEModel>(&fd.model)) {
    const int d = kde->dim();
    out << "kde " << d << ' ' << kde->support_points.size() << '\n';
    for (int j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << detail::format_g17(kde->bandwidth[static_cast<size_t>(j)]);
    }
    out << '\n';
    for (const auto& p : kde->support_points) {
      for (int j = 0; j < d; ++j) {
        if (j) out << ' ';
        out << detail::format_g17(p[static_cast<size_t>(j)]);
      }
      out << '\n';
    }
  } else {
    const auto& gmm = std::get<GaussianMixtureModel>(fd.model);
    const int d = gmm.dim;
    out << "gmm " << d << ' ' << gmm.components.size() << '\n';
    for (const GaussianComponent& comp : gmm.components) {
      out << detail::format_g17(comp.weight) << '\n';
      for (int j = 0; j < d; ++j) {
        if (j) out << ' ';
        out << detail::format_g17(comp.mean[static_cast<size_t>(j)]);
      }
      out << '\n';
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          if (c) out << ' ';
          out << detail::format_g17(comp.covariance[static_cast<size_t>(r) * d + c]);
        }
        out << '\n';
      }
    }
  }
  out << "norm " << detail::format_g17(fd.normalizer.mean_loglik) << ' '
      << detail::format_g17(fd.normalizer.std_loglik) << '\n';
  if (!out) throw std::runtime_error("save_density: write failed on " + path);
}

inline FittedDensity load_density(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_density: cannot open " + path);
  std::string kind;
  int d = 0;
  long count = 0;
  if (!(in >> kind >> d >> count) || d < 1 || count < 1) {
    throw std::runtime_error("load_density: bad header in " + path);
  }
  FittedDensity fd;
  if (kind == "kde") {
    KDEModel kde;
    kde.bandwidth.resize(static_cast<size_t>(d));
    for (double& h : kde.bandwidth) {
      if (!(in >> h)) throw std::runtime_error("load_density: truncated bandwidths");
    }
    kde.support_points.assign(static_cast<size_t>(count),
                              std::vector<double>(static_cast<size_t>(d)));
    for (auto& p : kde.support_points) {
      for (double& v : p) {
        if (!(in >> v)) throw std::runtime_error("load_density: truncated points");
      }
    }
    fd.model = std::move(kde);
  } else if (kind == "gmm") {
    GaussianMixtureModel gmm;
    gmm.dim = d;
    for (long m = 0; m < count; ++m) {
      GaussianComponent comp;
      comp.mean.resize(static_cast<size_t>(d));
      comp.covariance.resize(static_cast<size_t>(d) * d);
      if (!(in >> comp.weight)) throw std::runtime_error("load_density: truncated weight");
      for (double& v : comp.mean) {
        if (!(in >> v)) throw std::runtime_error("load_density: truncated mean");
      }
      for (double& v : comp.covariance) {
        if (!(in >> v)) throw std::runtime_error("load_density: truncated covariance");
      }
      detail::factor_component(comp, d, nullptr);
      gmm.components.push_back(std::move(comp));
    }
    fd.model = std::move(gmm);
  } else {
    throw std::runtime_error("load_density: unknown model kind '" + kind + "'");
  }
  std::string token;
  if (!(in >> token >> fd.normalizer.mean_loglik >> fd.normalizer.std_loglik) ||
      token != "norm") {
    throw std::runtime_error("load_density: missing norm line in " + path);
  }
  return fd;
}

}  // namespace dipedl
