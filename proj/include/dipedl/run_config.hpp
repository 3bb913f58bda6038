#pragma once

// Flat key=value run configuration. Files hold one `key=value` per line with
// `#` comments; command-line overrides use the same syntax and take
// precedence over file values. Unknown keys and type errors are rejected
// with the offending key named.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/mlp.hpp"  // format_g17

namespace dipedl {

struct RunConfig {
  // data generation
  std::string dataset = "blobs";  // blobs | two_moons
  int classes = 2;
  int train_per_class = 1000;
  int test_per_class = 500;
  double sigma = 1.0;
  double blob_radius = 5.0;
  double moons_noise = 0.1;
  std::vector<double> ood_shift = {20.0, 0.0};
  double ood_scale = 1.0;

  // model and training
  std::string mode = "dip";  // dip | edl
  std::vector<int> hidden = {64, 64};
  double alpha = 1.0;  // uniform prior concentration per class
  double lambda = 1.0;
  double nu = 1.0;
  int anneal_epochs = 10;
  int epochs = 200;
  double learning_rate = 1e-3;
  std::string evidence_activation = "softplus";  // softplus | exponential

  // density estimator
  std::string density = "kde";  // kde | gmm | gda
  int gmm_components = 4;
  bool bandwidth_scott = true;
  double bandwidth_fixed = 0.0;
  double clamp = 30.0;

  // dip head
  double evidence_clamp = 1e12;
  bool use_n = true;
  bool use_de = true;
  bool use_nn = true;
  std::string score = "vacuity";  // vacuity | max_prob

  std::uint64_t seed = 0;
  std::string id_csv;
  std::string ood_csv;

  int n_train() const {
    return classes * train_per_class;
  }
};

namespace detail {

struct KeyValue {
  std::string key;
  std::string value;
};

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double config_double(const KeyValue& kv) {
  const char* begin = kv.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw std::invalid_argument("config key '" + kv.key +
                                "': expected a real number, got '" + kv.value + "'");
  }
  return v;
}

inline long config_int(const KeyValue& kv) {
  const char* begin = kv.value.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw std::invalid_argument("config key '" + kv.key +
                                "': expected an integer, got '" + kv.value + "'");
  }
  return v;
}

inline std::uint64_t config_u64(const KeyValue& kv) {
  const char* begin = kv.value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw std::invalid_argument("config key '" + kv.key +
                                "': expected an unsigned integer, got '" +
                                kv.value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

inline bool config_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw std::invalid_argument("config key '" + kv.key +
                              "': expected true/false, got '" + kv.value + "'");
}

inline std::vector<double> config_double_list(const KeyValue& kv) {
  std::vector<double> out;
  std::istringstream ss(kv.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(config_double(KeyValue{kv.key, trim(item)}));
  }
  if (out.empty()) {
    throw std::invalid_argument("config key '" + kv.key +
                                "': expected a comma-separated list of reals");
  }
  return out;
}

inline std::vector<int> config_int_list(const KeyValue& kv) {
  std::vector<int> out;
  std::istringstream ss(kv.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<int>(config_int(KeyValue{kv.key, trim(item)})));
  }
  if (out.empty()) {
    throw std::invalid_argument("config key '" + kv.key +
                                "': expected a comma-separated list of integers");
  }
  return out;
}

inline KeyValue parse_config_line(const std::string& raw, const std::string& where) {
  const std::string line = trim(raw);
  const size_t eq = line.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("config " + where + ": expected key=value, got '" +
                                line + "'");
  }
  return KeyValue{trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

inline void require_positive(double v, const std::string& key) {
  if (!(v > 0.0)) {
    throw std::invalid_argument("config key '" + key + "': must be positive");
  }
}

}  // namespace detail

// Parses a config file (optional) plus inline overrides. Later assignments
// win; `lambda` and `nu` are tied by lambda * nu = 1 and either may be given.
inline RunConfig parse_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  std::vector<detail::KeyValue> pairs;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      throw std::invalid_argument("config file not found: " + config_path);
    }
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = detail::trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      pairs.push_back(detail::parse_config_line(
          stripped, config_path + ":" + std::to_string(line_no)));
    }
  }
  for (const std::string& raw : overrides) {
    pairs.push_back(detail::parse_config_line(raw, "override"));
  }

  RunConfig config;
  std::optional<double> lambda_in;
  std::optional<double> nu_in;
  for (const detail::KeyValue& kv : pairs) {
    if (kv.key == "dataset") {
      if (kv.value != "blobs" && kv.value != "two_moons") {
        throw std::invalid_argument(
            "config key 'dataset': expected blobs|two_moons, got '" + kv.value + "'");
      }
      config.dataset = kv.value;
    } else if (kv.key == "classes") {
      config.classes = static_cast<int>(detail::config_int(kv));
      if (config.classes < 2) {
        throw std::invalid_argument("config key 'classes': must be >= 2");
      }
    } else if (kv.key == "train_per_class") {
      config.train_per_class = static_cast<int>(detail::config_int(kv));
      if (config.train_per_class < 1) {
        throw std::invalid_argument("config key 'train_per_class': must be >= 1");
      }
    } else if (kv.key == "test_per_class") {
      config.test_per_class = static_cast<int>(detail::config_int(kv));
      if (config.test_per_class < 1) {
        throw std::invalid_argument("config key 'test_per_class': must be >= 1");
      }
    } else if (kv.key == "sigma") {
      config.sigma = detail::config_double(kv);
      detail::require_positive(config.sigma, kv.key);
    } else if (kv.key == "blob_radius") {
      config.blob_radius = detail::config_double(kv);
      detail::require_positive(config.blob_radius, kv.key);
    } else if (kv.key == "moons_noise") {
      config.moons_noise = detail::config_double(kv);
      if (config.moons_noise < 0.0) {
        throw std::invalid_argument("config key 'moons_noise': must be >= 0");
      }
    } else if (kv.key == "ood_shift") {
      config.ood_shift = detail::config_double_list(kv);
    } else if (kv.key == "ood_scale") {
      config.ood_scale = detail::config_double(kv);
      detail::require_positive(config.ood_scale, kv.key);
    } else if (kv.key == "mode") {
      if (kv.value != "dip" && kv.value != "edl") {
        throw std::invalid_argument("config key 'mode': expected dip|edl, got '" +
                                    kv.value + "'");
      }
      config.mode = kv.value;
    } else if (kv.key == "hidden") {
      config.hidden = detail::config_int_list(kv);
      for (int h : config.hidden) {
        if (h < 1) throw std::invalid_argument("config key 'hidden': dims must be >= 1");
      }
    } else if (kv.key == "alpha") {
      config.alpha = detail::config_double(kv);
      detail::require_positive(config.alpha, kv.key);
    } else if (kv.key == "lambda") {
      lambda_in = detail::config_double(kv);
      detail::require_positive(*lambda_in, kv.key);
    } else if (kv.key == "nu") {
      nu_in = detail::config_double(kv);
      detail::require_positive(*nu_in, kv.key);
    } else if (kv.key == "anneal_epochs") {
      config.anneal_epochs = static_cast<int>(detail::config_int(kv));
      if (config.anneal_epochs < 0) {
        throw std::invalid_argument("config key 'anneal_epochs': must be >= 0");
      }
    } else if (kv.key == "epochs") {
      config.epochs = static_cast<int>(detail::config_int(kv));
      if (config.epochs < 1) {
        throw std::invalid_argument("config key 'epochs': must be >= 1");
      }
    } else if (kv.key == "learning_rate") {
      config.learning_rate = detail::config_double(kv);
      detail::require_positive(config.learning_rate, kv.key);
    } else if (kv.key == "evidence_activation") {
      if (kv.value != "softplus" && kv.value != "exponential") {
        throw std::invalid_argument(
            "config key 'evidence_activation': expected softplus|exponential");
      }
      config.evidence_activation = kv.value;
    } else if (kv.key == "density") {
      if (kv.value != "kde" && kv.value != "gmm" && kv.value != "gda") {
        throw std::invalid_argument(
            "config key 'density': expected kde|gmm|gda, got '" + kv.value + "'");
      }
      config.density = kv.value;
    } else if (kv.key == "gmm_components") {
      config.gmm_components = static_cast<int>(detail::config_int(kv));
      if (config.gmm_components < 1) {
        throw std::invalid_argument("config key 'gmm_components': must be >= 1");
      }
    } else if (kv.key == "bandwidth") {
      if (kv.value == "scott") {
        config.bandwidth_scott = true;
        config.bandwidth_fixed = 0.0;
      } else {
        config.bandwidth_fixed = detail::config_double(kv);
        detail::require_positive(config.bandwidth_fixed, kv.key);
        config.bandwidth_scott = false;
      }
    } else if (kv.key == "clamp") {
      config.clamp = detail::config_double(kv);
      detail::require_positive(config.clamp, kv.key);
    } else if (kv.key == "evidence_clamp") {
      config.evidence_clamp = detail::config_double(kv);
      detail::require_positive(config.evidence_clamp, kv.key);
    } else if (kv.key == "use_n") {
      config.use_n = detail::config_bool(kv);
    } else if (kv.key == "use_de") {
      config.use_de = detail::config_bool(kv);
    } else if (kv.key == "use_nn") {
      config.use_nn = detail::config_bool(kv);
    } else if (kv.key == "score") {
      if (kv.value != "vacuity" && kv.value != "max_prob") {
        throw std::invalid_argument(
            "config key 'score': expected vacuity|max_prob, got '" + kv.value + "'");
      }
      config.score = kv.value;
    } else if (kv.key == "seed") {
      config.seed = detail::config_u64(kv);
    } else if (kv.key == "id_csv") {
      config.id_csv = kv.value;
    } else if (kv.key == "ood_csv") {
      config.ood_csv = kv.value;
    } else {
      throw std::invalid_argument("unknown config key '" + kv.key + "'");
    }
  }

  if (lambda_in && nu_in) {
    if (std::fabs(*lambda_in * *nu_in - 1.0) > 1e-12) {
      throw std::invalid_argument(
          "config: lambda * nu must equal 1 within 1e-12 (lambda=" +
          std::to_string(*lambda_in) + ", nu=" + std::to_string(*nu_in) + ")");
    }
    config.lambda = *lambda_in;
    config.nu = *nu_in;
  } else if (lambda_in) {
    config.lambda = *lambda_in;
    config.nu = 1.0 / config.lambda;
  } else if (nu_in) {
    config.nu = *nu_in;
    config.lambda = 1.0 / config.nu;
  }

  if (config.dataset == "two_moons" && config.classes != 2) {
    throw std::invalid_argument("config: two_moons requires classes=2");
  }
  return config;
}

// Serializes the resolved configuration, one key per line in a fixed order.
inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "dataset=" << c.dataset << '\n';
  out << "classes=" << c.classes << '\n';
  out << "train_per_class=" << c.train_per_class << '\n';
  out << "test_per_class=" << c.test_per_class << '\n';
  out << "sigma=" << detail::format_g17(c.sigma) << '\n';
  out << "blob_radius=" << detail::format_g17(c.blob_radius) << '\n';
  out << "moons_noise=" << detail::format_g17(c.moons_noise) << '\n';
  out << "ood_shift=";
  for (size_t j = 0; j < c.ood_shift.size(); ++j) {
    if (j) out << ',';
    out << detail::format_g17(c.ood_shift[j]);
  }
  out << '\n';
  out << "ood_scale=" << detail::format_g17(c.ood_scale) << '\n';
  out << "mode=" << c.mode << '\n';
  out << "hidden=";
  for (size_t j = 0; j < c.hidden.size(); ++j) {
    if (j) out << ',';
    out << c.hidden[j];
  }
  out << '\n';
  out << "alpha=" << detail::format_g17(c.alpha) << '\n';
  out << "lambda=" << detail::format_g17(c.lambda) << '\n';
  out << "nu=" << detail::format_g17(c.nu) << '\n';
  out << "anneal_epochs=" << c.anneal_epochs << '\n';
  out << "epochs=" << c.epochs << '\n';
  out << "learning_rate=" << detail::format_g17(c.learning_rate) << '\n';
  out << "evidence_activation=" << c.evidence_activation << '\n';
  out << "density=" << c.density << '\n';
  out << "gmm_components=" << c.gmm_components << '\n';
  out << "bandwidth="
      << (c.bandwidth_scott ? std::string("scott")
                            : detail::format_g17(c.bandwidth_fixed))
      << '\n';
  out << "clamp=" << detail::format_g17(c.clamp) << '\n';
  out << "evidence_clamp=" << detail::format_g17(c.evidence_clamp) << '\n';
  out << "use_n=" << (c.use_n ? "true" : "false") << '\n';
  out << "use_de=" << (c.use_de ? "true" : "false") << '\n';
  out << "use_nn=" << (c.use_nn ? "true" : "false") << '\n';
  out << "score=" << c.score << '\n';
  out << "seed=" << c.seed << '\n';
  if (!c.id_csv.empty()) out << "id_csv=" << c.id_csv << '\n';
  if (!c.ood_csv.empty()) out << "ood_csv=" << c.ood_csv << '\n';
  return out.str();
}

}  // namespace dipedl
