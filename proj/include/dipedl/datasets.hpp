#pragma once

// Seeded synthetic generators with known marginal density and conditional
// label distribution, plus CSV dataset I/O. Generation is single-threaded so
// the seed stream is reproducible; datasets are immutable afterwards.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/mlp.hpp"  // format_g17
#include "dipedl/rng.hpp"

namespace dipedl {

// Exact mixture-of-isotropic-Gaussians truth: marginal density and the
// Bayes-rule conditional.
struct GeneratorTruth {
  std::vector<std::vector<double>> centers;  // K x d
  double sigma = 1.0;
  std::vector<double> class_weights;  // simplex over K

  int dim() const { return static_cast<int>(centers.front().size()); }

  double log_density_at(const std::vector<double>& x) const {
    const int d = dim();
    const double log_norm =
        -0.5 * d * std::log(2.0 * 3.14159265358979323846 * sigma * sigma);
    double max_e = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(centers.size());
    for (size_t k = 0; k < centers.size(); ++k) {
      double q = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = x[static_cast<size_t>(j)] - centers[k][static_cast<size_t>(j)];
        q += c * c;
      }
      terms[k] = std::log(class_weights[k]) + log_norm - 0.5 * q / (sigma * sigma);
      if (terms[k] > max_e) max_e = terms[k];
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - max_e);
    return max_e + std::log(s);
  }

  double density_at(const std::vector<double>& x) const {
    return std::exp(log_density_at(x));
  }

  // P(Y = k | x) by Bayes' rule over the mixture components.
  std::vector<double> conditional_at(const std::vector<double>& x) const {
    const int d = dim();
    std::vector<double> logits(centers.size());
    double max_e = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < centers.size(); ++k) {
      double q = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = x[static_cast<size_t>(j)] - centers[k][static_cast<size_t>(j)];
        q += c * c;
      }
      logits[k] = std::log(class_weights[k]) - 0.5 * q / (sigma * sigma);
      if (logits[k] > max_e) max_e = logits[k];
    }
    double s = 0.0;
    for (double& v : logits) {
      v = std::exp(v - max_e);
      s += v;
    }
    for (double& v : logits) v /= s;
    return logits;
  }
};

struct LabelledDataset {
  std::vector<std::vector<double>> features;  // n x d
  std::vector<int> labels;                    // 1..K, empty for OOD sets
  std::optional<GeneratorTruth> truth;

  int size() const { return static_cast<int>(features.size()); }
  int dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
};

// K centers equally spaced on a circle of the given radius (d = 2).
inline std::vector<std::vector<double>> blob_circle_centers(int num_classes,
                                                            double radius) {
  std::vector<std::vector<double>> centers;
  for (int k = 0; k < num_classes; ++k) {
    const double angle = 2.0 * 3.14159265358979323846 * k / num_classes;
    centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return centers;
}

// Isotropic Gaussian blobs, `per_class` points per class in class order.
inline LabelledDataset make_blobs(int num_classes, int per_class,
                                  const std::vector<std::vector<double>>& centers,
                                  double sigma, RandomSeed seed) {
  if (per_class < 1) throw std::invalid_argument("make_blobs: per_class must be >= 1");
  if (static_cast<int>(centers.size()) != num_classes || num_classes < 2) {
    throw std::invalid_argument("make_blobs: need one center per class, K >= 2");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("make_blobs: sigma must be > 0");
  const size_t d = centers.front().size();
  for (size_t a = 0; a < centers.size(); ++a) {
    if (centers[a].size() != d) {
      throw std::invalid_argument("make_blobs: ragged centers");
    }
    for (size_t b = a + 1; b < centers.size(); ++b) {
      double dist = 0.0;
      for (size_t j = 0; j < d; ++j) {
        const double c = centers[a][j] - centers[b][j];
        dist += c * c;
      }
      if (!(dist > 0.0)) {
        throw std::invalid_argument("make_blobs: centers must be pairwise distinct");
      }
    }
  }
  Rng rng(seed);
  LabelledDataset data;
  for (int k = 0; k < num_classes; ++k) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> x(d);
      for (size_t j = 0; j < d; ++j) {
        x[j] = centers[static_cast<size_t>(k)][j] + sigma * rng.normal();
      }
      data.features.push_back(std::move(x));
      data.labels.push_back(k + 1);
    }
  }
  GeneratorTruth truth;
  truth.centers = centers;
  truth.sigma = sigma;
  truth.class_weights.assign(static_cast<size_t>(num_classes),
                             1.0 / static_cast<double>(num_classes));
  data.truth = std::move(truth);
  return data;
}

// Interleaved half-circles with Gaussian noise; labels are balanced
// (ceil(n/2) on the outer moon). No closed-form density, so truth is absent.
inline LabelledDataset make_two_moons(int n, double noise, RandomSeed seed) {
  if (n < 2) throw std::invalid_argument("make_two_moons: n must be >= 2");
  if (noise < 0.0) throw std::invalid_argument("make_two_moons: noise must be >= 0");
  const int n_outer = (n + 1) / 2;
  const int n_inner = n / 2;
  Rng rng(seed);
  LabelledDataset data;
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n_outer; ++i) {
    const double t = n_outer > 1 ? pi * i / (n_outer - 1) : 0.0;
    data.features.push_back({std::cos(t) + noise * rng.normal(),
                             std::sin(t) + noise * rng.normal()});
    data.labels.push_back(1);
  }
  for (int i = 0; i < n_inner; ++i) {
    const double t = n_inner > 1 ? pi * i / (n_inner - 1) : 0.0;
    data.features.push_back({1.0 - std::cos(t) + noise * rng.normal(),
                             0.5 - std::sin(t) + noise * rng.normal()});
    data.labels.push_back(2);
  }
  return data;
}

// Bootstrap-resamples the base features, then dilates by `scale` about the
// origin and translates by `shift`. Labels are dropped.
inline std::vector<std::vector<double>> make_ood_shift(
    const LabelledDataset& base, const std::vector<double>& shift, double scale,
    RandomSeed seed) {
  if (base.features.empty()) {
    throw std::invalid_argument("make_ood_shift: empty base dataset");
  }
  if (static_cast<int>(shift.size()) != base.dim()) {
    throw std::invalid_argument("make_ood_shift: shift dimension mismatch");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("make_ood_shift: scale must be > 0");
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(base.features.size());
  for (size_t i = 0; i < base.features.size(); ++i) {
    const auto& src =
        base.features[rng.below(static_cast<std::uint64_t>(base.features.size()))];
    std::vector<double> x(src.size());
    for (size_t j = 0; j < src.size(); ++j) x[j] = scale * src[j] + shift[j];
    out.push_back(std::move(x));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline double parse_csv_double(const std::string& field, long line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw std::runtime_error("csv line " + std::to_string(line_no) +
                             ": non-numeric cell '" + field + "'");
  }
  return v;
}

}  // namespace detail

// Header `x1,...,xd[,label]`; features written with 17 significant digits so
// a write/read round trip reproduces them exactly.
inline void write_dataset_csv(const std::string& path,
                              const std::vector<std::vector<double>>& features,
                              const std::vector<int>& labels) {
  if (features.empty()) {
    throw std::invalid_argument("write_dataset_csv: empty dataset");
  }
  if (!labels.empty() && labels.size() != features.size()) {
    throw std::invalid_argument("write_dataset_csv: labels/features length mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  const size_t d = features.front().size();
  for (size_t j = 0; j < d; ++j) {
    if (j) out << ',';
    out << 'x' << (j + 1);
  }
  if (!labels.empty()) out << ",label";
  out << '\n';
  for (size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) {
      throw std::invalid_argument("write_dataset_csv: ragged features");
    }
    for (size_t j = 0; j < d; ++j) {
      if (j) out << ',';
      out << detail::format_g17(features[i][j]);
    }
    if (!labels.empty()) out << ',' << labels[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed on " + path);
}

// Reads a dataset CSV; a missing label column loads as an unlabelled OOD set.
// Malformed input errors carry the 1-based line number.
inline LabelledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_dataset_csv: " + path + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);
  bool has_label = !header.empty() && header.back() == "label";
  const size_t d = header.size() - (has_label ? 1 : 0);
  if (d < 1) throw std::runtime_error("csv line 1: malformed header '" + line + "'");
  for (size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw std::runtime_error("csv line 1: malformed header '" + line + "'");
    }
  }
  LabelledDataset data;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> x(d);
    for (size_t j = 0; j < d; ++j) x[j] = detail::parse_csv_double(fields[j], line_no);
    data.features.push_back(std::move(x));
    if (has_label) {
      const char* begin = fields.back().c_str();
      char* end = nullptr;
      const long label = std::strtol(begin, &end, 10);
      if (end == begin || *end != '\0' || label < 1) {
        throw std::runtime_error("csv line " + std::to_string(line_no) +
                                 ": bad label '" + fields.back() + "'");
      }
      data.labels.push_back(static_cast<int>(label));
    }
  }
  if (data.features.empty()) {
    throw std::runtime_error("read_dataset_csv: " + path + " has no data rows");
  }
  return data;
}

}  // namespace dipedl
