#pragma once

// Evaluation metrics for one (ID, OOD) pair: classification accuracy, Brier
// scores against one-hot (ID) and uniform (OOD) targets, and the ranking
// metrics AUROC / AUPR with OOD as the positive class. Uncertainty scores
// are OOD-increasing by convention here.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/dip.hpp"
#include "dipedl/dirichlet.hpp"
#include "dipedl/mlp.hpp"  // format_g17

namespace dipedl {

struct ScoredSample {
  ProbabilityVector predictive;
  double uncertainty = 0.0;       // OOD-increasing
  std::optional<int> true_label;  // present iff the sample is ID
};

inline double accuracy(const std::vector<ScoredSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("accuracy: empty input");
  long correct = 0;
  for (const ScoredSample& s : samples) {
    if (!s.true_label) {
      throw std::invalid_argument("accuracy: sample without a label");
    }
    if (argmax_lowest_index(s.predictive.values()) == *s.true_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

enum class BrierTarget { one_hot, uniform };

// Mean over samples of sum_k (predictive_k - target_k)^2.
inline double brier_score(const std::vector<ScoredSample>& samples,
                          BrierTarget target_kind) {
  if (samples.empty()) throw std::invalid_argument("brier_score: empty input");
  double total = 0.0;
  for (const ScoredSample& s : samples) {
    const int K = s.predictive.size();
    double acc = 0.0;
    if (target_kind == BrierTarget::one_hot) {
      if (!s.true_label) {
        throw std::invalid_argument("brier_score: one_hot target needs labels");
      }
      for (int k = 0; k < K; ++k) {
        const double t = (k + 1 == *s.true_label) ? 1.0 : 0.0;
        const double e = s.predictive[k] - t;
        acc += e * e;
      }
    } else {
      const double t = 1.0 / static_cast<double>(K);
      for (int k = 0; k < K; ++k) {
        const double e = s.predictive[k] - t;
        acc += e * e;
      }
    }
    total += acc;
  }
  return total / static_cast<double>(samples.size());
}

// Rank-based AUROC (Mann-Whitney with average ranks for ties); equals
// P(ood > id) + 0.5 P(ood == id).
inline double auroc(const std::vector<double>& id_scores,
                    const std::vector<double>& ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw std::invalid_argument("auroc: both score sets must be non-empty");
  }
  struct Entry {
    double score;
    bool ood;
  };
  std::vector<Entry> entries;
  entries.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) entries.push_back({s, false});
  for (double s : ood_scores) entries.push_back({s, true});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });
  double rank_sum_ood = 0.0;
  size_t i = 0;
  while (i < entries.size()) {
    size_t j = i;
    while (j < entries.size() && entries[j].score == entries[i].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k) {
      if (entries[k].ood) rank_sum_ood += avg_rank;
    }
    i = j;
  }
  const double n_o = static_cast<double>(ood_scores.size());
  const double n_i = static_cast<double>(id_scores.size());
  const double u = rank_sum_ood - n_o * (n_o + 1.0) / 2.0;
  return u / (n_i * n_o);
}

// Area under the precision-recall curve with OOD positive, computed by
// step-wise summation sum (R_i - R_{i-1}) * P_i over descending score
// thresholds; tied scores are processed as one threshold group.
inline double aupr(const std::vector<double>& id_scores,
                   const std::vector<double>& ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw std::invalid_argument("aupr: both score sets must be non-empty");
  }
  struct Entry {
    double score;
    bool ood;
  };
  std::vector<Entry> entries;
  entries.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) entries.push_back({s, false});
  for (double s : ood_scores) entries.push_back({s, true});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score > b.score; });
  const double positives = static_cast<double>(ood_scores.size());
  double tp = 0.0;
  double fp = 0.0;
  double recall_prev = 0.0;
  double area = 0.0;
  size_t i = 0;
  while (i < entries.size()) {
    size_t j = i;
    while (j < entries.size() && entries[j].score == entries[i].score) ++j;
    for (size_t k = i; k < j; ++k) {
      if (entries[k].ood) tp += 1.0;
      else fp += 1.0;
    }
    const double recall = tp / positives;
    const double precision = tp / (tp + fp);
    area += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return area;
}

struct MetricsReport {
  double accuracy = 0.0;
  double brier_id = 0.0;
  double brier_ood = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  long n_id = 0;
  long n_ood = 0;
};

inline MetricsReport evaluate_pair(const std::vector<ScoredSample>& id_samples,
                                   const std::vector<ScoredSample>& ood_samples) {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
  id_scores.reserve(id_samples.size());
  ood_scores.reserve(ood_samples.size());
  for (const ScoredSample& s : id_samples) id_scores.push_back(s.uncertainty);
  for (const ScoredSample& s : ood_samples) ood_scores.push_back(s.uncertainty);
  MetricsReport report;
  report.accuracy = accuracy(id_samples);
  report.brier_id = brier_score(id_samples, BrierTarget::one_hot);
  report.brier_ood = brier_score(ood_samples, BrierTarget::uniform);
  report.auroc = auroc(id_scores, ood_scores);
  report.aupr = aupr(id_scores, ood_scores);
  report.n_id = static_cast<long>(id_samples.size());
  report.n_ood = static_cast<long>(ood_samples.size());
  return report;
}

inline std::string metrics_csv_header() {
  return "model,id_set,ood_set,accuracy,brier_id,brier_ood,auroc,aupr,n_id,n_ood";
}

inline std::string metrics_csv_row(const std::string& model,
                                   const std::string& id_set,
                                   const std::string& ood_set,
                                   const MetricsReport& report) {
  std::ostringstream out;
  out << model << ',' << id_set << ',' << ood_set << ','
      << detail::format_g17(report.accuracy) << ','
      << detail::format_g17(report.brier_id) << ','
      << detail::format_g17(report.brier_ood) << ','
      << detail::format_g17(report.auroc) << ','
      << detail::format_g17(report.aupr) << ',' << report.n_id << ','
      << report.n_ood;
  return out.str();
}

}  // namespace dipedl
