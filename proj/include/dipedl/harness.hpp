#pragma once

// Batch workflow behind the CLI: train writes checkpoints, CSVs and a
// training log into a run directory; eval scores an (ID, OOD) pair against
// those checkpoints; ablate sweeps the toggle grid. Everything written here
// is byte-deterministic for a fixed config and seed.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/datasets.hpp"
#include "dipedl/density.hpp"
#include "dipedl/dip.hpp"
#include "dipedl/edl_objective.hpp"
#include "dipedl/metrics.hpp"
#include "dipedl/mlp.hpp"
#include "dipedl/run_config.hpp"

namespace dipedl {

namespace detail {

// Fixed substream tags so dataset, init and fit streams never overlap.
constexpr std::uint64_t kTrainDataTag = 1;
constexpr std::uint64_t kTestDataTag = 2;
constexpr std::uint64_t kOodDataTag = 3;
constexpr std::uint64_t kInitTag = 4;
constexpr std::uint64_t kDensityTag = 5;

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed on " + path);
}

inline std::string basename_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace detail

inline LabelledDataset generate_train_set(const RunConfig& config) {
  const RandomSeed seed = substream(RandomSeed{config.seed}, detail::kTrainDataTag);
  if (config.dataset == "blobs") {
    return make_blobs(config.classes, config.train_per_class,
                      blob_circle_centers(config.classes, config.blob_radius),
                      config.sigma, seed);
  }
  return make_two_moons(2 * config.train_per_class, config.moons_noise, seed);
}

inline LabelledDataset generate_test_set(const RunConfig& config) {
  const RandomSeed seed = substream(RandomSeed{config.seed}, detail::kTestDataTag);
  if (config.dataset == "blobs") {
    return make_blobs(config.classes, config.test_per_class,
                      blob_circle_centers(config.classes, config.blob_radius),
                      config.sigma, seed);
  }
  return make_two_moons(2 * config.test_per_class, config.moons_noise, seed);
}

inline std::vector<double> prior_vector(const RunConfig& config) {
  return std::vector<double>(static_cast<size_t>(config.classes), config.alpha);
}

inline FittedDensity fit_density(const RunConfig& config,
                                 const LabelledDataset& train) {
  FittedDensity fd;
  if (config.density == "kde") {
    const BandwidthRule rule = config.bandwidth_scott
                                   ? BandwidthRule::scott()
                                   : BandwidthRule::fixed(config.bandwidth_fixed);
    fd.model = kde_build(train.features, rule);
  } else if (config.density == "gmm") {
    fd.model = gmm_fit_em(train.features, config.gmm_components,
                          substream(RandomSeed{config.seed}, detail::kDensityTag));
  } else {
    fd.model = gda_fit(train.features, train.labels, config.classes);
  }
  std::vector<double> logliks;
  logliks.reserve(train.features.size());
  for (const auto& x : train.features) logliks.push_back(fd.log_density_at(x));
  fd.normalizer = normalizer_fit(logliks);
  return fd;
}

struct TrainOutputs {
  std::string classifier_path;
  std::string density_path;  // empty in edl mode
  std::string train_log_path;
  std::string train_csv;
  std::string id_test_csv;
  std::string ood_csv;
  double final_loss = 0.0;
};

// Trains the classifier (cross-entropy for dip mode, the EDL objective for
// edl mode), fits the density estimator in dip mode, and writes every
// artifact into out_dir. Full-batch updates keep the trajectory
// deterministic.
inline TrainOutputs cmd_train(const RunConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  TrainOutputs out;

  const LabelledDataset train = generate_train_set(config);
  const LabelledDataset id_test = generate_test_set(config);
  if (static_cast<int>(config.ood_shift.size()) != train.dim()) {
    throw std::invalid_argument("config key 'ood_shift': expected " +
                                std::to_string(train.dim()) + " components");
  }
  const std::vector<std::vector<double>> ood_features =
      make_ood_shift(id_test, config.ood_shift, config.ood_scale,
                     substream(RandomSeed{config.seed}, detail::kOodDataTag));

  out.train_csv = out_dir + "/train.csv";
  out.id_test_csv = out_dir + "/id_test.csv";
  out.ood_csv = out_dir + "/ood.csv";
  write_dataset_csv(out.train_csv, train.features, train.labels);
  write_dataset_csv(out.id_test_csv, id_test.features, id_test.labels);
  write_dataset_csv(out.ood_csv, ood_features, {});

  const bool edl_mode = config.mode == "edl";
  const EvidenceActivation activation =
      config.evidence_activation == "softplus" ? EvidenceActivation::softplus
                                               : EvidenceActivation::exponential;
  MLPParameters params = make_mlp(
      train.dim(), config.hidden, config.classes,
      edl_mode ? HeadKind::evidence : HeadKind::probability,
      substream(RandomSeed{config.seed}, detail::kInitTag), activation);

  Batch batch{train.features, train.labels};
  AdamState adam = make_adam_state(params);
  LossSpec spec;
  if (edl_mode) {
    spec.kind = LossKind::edl;
    spec.alpha = prior_vector(config);
    spec.lambda = config.lambda;
  } else {
    spec.kind = LossKind::cross_entropy;
  }

  std::ostringstream log;
  log << "epoch,loss,anneal\n";
  double loss = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double anneal = anneal_coefficient(epoch, config.anneal_epochs);
    spec.anneal = anneal;
    try {
      const LossAndGradient lg = mlp_loss_gradient(params, batch, spec);
      loss = lg.mean_loss;
      if (!std::isfinite(loss)) {
        throw std::runtime_error("non-finite loss");
      }
      log << epoch << ',' << detail::format_g17(loss) << ','
          << detail::format_g17(anneal) << '\n';
      optimizer_step(params, lg.gradient, adam, config.learning_rate);
    } catch (const std::exception& e) {
      throw std::runtime_error("cmd_train: aborted at epoch " +
                               std::to_string(epoch) + ": " + e.what());
    }
  }
  out.final_loss = loss;

  out.train_log_path = out_dir + "/train_log.csv";
  detail::write_text_file(out.train_log_path, log.str());

  out.classifier_path = out_dir + "/classifier.ckpt";
  save_mlp(params, out.classifier_path);

  if (!edl_mode) {
    const FittedDensity fd = fit_density(config, train);
    out.density_path = out_dir + "/density.ckpt";
    save_density(fd, out.density_path);
  }

  detail::write_text_file(out_dir + "/config.txt", config_to_text(config));
  return out;
}

struct EvalArtifacts {
  MLPParameters classifier;
  std::optional<FittedDensity> density;
  LabelledDataset id_set;
  LabelledDataset ood_set;
  std::string id_name;
  std::string ood_name;
};

inline EvalArtifacts load_eval_artifacts(const RunConfig& config,
                                         const std::string& run_dir) {
  EvalArtifacts art;
  art.classifier = load_mlp(run_dir + "/classifier.ckpt");
  if (config.mode == "dip") {
    art.density = load_density(run_dir + "/density.ckpt");
  }
  const std::string id_path =
      config.id_csv.empty() ? run_dir + "/id_test.csv" : config.id_csv;
  const std::string ood_path =
      config.ood_csv.empty() ? run_dir + "/ood.csv" : config.ood_csv;
  art.id_set = read_dataset_csv(id_path);
  art.ood_set = read_dataset_csv(ood_path);
  art.id_name = detail::basename_of(id_path);
  art.ood_name = detail::basename_of(ood_path);
  if (art.id_set.labels.empty()) {
    throw std::invalid_argument("cmd_eval: ID set " + id_path + " has no labels");
  }
  if (art.id_set.dim() != art.classifier.input_dim() ||
      art.ood_set.dim() != art.classifier.input_dim()) {
    throw std::invalid_argument(
        "cmd_eval: checkpoint expects dim " +
        std::to_string(art.classifier.input_dim()) + ", data has dim " +
        std::to_string(art.id_set.dim()));
  }
  if (art.density && art.density->dim() != art.id_set.dim()) {
    throw std::invalid_argument("cmd_eval: density checkpoint dimension mismatch");
  }
  if (art.classifier.output_dim() != config.classes) {
    throw std::invalid_argument("cmd_eval: checkpoint has " +
                                std::to_string(art.classifier.output_dim()) +
                                " classes, config says " +
                                std::to_string(config.classes));
  }
  const bool edl_mode = config.mode == "edl";
  if (edl_mode && art.classifier.head_kind != HeadKind::evidence) {
    throw std::invalid_argument("cmd_eval: edl mode needs an evidence-head checkpoint");
  }
  if (!edl_mode && art.classifier.head_kind != HeadKind::probability) {
    throw std::invalid_argument("cmd_eval: dip mode needs a probability-head checkpoint");
  }
  return art;
}

struct ScoredSplit {
  std::vector<ScoredSample> id_samples;
  std::vector<ScoredSample> ood_samples;
  std::vector<double> id_raw_scores;   // as named by config.score
  std::vector<double> ood_raw_scores;
  std::vector<double> id_density_scales;   // dip mode only
  std::vector<double> ood_density_scales;  // dip mode only
};

// Scores one split. The stored ScoredSample.uncertainty is OOD-increasing
// (vacuity as-is, max_prob negated).
inline ScoredSplit score_samples(const RunConfig& config,
                                 const EvalArtifacts& art) {
  const bool dip_mode = config.mode == "dip";
  const UncertaintyKind kind = config.score == "vacuity"
                                   ? UncertaintyKind::vacuity
                                   : UncertaintyKind::max_prob;
  const ConcentrationVector alpha{prior_vector(config)};
  std::optional<DIPConfig> dip_config;
  if (dip_mode) {
    dip_config.emplace(alpha, config.n_train(), config.use_n, config.use_de,
                       config.use_nn, config.evidence_clamp);
  }

  ScoredSplit split;
  auto score_one = [&](const std::vector<double>& x,
                       std::optional<int> label) -> void {
    DIPPosterior posterior = [&]() {
      if (dip_mode) {
        const double ds = art.density->scale_at(x, config.clamp);
        const std::vector<double> probs = mlp_forward(art.classifier, x);
        if (label) {
          split.id_density_scales.push_back(ds);
        } else {
          split.ood_density_scales.push_back(ds);
        }
        return dip_predict(*dip_config, ds, ProbabilityVector(probs));
      }
      // edl mode: Dir(alpha + NN(x)) directly.
      const std::vector<double> evidence = mlp_forward(art.classifier, x);
      std::vector<double> beta(alpha.values());
      for (size_t k = 0; k < beta.size(); ++k) beta[k] += evidence[k];
      ConcentrationVector conc{std::move(beta)};
      ProbabilityVector predictive = dirichlet_mean(conc);
      const double u = vacuity(conc);
      const int hard = argmax_lowest_index(predictive.values());
      return DIPPosterior{std::move(conc), std::move(predictive), u, hard};
    }();
    const double raw = uncertainty_score(posterior, kind);
    const double oriented = kind == UncertaintyKind::vacuity ? raw : -raw;
    ScoredSample sample{posterior.predictive, oriented, label};
    if (label) {
      split.id_samples.push_back(std::move(sample));
      split.id_raw_scores.push_back(raw);
    } else {
      split.ood_samples.push_back(std::move(sample));
      split.ood_raw_scores.push_back(raw);
    }
  };

  for (size_t i = 0; i < art.id_set.features.size(); ++i) {
    score_one(art.id_set.features[i], art.id_set.labels[i]);
  }
  for (const auto& x : art.ood_set.features) score_one(x, std::nullopt);
  return split;
}

struct EvalOutputs {
  MetricsReport report;
  std::string metrics_csv;
  std::string scores_csv;
  std::string density_scales_csv;  // dip mode only
};

inline EvalOutputs cmd_eval(const RunConfig& config, const std::string& run_dir,
                            const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const EvalArtifacts art = load_eval_artifacts(config, run_dir);
  const ScoredSplit split = score_samples(config, art);

  EvalOutputs out;
  out.report = evaluate_pair(split.id_samples, split.ood_samples);

  std::ostringstream metrics;
  metrics << metrics_csv_header() << '\n'
          << metrics_csv_row(config.mode, art.id_name, art.ood_name, out.report)
          << '\n';
  out.metrics_csv = out_dir + "/metrics.csv";
  detail::write_text_file(out.metrics_csv, metrics.str());

  std::ostringstream scores;
  scores << "split,score,max_prob\n";
  auto dump = [&](const char* tag, const std::vector<ScoredSample>& samples,
                  const std::vector<double>& raw) {
    for (size_t i = 0; i < samples.size(); ++i) {
      double max_prob = samples[i].predictive[0];
      for (int k = 1; k < samples[i].predictive.size(); ++k) {
        if (samples[i].predictive[k] > max_prob) max_prob = samples[i].predictive[k];
      }
      scores << tag << ',' << detail::format_g17(raw[i]) << ','
             << detail::format_g17(max_prob) << '\n';
    }
  };
  dump("id", split.id_samples, split.id_raw_scores);
  dump("ood", split.ood_samples, split.ood_raw_scores);
  out.scores_csv = out_dir + "/scores.csv";
  detail::write_text_file(out.scores_csv, scores.str());

  if (config.mode == "dip") {
    std::ostringstream ds;
    ds << "split,density_scale\n";
    for (double v : split.id_density_scales) {
      ds << "id," << detail::format_g17(v) << '\n';
    }
    for (double v : split.ood_density_scales) {
      ds << "ood," << detail::format_g17(v) << '\n';
    }
    out.density_scales_csv = out_dir + "/density_scales.csv";
    detail::write_text_file(out.density_scales_csv, ds.str());
  }
  return out;
}

struct AblationRow {
  bool use_n = true;
  bool use_de = true;
  bool use_nn = true;
  MetricsReport report;
};

struct AblationOutputs {
  std::vector<AblationRow> rows;
  std::string ablation_csv;
};

// Trains the full model once (toggles do not enter training), then evaluates
// the seven non-trivial toggle combinations: the three pairwise rows, the
// full model, and the three single-component rows.
inline AblationOutputs cmd_ablate(const RunConfig& config,
                                  const std::string& out_dir) {
  RunConfig train_config = config;
  train_config.use_n = train_config.use_de = train_config.use_nn = true;
  if (train_config.mode != "dip") {
    throw std::invalid_argument("cmd_ablate: requires mode=dip");
  }
  cmd_train(train_config, out_dir);
  const EvalArtifacts art = load_eval_artifacts(train_config, out_dir);

  static constexpr bool kGrid[7][3] = {
      {true, true, false}, {true, false, true}, {false, true, true},
      {true, true, true},  {true, false, false}, {false, true, false},
      {false, false, true},
  };

  AblationOutputs out;
  std::ostringstream csv;
  csv << "use_n,use_de,use_nn,accuracy,brier_id,brier_ood,auroc,aupr,n_id,n_ood\n";
  for (const auto& row : kGrid) {
    RunConfig row_config = train_config;
    row_config.use_n = row[0];
    row_config.use_de = row[1];
    row_config.use_nn = row[2];
    const ScoredSplit split = score_samples(row_config, art);
    AblationRow result{row[0], row[1], row[2],
                       evaluate_pair(split.id_samples, split.ood_samples)};
    csv << (row[0] ? 1 : 0) << ',' << (row[1] ? 1 : 0) << ',' << (row[2] ? 1 : 0)
        << ',' << detail::format_g17(result.report.accuracy) << ','
        << detail::format_g17(result.report.brier_id) << ','
        << detail::format_g17(result.report.brier_ood) << ','
        << detail::format_g17(result.report.auroc) << ','
        << detail::format_g17(result.report.aupr) << ',' << result.report.n_id
        << ',' << result.report.n_ood << '\n';
    out.rows.push_back(std::move(result));
  }
  out.ablation_csv = out_dir + "/ablation.csv";
  detail::write_text_file(out.ablation_csv, csv.str());
  return out;
}

}  // namespace dipedl
