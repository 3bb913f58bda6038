#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dipedl/mlp.hpp"

using namespace dipedl;
using Catch::Approx;

namespace {

MLPParameters zeroed(MLPParameters params) {
  for (Layer& layer : params.layers) {
    for (double& w : layer.weights) w = 0.0;
    for (double& b : layer.biases) b = 0.0;
  }
  return params;
}

Batch tiny_batch(Rng& rng, int n, int d, int k) {
  Batch batch;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(static_cast<size_t>(d));
    for (double& v : x) v = rng.normal();
    batch.inputs.push_back(std::move(x));
    batch.targets.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
  }
  return batch;
}

}  // namespace

TEST_CASE("forward: zeroed evidence head gives softplus(0) = ln 2") {
  const MLPParameters params =
      zeroed(make_mlp(2, {4}, 3, HeadKind::evidence, RandomSeed{1}));
  const std::vector<double> y = mlp_forward(params, {0.3, -0.7});
  REQUIRE(y.size() == 3);
  for (double v : y) REQUIRE(v == Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("forward: zeroed probability head gives uniform") {
  const MLPParameters params =
      zeroed(make_mlp(2, {4}, 5, HeadKind::probability, RandomSeed{1}));
  const std::vector<double> y = mlp_forward(params, {1.0, 2.0});
  for (double v : y) REQUIRE(v == Approx(0.2).margin(1e-15));
}

TEST_CASE("forward: saturated softmax approaches one-hot") {
  MLPParameters params = make_mlp(std::vector<LayerSpec>{{3, 3, Nonlinearity::identity}},
                                  HeadKind::probability, RandomSeed{1});
  params = zeroed(std::move(params));
  for (int i = 0; i < 3; ++i) {
    params.layers[0].weights[static_cast<size_t>(i) * 3 + i] = 1.0;  // identity map
  }
  const std::vector<double> y = mlp_forward(params, {50.0, 0.0, 0.0});
  REQUIRE(y[0] > 1.0 - 1e-12);
  REQUIRE(y[1] < 1e-12);
}

TEST_CASE("forward: probability head sums to one, evidence head non-negative") {
  Rng rng(RandomSeed{3});
  const MLPParameters prob = make_mlp(4, {8, 8}, 6, HeadKind::probability, RandomSeed{5});
  const MLPParameters evid = make_mlp(4, {8, 8}, 6, HeadKind::evidence, RandomSeed{6});
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = 4.0 * rng.normal();
    double s = 0.0;
    for (double v : mlp_forward(prob, x)) s += v;
    REQUIRE(s == Approx(1.0).margin(1e-9));
    for (double v : mlp_forward(evid, x)) REQUIRE(v >= 0.0);
  }
}

TEST_CASE("forward: input validation") {
  const MLPParameters params = make_mlp(2, {4}, 3, HeadKind::probability, RandomSeed{1});
  REQUIRE_THROWS_AS(mlp_forward(params, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(mlp_forward(params, {1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("gradient: finite differences for all loss kinds") {
  Rng rng(RandomSeed{17});
  const Batch batch = tiny_batch(rng, 6, 3, 3);

  LossSpec ce;
  ce.kind = LossKind::cross_entropy;
  const MLPParameters prob = make_mlp(3, {5}, 3, HeadKind::probability, RandomSeed{21});
  REQUIRE(finite_difference_check(prob, batch, ce, 1e-5) <= 1e-4);

  LossSpec edl;
  edl.kind = LossKind::edl;
  edl.alpha = {1.0, 1.0, 1.0};
  edl.lambda = 0.5;
  edl.anneal = 0.8;
  const MLPParameters evid = make_mlp(3, {5}, 3, HeadKind::evidence, RandomSeed{22});
  REQUIRE(finite_difference_check(evid, batch, edl, 1e-5) <= 1e-4);

  LossSpec tempered;
  tempered.kind = LossKind::tempered_kl;
  tempered.alpha = {0.8, 1.2, 1.0};
  tempered.nu = 2.0;
  REQUIRE(finite_difference_check(evid, batch, tempered, 1e-5) <= 1e-4);

  // Exponential evidence activation takes a different chain-rule path.
  const MLPParameters exp_head = make_mlp(3, {5}, 3, HeadKind::evidence, RandomSeed{23},
                                          EvidenceActivation::exponential);
  REQUIRE(finite_difference_check(exp_head, batch, edl, 1e-5) <= 1e-4);
}

TEST_CASE("central difference is exact for quadratics") {
  auto f = [](double x) { return 3.0 * x * x - 2.0 * x + 7.0; };
  for (double x : {-2.0, 0.0, 1.5, 10.0}) {
    const double analytic = 6.0 * x - 2.0;
    const double fd = central_difference(f, x, 1e-4);
    REQUIRE(std::fabs(fd - analytic) / (std::fabs(analytic) + 1e-12) <= 1e-9);
  }
}

TEST_CASE("gradient: duplicated batch leaves the mean gradient unchanged") {
  Rng rng(RandomSeed{31});
  const Batch batch = tiny_batch(rng, 5, 2, 3);
  Batch doubled = batch;
  doubled.inputs.insert(doubled.inputs.end(), batch.inputs.begin(), batch.inputs.end());
  doubled.targets.insert(doubled.targets.end(), batch.targets.begin(),
                         batch.targets.end());
  LossSpec ce;
  ce.kind = LossKind::cross_entropy;
  const MLPParameters params = make_mlp(2, {4}, 3, HeadKind::probability, RandomSeed{32});
  const GradientBundle g1 = mlp_gradient(params, batch, ce);
  const GradientBundle g2 = mlp_gradient(params, doubled, ce);
  for (size_t l = 0; l < g1.layers.size(); ++l) {
    for (size_t i = 0; i < g1.layers[l].weights.size(); ++i) {
      REQUIRE(g1.layers[l].weights[i] ==
              Approx(g2.layers[l].weights[i]).margin(1e-14));
    }
  }
}

TEST_CASE("gradient: linearity across loss combinations") {
  // grad(a*L1 + b*L2) = a*grad(L1) + b*grad(L2); realized through the EDL
  // loss whose KL weight enters linearly.
  Rng rng(RandomSeed{41});
  const Batch batch = tiny_batch(rng, 4, 2, 2);
  const MLPParameters params = make_mlp(2, {4}, 2, HeadKind::evidence, RandomSeed{42});
  LossSpec data_only;
  data_only.kind = LossKind::edl;
  data_only.alpha = {1.0, 1.0};
  data_only.lambda = 0.9;
  data_only.anneal = 0.0;
  LossSpec full = data_only;
  full.anneal = 1.0;
  LossSpec half = data_only;
  half.anneal = 0.5;
  const GradientBundle g0 = mlp_gradient(params, batch, data_only);
  const GradientBundle g1 = mlp_gradient(params, batch, full);
  const GradientBundle gh = mlp_gradient(params, batch, half);
  for (size_t l = 0; l < g0.layers.size(); ++l) {
    for (size_t i = 0; i < g0.layers[l].weights.size(); ++i) {
      const double blended =
          0.5 * g0.layers[l].weights[i] + 0.5 * g1.layers[l].weights[i];
      REQUIRE(gh.layers[l].weights[i] == Approx(blended).margin(1e-10));
    }
  }
}

TEST_CASE("gradient: near-stationary point has tiny gradient") {
  // Train briefly, then check the gradient shrank along the way.
  Rng rng(RandomSeed{51});
  Batch batch;
  batch.inputs = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  batch.targets = {1, 2, 1, 2};
  MLPParameters params = make_mlp(2, {8}, 2, HeadKind::probability, RandomSeed{52});
  AdamState adam = make_adam_state(params);
  LossSpec ce;
  ce.kind = LossKind::cross_entropy;
  double first_norm = 0.0;
  double last_norm = 0.0;
  for (int step = 0; step < 400; ++step) {
    const LossAndGradient lg = mlp_loss_gradient(params, batch, ce);
    double norm = 0.0;
    for (const GradientLayer& layer : lg.gradient.layers) {
      for (double g : layer.weights) norm += g * g;
      for (double g : layer.biases) norm += g * g;
    }
    norm = std::sqrt(norm);
    if (step == 0) first_norm = norm;
    last_norm = norm;
    optimizer_step(params, lg.gradient, adam, 0.05);
  }
  REQUIRE(last_norm < 1e-3 * first_norm);
}

TEST_CASE("optimizer: zero gradient leaves parameters unchanged") {
  MLPParameters params = make_mlp(2, {3}, 2, HeadKind::probability, RandomSeed{61});
  const MLPParameters before = params;
  AdamState adam = make_adam_state(params);
  GradientBundle zero;
  zero.layers.resize(params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    zero.layers[l].weights.assign(params.layers[l].weights.size(), 0.0);
    zero.layers[l].biases.assign(params.layers[l].biases.size(), 0.0);
  }
  optimizer_step(params, zero, adam, 0.1);
  for (size_t l = 0; l < params.layers.size(); ++l) {
    for (size_t i = 0; i < params.layers[l].weights.size(); ++i) {
      REQUIRE(params.layers[l].weights[i] == before.layers[l].weights[i]);
    }
  }
}

TEST_CASE("optimizer: first step descends against the gradient sign") {
  MLPParameters params = make_mlp(std::vector<LayerSpec>{{1, 1, Nonlinearity::identity}},
                                  HeadKind::evidence, RandomSeed{62});
  params.layers[0].weights[0] = 0.5;
  AdamState adam = make_adam_state(params);
  GradientBundle grads;
  grads.layers.resize(1);
  grads.layers[0].weights = {1.0};
  grads.layers[0].biases = {-2.0};
  optimizer_step(params, grads, adam, 0.01);
  REQUIRE(params.layers[0].weights[0] < 0.5);
  REQUIRE(params.layers[0].biases[0] > 0.0);

  grads.layers[0].weights = {std::nan("")};
  REQUIRE_THROWS_AS(optimizer_step(params, grads, adam, 0.01), std::invalid_argument);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  auto run = []() {
    Rng rng(RandomSeed{71});
    Batch batch;
    for (int i = 0; i < 10; ++i) {
      batch.inputs.push_back({rng.normal(), rng.normal()});
      batch.targets.push_back(1 + static_cast<int>(rng.below(2)));
    }
    MLPParameters params = make_mlp(2, {6}, 2, HeadKind::probability, RandomSeed{72});
    AdamState adam = make_adam_state(params);
    LossSpec ce;
    ce.kind = LossKind::cross_entropy;
    for (int step = 0; step < 50; ++step) {
      optimizer_step(params, mlp_gradient(params, batch, ce), adam, 0.01);
    }
    return params;
  };
  const MLPParameters a = run();
  const MLPParameters b = run();
  for (size_t l = 0; l < a.layers.size(); ++l) {
    for (size_t i = 0; i < a.layers[l].weights.size(); ++i) {
      REQUIRE(a.layers[l].weights[i] == b.layers[l].weights[i]);
    }
    for (size_t i = 0; i < a.layers[l].biases.size(); ++i) {
      REQUIRE(a.layers[l].biases[i] == b.layers[l].biases[i]);
    }
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const MLPParameters params =
      make_mlp(3, {7, 5}, 4, HeadKind::evidence, RandomSeed{81},
               EvidenceActivation::exponential);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dipedl_mlp_test.ckpt").string();
  save_mlp(params, path);
  const MLPParameters loaded = load_mlp(path);
  REQUIRE(loaded.head_kind == params.head_kind);
  REQUIRE(loaded.evidence_activation == params.evidence_activation);
  REQUIRE(loaded.layers.size() == params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    REQUIRE(loaded.layers[l].spec.nonlinearity == params.layers[l].spec.nonlinearity);
    for (size_t i = 0; i < params.layers[l].weights.size(); ++i) {
      REQUIRE(loaded.layers[l].weights[i] == params.layers[l].weights[i]);
    }
    for (size_t i = 0; i < params.layers[l].biases.size(); ++i) {
      REQUIRE(loaded.layers[l].biases[i] == params.layers[l].biases[i]);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("loss/head mismatches are rejected") {
  Rng rng(RandomSeed{91});
  const Batch batch = tiny_batch(rng, 3, 2, 2);
  LossSpec ce;
  ce.kind = LossKind::cross_entropy;
  const MLPParameters evid = make_mlp(2, {3}, 2, HeadKind::evidence, RandomSeed{92});
  REQUIRE_THROWS_AS(mlp_mean_loss(evid, batch, ce), std::invalid_argument);

  LossSpec edl;
  edl.kind = LossKind::edl;
  edl.alpha = {1.0, 1.0};
  const MLPParameters prob = make_mlp(2, {3}, 2, HeadKind::probability, RandomSeed{93});
  REQUIRE_THROWS_AS(mlp_mean_loss(prob, batch, edl), std::invalid_argument);

  LossSpec bad_alpha = edl;
  bad_alpha.alpha = {1.0, 1.0, 1.0};
  REQUIRE_THROWS_AS(mlp_mean_loss(evid, batch, bad_alpha), std::invalid_argument);

  REQUIRE_THROWS_AS(finite_difference_check(prob, batch, ce, 1e-8),
                    std::invalid_argument);  // step outside [1e-7, 1e-3]
}
