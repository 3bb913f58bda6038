#pragma once

// Small dense multilayer perceptron with exact reverse-mode gradients and a
// deterministic Adam optimizer. Two output heads:
//   evidence    — componentwise softplus (or exp), non-negative outputs
//   probability — softmax, outputs on the simplex
// Targets and class indices are 1-based. The training path is single-threaded
// and bit-deterministic for a fixed seed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipedl/dirichlet.hpp"
#include "dipedl/rng.hpp"

namespace dipedl {

enum class Nonlinearity { rectifier, identity };
enum class HeadKind { evidence, probability };
enum class EvidenceActivation { softplus, exponential };

struct LayerSpec {
  int input_dim = 0;
  int output_dim = 0;
  Nonlinearity nonlinearity = Nonlinearity::identity;
};

struct Layer {
  LayerSpec spec;
  std::vector<double> weights;  // row-major, output_dim x input_dim
  std::vector<double> biases;   // output_dim
};

struct MLPParameters {
  std::vector<Layer> layers;
  HeadKind head_kind = HeadKind::probability;
  EvidenceActivation evidence_activation = EvidenceActivation::softplus;

  int input_dim() const { return layers.front().spec.input_dim; }
  int output_dim() const { return layers.back().spec.output_dim; }
};

struct Batch {
  std::vector<std::vector<double>> inputs;
  std::vector<int> targets;  // 1..K
};

enum class LossKind { edl, cross_entropy, tempered_kl };

// Objective definition handed to the gradient/loss routines. `alpha` is the
// prior concentration (edl and tempered_kl); `lambda`/`anneal` weight the KL
// regularizer of the edl loss; `nu` tempers the per-sample posterior target
// of the tempered_kl loss.
struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  std::vector<double> alpha;
  double lambda = 1.0;
  double anneal = 1.0;
  double nu = 1.0;
};

struct GradientLayer {
  std::vector<double> weights;
  std::vector<double> biases;
};

struct GradientBundle {
  std::vector<GradientLayer> layers;
};

namespace detail {

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  return z > 0.0 ? 1.0 / (1.0 + std::exp(-z))
                 : std::exp(z) / (1.0 + std::exp(z));
}

inline void validate_mlp(const MLPParameters& params) {
  if (params.layers.empty()) {
    throw std::invalid_argument("mlp: no layers");
  }
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    if (layer.spec.input_dim < 1 || layer.spec.output_dim < 1) {
      throw std::invalid_argument("mlp: layer dims must be >= 1");
    }
    if (l > 0 && params.layers[l - 1].spec.output_dim != layer.spec.input_dim) {
      throw std::invalid_argument("mlp: layer shapes do not chain at layer " +
                                  std::to_string(l));
    }
    const size_t w = static_cast<size_t>(layer.spec.input_dim) *
                     static_cast<size_t>(layer.spec.output_dim);
    if (layer.weights.size() != w ||
        layer.biases.size() != static_cast<size_t>(layer.spec.output_dim)) {
      throw std::invalid_argument("mlp: weight/bias sizes wrong at layer " +
                                  std::to_string(l));
    }
    for (double v : layer.weights) {
      if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite weight");
    }
    for (double v : layer.biases) {
      if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite bias");
    }
  }
}

struct ForwardTrace {
  // post[0] is the input; post[l+1] the activated output of layer l.
  std::vector<std::vector<double>> post;
  std::vector<std::vector<double>> pre;  // pre-activation per layer
};

inline void forward_core(const MLPParameters& params,
                         const std::vector<double>& x, ForwardTrace* trace,
                         std::vector<double>& out) {
  if (static_cast<int>(x.size()) != params.input_dim()) {
    throw std::invalid_argument("mlp_forward: input has dim " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(params.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("mlp_forward: non-finite input");
    }
  }
  std::vector<double> a = x;
  if (trace) {
    trace->post.clear();
    trace->pre.clear();
    trace->post.push_back(a);
  }
  for (const Layer& layer : params.layers) {
    const int in = layer.spec.input_dim;
    const int nout = layer.spec.output_dim;
    std::vector<double> z(static_cast<size_t>(nout));
    for (int r = 0; r < nout; ++r) {
      double acc = layer.biases[static_cast<size_t>(r)];
      const double* wrow = layer.weights.data() + static_cast<size_t>(r) * in;
      for (int c = 0; c < in; ++c) acc += wrow[c] * a[static_cast<size_t>(c)];
      z[static_cast<size_t>(r)] = acc;
    }
    if (trace) trace->pre.push_back(z);
    if (layer.spec.nonlinearity == Nonlinearity::rectifier) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    a = std::move(z);
    if (trace) trace->post.push_back(a);
  }
  out = std::move(a);
}

inline std::vector<double> apply_head(const MLPParameters& params,
                                      const std::vector<double>& a) {
  std::vector<double> y(a.size());
  if (params.head_kind == HeadKind::evidence) {
    if (params.evidence_activation == EvidenceActivation::softplus) {
      for (size_t k = 0; k < a.size(); ++k) y[k] = softplus(a[k]);
    } else {
      for (size_t k = 0; k < a.size(); ++k) y[k] = std::exp(a[k]);
    }
  } else {
    double m = a[0];
    for (double v : a) m = v > m ? v : m;
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
      y[k] = std::exp(a[k] - m);
      s += y[k];
    }
    for (double& v : y) v /= s;
  }
  return y;
}

// Per-sample loss value and its derivative with respect to the head's
// pre-activation output. Targets are 1-based.
struct SampleLoss {
  double value = 0.0;
  std::vector<double> d_preact;
};

inline SampleLoss sample_loss(const MLPParameters& params,
                              const std::vector<double>& preact, int target,
                              const LossSpec& spec) {
  const int K = static_cast<int>(preact.size());
  if (target < 1 || target > K) {
    throw std::out_of_range("loss: target " + std::to_string(target) +
                            " outside 1.." + std::to_string(K));
  }
  SampleLoss out;
  out.d_preact.assign(static_cast<size_t>(K), 0.0);

  if (spec.kind == LossKind::cross_entropy) {
    if (params.head_kind != HeadKind::probability) {
      throw std::invalid_argument("cross_entropy loss needs a probability head");
    }
    double m = preact[0];
    for (double v : preact) m = v > m ? v : m;
    double s = 0.0;
    for (double v : preact) s += std::exp(v - m);
    const double lse = m + std::log(s);
    out.value = lse - preact[static_cast<size_t>(target - 1)];
    for (int k = 0; k < K; ++k) {
      out.d_preact[static_cast<size_t>(k)] =
          std::exp(preact[static_cast<size_t>(k)] - lse);
    }
    out.d_preact[static_cast<size_t>(target - 1)] -= 1.0;
    return out;
  }

  // Dirichlet-based losses ride on the evidence head.
  if (params.head_kind != HeadKind::evidence) {
    throw std::invalid_argument("edl/tempered_kl losses need an evidence head");
  }
  if (static_cast<int>(spec.alpha.size()) != K) {
    throw std::invalid_argument("loss: alpha dimension mismatch");
  }
  std::vector<double> evidence(static_cast<size_t>(K));
  std::vector<double> dev(static_cast<size_t>(K));  // d evidence / d preact
  for (int k = 0; k < K; ++k) {
    const double z = preact[static_cast<size_t>(k)];
    if (params.evidence_activation == EvidenceActivation::softplus) {
      evidence[static_cast<size_t>(k)] = softplus(z);
      dev[static_cast<size_t>(k)] = sigmoid(z);
    } else {
      evidence[static_cast<size_t>(k)] = std::exp(z);
      dev[static_cast<size_t>(k)] = evidence[static_cast<size_t>(k)];
    }
  }
  std::vector<double> beta(static_cast<size_t>(K));
  double beta0 = 0.0;
  double excess = 0.0;  // sum_k (beta_k - alpha_k)
  for (int k = 0; k < K; ++k) {
    beta[static_cast<size_t>(k)] = spec.alpha[static_cast<size_t>(k)] +
                                   evidence[static_cast<size_t>(k)];
    beta0 += beta[static_cast<size_t>(k)];
    excess += evidence[static_cast<size_t>(k)];
  }
  const int y = target - 1;
  std::vector<double> dbeta(static_cast<size_t>(K), 0.0);

  if (spec.kind == LossKind::edl) {
    // data term psi(beta_0) - psi(beta_y) plus annealed KL to the prior.
    const double data = digamma(beta0) - digamma(beta[static_cast<size_t>(y)]);
    ConcentrationVector q{beta};
    ConcentrationVector prior{spec.alpha};
    const double reg = dirichlet_kl(q, prior);
    const double w = spec.anneal * spec.lambda;
    out.value = data + w * reg;
    const double tg0 = trigamma(beta0);
    for (int k = 0; k < K; ++k) {
      double g = tg0;
      if (k == y) g -= trigamma(beta[static_cast<size_t>(k)]);
      g += w * ((beta[static_cast<size_t>(k)] - spec.alpha[static_cast<size_t>(k)]) *
                    trigamma(beta[static_cast<size_t>(k)]) -
                tg0 * excess);
      dbeta[static_cast<size_t>(k)] = g;
    }
  } else {  // tempered_kl
    std::vector<double> b(spec.alpha);
    b[static_cast<size_t>(y)] += spec.nu;
    ConcentrationVector q{beta};
    ConcentrationVector target_post{b};
    out.value = dirichlet_kl(q, target_post);
    const double tg0 = trigamma(beta0);
    for (int k = 0; k < K; ++k) {
      dbeta[static_cast<size_t>(k)] =
          (beta[static_cast<size_t>(k)] - b[static_cast<size_t>(k)]) *
              trigamma(beta[static_cast<size_t>(k)]) -
          tg0 * (excess - spec.nu);
    }
  }
  for (int k = 0; k < K; ++k) {
    out.d_preact[static_cast<size_t>(k)] =
        dbeta[static_cast<size_t>(k)] * dev[static_cast<size_t>(k)];
  }
  return out;
}

}  // namespace detail

// Builds an MLP with fan-in scaled uniform weights, U(-1/sqrt(in), 1/sqrt(in)),
// and zero biases.
inline MLPParameters make_mlp(const std::vector<LayerSpec>& specs,
                              HeadKind head, RandomSeed seed,
                              EvidenceActivation activation =
                                  EvidenceActivation::softplus) {
  MLPParameters params;
  params.head_kind = head;
  params.evidence_activation = activation;
  Rng rng(seed);
  for (const LayerSpec& spec : specs) {
    Layer layer;
    layer.spec = spec;
    const size_t w = static_cast<size_t>(spec.input_dim) *
                     static_cast<size_t>(spec.output_dim);
    layer.weights.resize(w);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    for (double& v : layer.weights) v = (2.0 * rng.u01() - 1.0) * scale;
    layer.biases.assign(static_cast<size_t>(spec.output_dim), 0.0);
    params.layers.push_back(std::move(layer));
  }
  detail::validate_mlp(params);
  return params;
}

// Convenience: input -> hidden... -> K with rectifier hidden units and an
// identity final layer.
inline MLPParameters make_mlp(int input_dim, const std::vector<int>& hidden,
                              int num_classes, HeadKind head, RandomSeed seed,
                              EvidenceActivation activation =
                                  EvidenceActivation::softplus) {
  std::vector<LayerSpec> specs;
  int in = input_dim;
  for (int h : hidden) {
    specs.push_back(LayerSpec{in, h, Nonlinearity::rectifier});
    in = h;
  }
  specs.push_back(LayerSpec{in, num_classes, Nonlinearity::identity});
  return make_mlp(specs, head, seed, activation);
}

// Forward pass through the network and head. Evidence head outputs are
// non-negative; probability head outputs lie on the simplex.
inline std::vector<double> mlp_forward(const MLPParameters& params,
                                       const std::vector<double>& x) {
  detail::validate_mlp(params);
  std::vector<double> preact;
  detail::forward_core(params, x, nullptr, preact);
  return detail::apply_head(params, preact);
}

struct LossAndGradient {
  double mean_loss = 0.0;
  GradientBundle gradient;
};

// Exact gradient of the mean per-sample loss over the batch.
inline LossAndGradient mlp_loss_gradient(const MLPParameters& params,
                                         const Batch& batch,
                                         const LossSpec& spec) {
  detail::validate_mlp(params);
  if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size()) {
    throw std::invalid_argument("mlp_loss_gradient: empty or ragged batch");
  }
  const size_t L = params.layers.size();
  LossAndGradient result;
  result.gradient.layers.resize(L);
  for (size_t l = 0; l < L; ++l) {
    result.gradient.layers[l].weights.assign(params.layers[l].weights.size(), 0.0);
    result.gradient.layers[l].biases.assign(params.layers[l].biases.size(), 0.0);
  }

  detail::ForwardTrace trace;
  double total_loss = 0.0;
  for (size_t i = 0; i < batch.inputs.size(); ++i) {
    std::vector<double> preact;
    detail::forward_core(params, batch.inputs[i], &trace, preact);
    detail::SampleLoss sl =
        detail::sample_loss(params, preact, batch.targets[i], spec);
    total_loss += sl.value;

    // Backward pass; final layer nonlinearity applies before the head.
    std::vector<double> delta = std::move(sl.d_preact);
    for (size_t l = L; l-- > 0;) {
      const Layer& layer = params.layers[l];
      const int in = layer.spec.input_dim;
      const int nout = layer.spec.output_dim;
      if (layer.spec.nonlinearity == Nonlinearity::rectifier) {
        for (int r = 0; r < nout; ++r) {
          if (trace.pre[l][static_cast<size_t>(r)] <= 0.0) {
            delta[static_cast<size_t>(r)] = 0.0;
          }
        }
      }
      GradientLayer& grad = result.gradient.layers[l];
      const std::vector<double>& a_prev = trace.post[l];
      for (int r = 0; r < nout; ++r) {
        const double d = delta[static_cast<size_t>(r)];
        grad.biases[static_cast<size_t>(r)] += d;
        double* grow = grad.weights.data() + static_cast<size_t>(r) * in;
        for (int c = 0; c < in; ++c) grow[c] += d * a_prev[static_cast<size_t>(c)];
      }
      if (l > 0) {
        std::vector<double> prev(static_cast<size_t>(in), 0.0);
        for (int r = 0; r < nout; ++r) {
          const double d = delta[static_cast<size_t>(r)];
          const double* wrow =
              layer.weights.data() + static_cast<size_t>(r) * in;
          for (int c = 0; c < in; ++c) prev[static_cast<size_t>(c)] += d * wrow[c];
        }
        delta = std::move(prev);
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.inputs.size());
  result.mean_loss = total_loss * inv_n;
  for (GradientLayer& layer : result.gradient.layers) {
    for (double& v : layer.weights) v *= inv_n;
    for (double& v : layer.biases) v *= inv_n;
  }
  return result;
}

inline GradientBundle mlp_gradient(const MLPParameters& params,
                                   const Batch& batch, const LossSpec& spec) {
  return mlp_loss_gradient(params, batch, spec).gradient;
}

inline double mlp_mean_loss(const MLPParameters& params, const Batch& batch,
                            const LossSpec& spec) {
  detail::validate_mlp(params);
  if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size()) {
    throw std::invalid_argument("mlp_mean_loss: empty or ragged batch");
  }
  double total = 0.0;
  for (size_t i = 0; i < batch.inputs.size(); ++i) {
    std::vector<double> preact;
    detail::forward_core(params, batch.inputs[i], nullptr, preact);
    total += detail::sample_loss(params, preact, batch.targets[i], spec).value;
  }
  return total / static_cast<double>(batch.inputs.size());
}

struct AdamState {
  std::vector<GradientLayer> first_moment;
  std::vector<GradientLayer> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamState make_adam_state(const MLPParameters& params) {
  AdamState state;
  state.first_moment.resize(params.layers.size());
  state.second_moment.resize(params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    state.first_moment[l].weights.assign(params.layers[l].weights.size(), 0.0);
    state.first_moment[l].biases.assign(params.layers[l].biases.size(), 0.0);
    state.second_moment[l].weights.assign(params.layers[l].weights.size(), 0.0);
    state.second_moment[l].biases.assign(params.layers[l].biases.size(), 0.0);
  }
  return state;
}

// Adaptive-moment update with bias correction; deterministic given
// (params, grads, state, lr).
inline void optimizer_step(MLPParameters& params, const GradientBundle& grads,
                           AdamState& state, double lr) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.size() != params.layers.size()) {
    throw std::invalid_argument("optimizer_step: shape mismatch");
  }
  for (const GradientLayer& layer : grads.layers) {
    for (double g : layer.weights) {
      if (!std::isfinite(g)) throw std::invalid_argument("optimizer_step: non-finite gradient");
    }
    for (double g : layer.biases) {
      if (!std::isfinite(g)) throw std::invalid_argument("optimizer_step: non-finite gradient");
    }
  }
  state.step_count += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    if (g.size() != theta.size()) {
      throw std::invalid_argument("optimizer_step: shape mismatch");
    }
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };
  for (size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights,
           state.first_moment[l].weights, state.second_moment[l].weights);
    update(params.layers[l].biases, grads.layers[l].biases,
           state.first_moment[l].biases, state.second_moment[l].biases);
  }
}

// Central difference of a scalar function; exact for quadratics up to
// roundoff since the odd error terms cancel.
template <typename F>
inline double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Max over all parameters of the relative disagreement between the analytic
// gradient and a central finite difference of the mean batch loss.
inline double finite_difference_check(const MLPParameters& params,
                                      const Batch& batch, const LossSpec& spec,
                                      double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw std::invalid_argument("finite_difference_check: step outside [1e-7, 1e-3]");
  }
  const GradientBundle analytic = mlp_gradient(params, batch, spec);
  MLPParameters probe = params;
  double worst = 0.0;
  auto check_array = [&](std::vector<double>& theta, const std::vector<double>& g) {
    for (size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      const double up = mlp_mean_loss(probe, batch, spec);
      theta[i] = saved - step;
      const double down = mlp_mean_loss(probe, batch, spec);
      theta[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double rel = std::fabs(g[i] - fd) / (std::fabs(g[i]) + 1e-12);
      if (rel > worst) worst = rel;
    }
  };
  for (size_t l = 0; l < probe.layers.size(); ++l) {
    check_array(probe.layers[l].weights, analytic.layers[l].weights);
    check_array(probe.layers[l].biases, analytic.layers[l].biases);
  }
  return worst;
}

namespace detail {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline const char* nonlinearity_token(Nonlinearity n) {
  return n == Nonlinearity::rectifier ? "rectifier" : "identity";
}

inline Nonlinearity parse_nonlinearity(const std::string& token) {
  if (token == "rectifier") return Nonlinearity::rectifier;
  if (token == "identity") return Nonlinearity::identity;
  throw std::runtime_error("mlp checkpoint: unknown nonlinearity '" + token + "'");
}

inline std::string head_token(const MLPParameters& params) {
  if (params.head_kind == HeadKind::probability) return "probability";
  return params.evidence_activation == EvidenceActivation::softplus
             ? "evidence"
             : "evidence_exp";
}

}  // namespace detail

// Line-oriented text checkpoint:
//   mlp <n_layers> <head_kind>
//   layer <in> <out> <nonlinearity>
//   <out> lines of <in> weights (row-major), then one line of <out> biases
// Reals carry 17 significant digits so a round trip is bit-exact.
inline void save_mlp(const MLPParameters& params, const std::string& path) {
  detail::validate_mlp(params);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out << "mlp " << params.layers.size() << ' ' << detail::head_token(params) << '\n';
  for (const Layer& layer : params.layers) {
    out << "layer " << layer.spec.input_dim << ' ' << layer.spec.output_dim
        << ' ' << detail::nonlinearity_token(layer.spec.nonlinearity) << '\n';
    for (int r = 0; r < layer.spec.output_dim; ++r) {
      for (int c = 0; c < layer.spec.input_dim; ++c) {
        if (c) out << ' ';
        out << detail::format_g17(
            layer.weights[static_cast<size_t>(r) * layer.spec.input_dim + c]);
      }
      out << '\n';
    }
    for (int r = 0; r < layer.spec.output_dim; ++r) {
      if (r) out << ' ';
      out << detail::format_g17(layer.biases[static_cast<size_t>(r)]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_mlp: write failed on " + path);
}

inline MLPParameters load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  std::string magic;
  size_t n_layers = 0;
  std::string head;
  if (!(in >> magic >> n_layers >> head) || magic != "mlp") {
    throw std::runtime_error("load_mlp: bad header in " + path);
  }
  MLPParameters params;
  if (head == "probability") {
    params.head_kind = HeadKind::probability;
  } else if (head == "evidence") {
    params.head_kind = HeadKind::evidence;
    params.evidence_activation = EvidenceActivation::softplus;
  } else if (head == "evidence_exp") {
    params.head_kind = HeadKind::evidence;
    params.evidence_activation = EvidenceActivation::exponential;
  } else {
    throw std::runtime_error("load_mlp: unknown head kind '" + head + "'");
  }
  for (size_t l = 0; l < n_layers; ++l) {
    std::string token;
    Layer layer;
    std::string nonlinearity;
    if (!(in >> token >> layer.spec.input_dim >> layer.spec.output_dim >>
          nonlinearity) ||
        token != "layer") {
      throw std::runtime_error("load_mlp: bad layer header in " + path);
    }
    layer.spec.nonlinearity = detail::parse_nonlinearity(nonlinearity);
    const size_t w = static_cast<size_t>(layer.spec.input_dim) *
                     static_cast<size_t>(layer.spec.output_dim);
    layer.weights.resize(w);
    layer.biases.resize(static_cast<size_t>(layer.spec.output_dim));
    for (double& v : layer.weights) {
      if (!(in >> v)) throw std::runtime_error("load_mlp: truncated weights in " + path);
    }
    for (double& v : layer.biases) {
      if (!(in >> v)) throw std::runtime_error("load_mlp: truncated biases in " + path);
    }
    params.layers.push_back(std::move(layer));
  }
  detail::validate_mlp(params);
  return params;
}

}  // namespace dipedl
