#ifndef TIGRANET_LAYERS_HPP
#define TIGRANET_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "tigranet/graph.hpp"
#include "tigranet/spectral.hpp"

namespace tigranet {

// ---------------------------------------------------------------------------
// Active node sets
// ---------------------------------------------------------------------------

// The vertices retained by dynamic pooling: omega is the union of the
// per-map selections and drives the restriction of later filters. Sets are
// kept sorted; omega of one layer always contains omega of the next.
struct ActiveNodeSet {
  std::vector<int> omega;
  std::vector<std::vector<int>> per_filter;

  static ActiveNodeSet full(int num_vertices) {
    ActiveNodeSet s;
    s.omega.resize(static_cast<std::size_t>(num_vertices));
    std::iota(s.omega.begin(), s.omega.end(), 0);
    return s;
  }
};

// Zeroes every entry of y whose vertex is not in keep.
inline GraphSignal mask_signal(const GraphSignal& y,
                               const std::vector<int>& keep) {
  GraphSignal out(y.size(), 0.0);
  for (int v : keep) out[static_cast<std::size_t>(v)] = y[static_cast<std::size_t>(v)];
  return out;
}

// Column-restricted filter application [F|_keep]^T y. Because F is a
// polynomial in the symmetric L it is itself symmetric, so zeroing columns
// of F and transposing equals zeroing rows of F: the result is the plain
// filter output masked to keep.
inline GraphSignal restrict_columns(const NormalizedLaplacian& lap,
                                    const PolynomialFilter& f,
                                    const std::vector<int>& keep,
                                    const GraphSignal& y) {
  return mask_signal(filter_matvec(lap, f, y), keep);
}

// ---------------------------------------------------------------------------
// Spectral convolutional layer
// ---------------------------------------------------------------------------

// Trainable state of one spectral convolutional layer: per-filter polynomial
// coefficients (num_filters x (degree+1), row-major) and the mixing weights
// over the layer's input maps.
struct SpectralConvParams {
  int num_filters = 0;
  int degree = 0;
  std::vector<double> alpha;  // num_filters * (degree + 1)
  std::vector<double> beta;   // one weight per input map

  double& alpha_at(int filter, int m) {
    return alpha[static_cast<std::size_t>(filter) * (degree + 1) + m];
  }
  double alpha_at(int filter, int m) const {
    return alpha[static_cast<std::size_t>(filter) * (degree + 1) + m];
  }

  PolynomialFilter filter(int i) const {
    PolynomialFilter f;
    f.coefficients.assign(
        alpha.begin() + static_cast<std::ptrdiff_t>(i) * (degree + 1),
        alpha.begin() + static_cast<std::ptrdiff_t>(i + 1) * (degree + 1));
    return f;
  }
};

struct SpectralConvGrads {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<GraphSignal> inputs;
};

struct SpectralConvTape {
  bool valid = false;
  const NormalizedLaplacian* laplacian = nullptr;
  SpectralConvParams params;
  std::vector<GraphSignal> inputs;                 // y_k
  std::vector<std::vector<GraphSignal>> filtered;  // [filter][input], masked
  std::vector<std::vector<int>> keep_sets;         // restriction set per filter
};

namespace detail {

inline const std::vector<int>& restriction_for_filter(
    const ActiveNodeSet& active, const SpectralConvParams& params, int i) {
  // Per-map sets pair up with filters only when the counts agree; otherwise
  // every filter is restricted to the union omega.
  if (static_cast<int>(active.per_filter.size()) == params.num_filters) {
    return active.per_filter[static_cast<std::size_t>(i)];
  }
  return active.omega;
}

}  // namespace detail

// Feature maps z_i = sum_k beta_k [F_i|_keep_i]^T y_k for the layer's
// num_filters filters. active describes the previous layer's selections;
// pass ActiveNodeSet::full for the first layer.
inline std::vector<GraphSignal> spectral_conv_forward(
    const SpectralConvParams& params, const std::vector<GraphSignal>& inputs,
    const ActiveNodeSet& active, const NormalizedLaplacian& lap,
    SpectralConvTape& tape) {
  if (static_cast<int>(inputs.size()) != static_cast<int>(params.beta.size())) {
    throw std::invalid_argument(
        "spectral_conv_forward: input count does not match beta length");
  }
  if (params.num_filters < 1) {
    throw std::invalid_argument("spectral_conv_forward: no filters");
  }
  for (const GraphSignal& y : inputs) {
    if (static_cast<int>(y.size()) != lap.size()) {
      throw std::invalid_argument("spectral_conv_forward: signal length mismatch");
    }
  }

  tape = SpectralConvTape{};
  tape.laplacian = &lap;
  tape.params = params;
  tape.inputs = inputs;
  tape.filtered.resize(static_cast<std::size_t>(params.num_filters));
  tape.keep_sets.resize(static_cast<std::size_t>(params.num_filters));

  std::vector<GraphSignal> outputs;
  outputs.reserve(static_cast<std::size_t>(params.num_filters));
  for (int i = 0; i < params.num_filters; ++i) {
    const std::vector<int>& keep = detail::restriction_for_filter(active, params, i);
    tape.keep_sets[static_cast<std::size_t>(i)] = keep;
    const PolynomialFilter f = params.filter(i);
    GraphSignal z(static_cast<std::size_t>(lap.size()), 0.0);
    auto& filtered_row = tape.filtered[static_cast<std::size_t>(i)];
    filtered_row.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      GraphSignal yt = restrict_columns(lap, f, keep, inputs[k]);
      const double b = params.beta[k];
      for (std::size_t v = 0; v < z.size(); ++v) z[v] += b * yt[v];
      filtered_row.push_back(std::move(yt));
    }
    outputs.push_back(std::move(z));
  }
  tape.valid = true;
  return outputs;
}

// Gradients of the convolutional layer. With s = sum_k beta_k y_k:
//   dE/dalpha_{i,m} = < mask_i(L^m s), g_i >
//   dE/dbeta_k      = sum_i < ytilde_{i,k}, g_i >
//   dE/dy_k         = beta_k * sum_i F_i mask_i(g_i)
inline SpectralConvGrads spectral_conv_backward(
    const SpectralConvTape& tape, const std::vector<GraphSignal>& upstream) {
  if (!tape.valid) {
    throw std::logic_error("spectral_conv_backward: forward pass not recorded");
  }
  const SpectralConvParams& params = tape.params;
  const NormalizedLaplacian& lap = *tape.laplacian;
  const std::size_t n = static_cast<std::size_t>(lap.size());
  if (static_cast<int>(upstream.size()) != params.num_filters) {
    throw std::invalid_argument("spectral_conv_backward: upstream count mismatch");
  }

  SpectralConvGrads grads;
  grads.alpha.assign(params.alpha.size(), 0.0);
  grads.beta.assign(params.beta.size(), 0.0);
  grads.inputs.assign(tape.inputs.size(), GraphSignal(n, 0.0));

  // Powers L^m s for the alpha gradients.
  GraphSignal weighted_sum(n, 0.0);
  for (std::size_t k = 0; k < tape.inputs.size(); ++k) {
    const double b = params.beta[k];
    for (std::size_t v = 0; v < n; ++v) weighted_sum[v] += b * tape.inputs[k][v];
  }
  std::vector<GraphSignal> powers;
  powers.reserve(static_cast<std::size_t>(params.degree) + 1);
  powers.push_back(weighted_sum);
  for (int m = 1; m <= params.degree; ++m) {
    powers.push_back(lap.matrix.matvec(powers.back()));
  }

  GraphSignal filtered_upstream_sum(n, 0.0);
  for (int i = 0; i < params.num_filters; ++i) {
    const GraphSignal& g = upstream[static_cast<std::size_t>(i)];
    const std::vector<int>& keep = tape.keep_sets[static_cast<std::size_t>(i)];
    for (int m = 0; m <= params.degree; ++m) {
      double acc = 0.0;
      const GraphSignal& p = powers[static_cast<std::size_t>(m)];
      for (int v : keep) {
        acc += p[static_cast<std::size_t>(v)] * g[static_cast<std::size_t>(v)];
      }
      grads.alpha[static_cast<std::size_t>(i) * (params.degree + 1) + m] = acc;
    }
    for (std::size_t k = 0; k < tape.inputs.size(); ++k) {
      const GraphSignal& yt = tape.filtered[static_cast<std::size_t>(i)][k];
      double acc = 0.0;
      for (std::size_t v = 0; v < n; ++v) acc += yt[v] * g[v];
      grads.beta[k] += acc;
    }
    GraphSignal h = filter_matvec(lap, params.filter(i), mask_signal(g, keep));
    for (std::size_t v = 0; v < n; ++v) filtered_upstream_sum[v] += h[v];
  }
  for (std::size_t k = 0; k < tape.inputs.size(); ++k) {
    const double b = params.beta[k];
    for (std::size_t v = 0; v < n; ++v) {
      grads.inputs[k][v] = b * filtered_upstream_sum[v];
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Dynamic pooling layer
// ---------------------------------------------------------------------------

struct PoolTape {
  bool valid = false;
  std::vector<std::vector<int>> selected;  // per map, sorted
  std::size_t signal_length = 0;
};

// For each map, keeps the min(j_limit, |omega_prev|) largest values within
// omega_prev (ties broken toward the smaller vertex index) and zeroes the
// rest. The union of the per-map selections becomes the new omega.
inline std::pair<std::vector<GraphSignal>, ActiveNodeSet> dynamic_pool(
    const std::vector<GraphSignal>& feature_maps,
    const ActiveNodeSet& prev_active, int j_limit, PoolTape& tape) {
  if (j_limit < 1) {
    throw std::invalid_argument("dynamic_pool: j_limit must be >= 1");
  }
  if (prev_active.omega.empty()) {
    throw std::logic_error("dynamic_pool: previous active set is empty");
  }
  if (feature_maps.empty()) {
    throw std::invalid_argument("dynamic_pool: no feature maps");
  }
  for (const GraphSignal& z : feature_maps) {
    if (z.size() != feature_maps.front().size()) {
      throw std::invalid_argument("dynamic_pool: map length mismatch");
    }
  }
  if (prev_active.omega.back() >=
      static_cast<int>(feature_maps.front().size())) {
    throw std::invalid_argument("dynamic_pool: active vertex out of range");
  }

  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(j_limit),
                            prev_active.omega.size());
  tape = PoolTape{};
  tape.signal_length = feature_maps.front().size();

  std::vector<GraphSignal> pooled;
  pooled.reserve(feature_maps.size());
  ActiveNodeSet next;
  std::vector<char> in_union(tape.signal_length, 0);

  std::vector<int> order(prev_active.omega.size());
  for (const GraphSignal& z : feature_maps) {
    order.assign(prev_active.omega.begin(), prev_active.omega.end());
    std::stable_sort(order.begin(), order.end(), [&z](int a, int b) {
      return z[static_cast<std::size_t>(a)] > z[static_cast<std::size_t>(b)];
    });
    std::vector<int> selected(order.begin(),
                              order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(selected.begin(), selected.end());

    GraphSignal kept(z.size(), 0.0);
    for (int v : selected) {
      kept[static_cast<std::size_t>(v)] = z[static_cast<std::size_t>(v)];
      in_union[static_cast<std::size_t>(v)] = 1;
    }
    pooled.push_back(std::move(kept));
    tape.selected.push_back(selected);
    next.per_filter.push_back(std::move(selected));
  }
  for (std::size_t v = 0; v < in_union.size(); ++v) {
    if (in_union[v]) next.omega.push_back(static_cast<int>(v));
  }
  tape.valid = true;
  return {std::move(pooled), std::move(next)};
}

// Gradients pass through the selected vertices unchanged and are zero
// everywhere else.
inline std::vector<GraphSignal> dynamic_pool_backward(
    const PoolTape& tape, const std::vector<GraphSignal>& upstream) {
  if (!tape.valid) {
    throw std::logic_error("dynamic_pool_backward: forward pass not recorded");
  }
  if (upstream.size() != tape.selected.size()) {
    throw std::invalid_argument("dynamic_pool_backward: map count mismatch");
  }
  std::vector<GraphSignal> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    GraphSignal g(tape.signal_length, 0.0);
    for (int v : tape.selected[i]) {
      g[static_cast<std::size_t>(v)] = upstream[i][static_cast<std::size_t>(v)];
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Statistical layer
// ---------------------------------------------------------------------------

// Per-map multiscale statistics: phi = [mu_0, var_0, ..., mu_K, var_K] where
// mu_k / var_k are the mean and population variance of |t_k| over all N
// vertices and t_k is the order-k Chebyshev signal of the map.
struct StatFeature {
  std::vector<double> phi;
};

struct StatTape {
  bool valid = false;
  const NormalizedLaplacian* laplacian = nullptr;
  int k_max = 0;
  std::vector<std::vector<GraphSignal>> cheby;  // [map][k]
  std::vector<std::vector<double>> means;       // [map][k]
  std::vector<std::vector<double>> variances;   // [map][k]
};

inline std::vector<StatFeature> statistical_forward(
    const std::vector<GraphSignal>& maps, const NormalizedLaplacian& lap,
    int k_max, StatTape& tape) {
  if (k_max < 0) {
    throw std::invalid_argument("statistical_forward: k_max must be >= 0");
  }
  tape = StatTape{};
  tape.laplacian = &lap;
  tape.k_max = k_max;

  const double n = static_cast<double>(lap.size());
  std::vector<StatFeature> features;
  features.reserve(maps.size());
  for (const GraphSignal& z : maps) {
    std::vector<GraphSignal> t = chebyshev_sequence(lap, z, k_max);
    StatFeature feat;
    feat.phi.reserve(2 * static_cast<std::size_t>(k_max) + 2);
    std::vector<double> means;
    std::vector<double> variances;
    for (const GraphSignal& tk : t) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (double x : tk) {
        const double a = std::abs(x);
        sum += a;
        sum_sq += a * a;
      }
      const double mean = sum / n;
      const double variance = sum_sq / n - mean * mean;
      feat.phi.push_back(mean);
      feat.phi.push_back(variance);
      means.push_back(mean);
      variances.push_back(variance);
    }
    tape.cheby.push_back(std::move(t));
    tape.means.push_back(std::move(means));
    tape.variances.push_back(std::move(variances));
    features.push_back(std::move(feat));
  }
  tape.valid = true;
  return features;
}

// Chains dE/dphi back to the input maps. The magnitude uses subgradient 0 at
// exactly 0, so vertices a map left at zero stay silent; the linear Chebyshev
// recursion is reversed by its own adjoint recursion.
inline std::vector<GraphSignal> statistical_backward(
    const StatTape& tape, const std::vector<std::vector<double>>& upstream) {
  if (!tape.valid) {
    throw std::logic_error("statistical_backward: forward pass not recorded");
  }
  if (upstream.size() != tape.cheby.size()) {
    throw std::invalid_argument("statistical_backward: map count mismatch");
  }
  const NormalizedLaplacian& lap = *tape.laplacian;
  const std::size_t n = static_cast<std::size_t>(lap.size());
  const double n_real = static_cast<double>(n);

  auto shifted_apply = [&lap](const GraphSignal& x) {
    GraphSignal out = lap.matrix.matvec(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= x[i];
    return out;
  };

  std::vector<GraphSignal> grads;
  grads.reserve(tape.cheby.size());
  for (std::size_t map = 0; map < tape.cheby.size(); ++map) {
    const std::vector<GraphSignal>& t = tape.cheby[map];
    const std::vector<double>& dphi = upstream[map];
    if (dphi.size() != 2 * t.size()) {
      throw std::invalid_argument("statistical_backward: phi length mismatch");
    }

    // Direct contributions dE/dt_k through |.|, mean and variance.
    std::vector<GraphSignal> adj(t.size(), GraphSignal(n, 0.0));
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double d_mean = dphi[2 * k];
      const double d_var = dphi[2 * k + 1];
      const double mean = tape.means[map][k];
      for (std::size_t v = 0; v < n; ++v) {
        const double x = t[k][v];
        if (x == 0.0) continue;
        const double sign = x > 0.0 ? 1.0 : -1.0;
        const double a = std::abs(x);
        adj[k][v] = sign * (d_mean / n_real +
                            d_var * 2.0 * (a - mean) / n_real);
      }
    }
    // Adjoint of t_k = 2 Lt t_{k-1} - t_{k-2}.
    for (std::size_t k = t.size(); k-- > 2;) {
      GraphSignal prop = shifted_apply(adj[k]);
      for (std::size_t v = 0; v < n; ++v) {
        adj[k - 1][v] += 2.0 * prop[v];
        adj[k - 2][v] -= adj[k][v];
      }
    }
    GraphSignal dz = adj[0];
    if (t.size() > 1) {
      GraphSignal prop = shifted_apply(adj[1]);
      for (std::size_t v = 0; v < n; ++v) dz[v] += prop[v];
    }
    grads.push_back(std::move(dz));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Fully-connected head
// ---------------------------------------------------------------------------

struct FcParams {
  int out_dim = 0;
  int in_dim = 0;
  std::vector<double> weight;  // out_dim x in_dim, row-major
  std::vector<double> bias;    // out_dim
};

struct FcGrads {
  std::vector<double> weight;
  std::vector<double> bias;
};

struct FcStackTape {
  bool valid = false;
  std::vector<std::vector<double>> layer_inputs;   // input to each affine
  std::vector<std::vector<double>> preactivations; // affine outputs
  std::vector<double> probabilities;
};

namespace detail {

inline std::vector<double> affine(const FcParams& p,
                                  const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.in_dim) {
    throw std::invalid_argument("fc layer: input dimension mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(p.out_dim));
  for (int r = 0; r < p.out_dim; ++r) {
    double acc = p.bias[static_cast<std::size_t>(r)];
    const double* w = p.weight.data() + static_cast<std::size_t>(r) * p.in_dim;
    for (int c = 0; c < p.in_dim; ++c) acc += w[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> probs(logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace detail

// Affine stack with ReLU between layers, softmax after the last. The input
// is the concatenation of the per-map phi vectors.
inline std::vector<double> fc_softmax_forward(
    const std::vector<FcParams>& layers, const std::vector<double>& input,
    FcStackTape& tape) {
  if (layers.empty()) {
    throw std::invalid_argument("fc_softmax_forward: no layers");
  }
  tape = FcStackTape{};
  std::vector<double> x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tape.layer_inputs.push_back(x);
    std::vector<double> pre = detail::affine(layers[l], x);
    tape.preactivations.push_back(pre);
    if (l + 1 < layers.size()) {
      for (double& v : pre) v = std::max(v, 0.0);
    }
    x = std::move(pre);
  }
  tape.probabilities = detail::softmax(x);
  tape.valid = true;
  return tape.probabilities;
}

// Backward through the affine stack given dE/dlogits (the nll_loss gradient).
// Returns per-layer weight/bias gradients and the gradient at the stack input.
inline std::pair<std::vector<FcGrads>, std::vector<double>> fc_softmax_backward(
    const FcStackTape& tape, const std::vector<FcParams>& layers,
    const std::vector<double>& d_logits) {
  if (!tape.valid) {
    throw std::logic_error("fc_softmax_backward: forward pass not recorded");
  }
  std::vector<FcGrads> grads(layers.size());
  std::vector<double> delta = d_logits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const FcParams& p = layers[l];
    if (l + 1 < layers.size()) {
      // ReLU subgradient on this layer's preactivation (0 at 0).
      const std::vector<double>& pre = tape.preactivations[l];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (pre[i] <= 0.0) delta[i] = 0.0;
      }
    }
    const std::vector<double>& x = tape.layer_inputs[l];
    grads[l].weight.assign(p.weight.size(), 0.0);
    grads[l].bias = delta;
    std::vector<double> next(static_cast<std::size_t>(p.in_dim), 0.0);
    for (int r = 0; r < p.out_dim; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      const double* w = p.weight.data() + static_cast<std::size_t>(r) * p.in_dim;
      double* gw = grads[l].weight.data() + static_cast<std::size_t>(r) * p.in_dim;
      for (int c = 0; c < p.in_dim; ++c) {
        gw[c] = d * x[static_cast<std::size_t>(c)];
        next[static_cast<std::size_t>(c)] += d * w[c];
      }
    }
    delta = std::move(next);
  }
  return {std::move(grads), std::move(delta)};
}

// Negative log-likelihood of the labeled class, with the probability clamped
// at 1e-12 before the log. The returned gradient is with respect to the
// logits feeding the softmax: p - onehot(label).
inline std::pair<double, std::vector<double>> nll_loss(
    const std::vector<double>& probs, int label) {
  if (label < 0 || label >= static_cast<int>(probs.size())) {
    throw std::invalid_argument("nll_loss: label out of range");
  }
  const double p = std::max(probs[static_cast<std::size_t>(label)], 1e-12);
  std::vector<double> grad = probs;
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return {-std::log(p), std::move(grad)};
}

}  // namespace tigranet

#endif  // TIGRANET_LAYERS_HPP
