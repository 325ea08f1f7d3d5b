#ifndef TIGRANET_NETWORK_HPP
#define TIGRANET_NETWORK_HPP

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tigranet/graph.hpp"
#include "tigranet/layers.hpp"
#include "tigranet/rng.hpp"
#include "tigranet/spectral.hpp"

namespace tigranet {

// ---------------------------------------------------------------------------
// Architecture strings
// ---------------------------------------------------------------------------
//
// A network is described by dash-separated tokens, e.g.
//   SC[3,3]-DP[300]-SC[6,3]-DP[100]-S[10]-FC[50]-FC[30]-FC[10]
// SC[K,M]: spectral convolution with K polynomial filters of degree M.
// DP[J]:   dynamic pooling keeping the J largest values per map.
// S[Kmax]: statistical layer with Chebyshev orders 0..Kmax.
// FC[U]:   fully-connected layer with U units.
// Exactly one S; SC/DP come before it (DP always directly after an SC);
// FC layers follow it; the last FC width must equal the class count.

enum class LayerKind { spectral_conv, dynamic_pool, statistical, fully_connected };

struct LayerDesc {
  LayerKind kind = LayerKind::spectral_conv;
  int arg0 = 0;  // SC: filters, DP: j_limit, S: k_max, FC: units
  int arg1 = 0;  // SC: degree
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " (at position " +
                           std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

struct NetworkSpec {
  std::vector<LayerDesc> layers;
  int height = 0;
  int width = 0;
  int num_classes = 0;

  int num_vertices() const { return height * width; }

  int stat_k_max() const {
    for (const LayerDesc& l : layers) {
      if (l.kind == LayerKind::statistical) return l.arg0;
    }
    throw std::logic_error("NetworkSpec: no statistical layer");
  }

  // Number of maps feeding the statistical layer: the last SC's filter
  // count, or 1 when the input image reaches S directly.
  int stat_input_maps() const {
    int maps = 1;
    for (const LayerDesc& l : layers) {
      if (l.kind == LayerKind::statistical) break;
      if (l.kind == LayerKind::spectral_conv) maps = l.arg0;
    }
    return maps;
  }

  int fc_input_dim() const {
    return stat_input_maps() * (2 * stat_k_max() + 2);
  }
};

namespace detail {

struct Token {
  std::string name;
  std::vector<int> args;
  std::size_t position = 0;
};

inline std::vector<Token> tokenize_architecture(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    Token tok;
    tok.position = i;
    while (i < n && std::isalpha(static_cast<unsigned char>(text[i]))) {
      tok.name.push_back(text[i++]);
    }
    if (tok.name.empty()) {
      throw ParseError("expected layer name", i);
    }
    if (i >= n || text[i] != '[') {
      throw ParseError("expected '[' after layer name '" + tok.name + "'", i);
    }
    ++i;
    for (;;) {
      while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      const std::size_t arg_pos = i;
      bool negative = false;
      if (i < n && text[i] == '-') {
        negative = true;
        ++i;
      }
      std::size_t digits = 0;
      long value = 0;
      while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        if (value > 1000000000L) throw ParseError("integer too large", arg_pos);
        ++digits;
        ++i;
      }
      if (digits == 0) throw ParseError("expected integer", arg_pos);
      tok.args.push_back(static_cast<int>(negative ? -value : value));
      while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i < n && text[i] == ',') {
        ++i;
        continue;
      }
      break;
    }
    if (i >= n || text[i] != ']') {
      throw ParseError("expected ']' or ','", i);
    }
    ++i;
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    tokens.push_back(std::move(tok));
    if (i < n) {
      if (text[i] != '-') {
        throw ParseError("expected '-' between layers", i);
      }
      ++i;
      if (i >= n) throw ParseError("trailing '-'", i);
    }
  }
  if (tokens.empty()) throw ParseError("empty architecture string", 0);
  return tokens;
}

}  // namespace detail

inline NetworkSpec parse_architecture(const std::string& text, int height,
                                      int width, int num_classes) {
  if (height < 1 || width < 1 || height * width < 2) {
    throw std::invalid_argument("parse_architecture: invalid input size");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("parse_architecture: need >= 2 classes");
  }

  NetworkSpec spec;
  spec.height = height;
  spec.width = width;
  spec.num_classes = num_classes;

  bool seen_stat = false;
  bool seen_fc = false;
  LayerKind prev = LayerKind::statistical;  // sentinel; never read before set
  bool have_prev = false;
  for (const detail::Token& tok : detail::tokenize_architecture(text)) {
    auto expect_args = [&tok](std::size_t count) {
      if (tok.args.size() != count) {
        throw ParseError("layer '" + tok.name + "' expects " +
                             std::to_string(count) + " argument(s)",
                         tok.position);
      }
    };
    LayerDesc desc;
    if (tok.name == "SC") {
      expect_args(2);
      if (seen_stat) throw ParseError("SC cannot appear after S", tok.position);
      if (tok.args[0] < 1) throw ParseError("SC filter count must be >= 1", tok.position);
      if (tok.args[1] < 1) throw ParseError("SC degree must be >= 1", tok.position);
      desc = {LayerKind::spectral_conv, tok.args[0], tok.args[1]};
    } else if (tok.name == "DP") {
      expect_args(1);
      if (seen_stat) throw ParseError("DP cannot appear after S", tok.position);
      if (!have_prev || prev != LayerKind::spectral_conv) {
        throw ParseError("DP must directly follow an SC layer", tok.position);
      }
      if (tok.args[0] < 1) throw ParseError("DP size must be >= 1", tok.position);
      desc = {LayerKind::dynamic_pool, tok.args[0], 0};
    } else if (tok.name == "S") {
      expect_args(1);
      if (seen_stat) throw ParseError("duplicate S layer", tok.position);
      if (tok.args[0] < 0) throw ParseError("S order must be >= 0", tok.position);
      seen_stat = true;
      desc = {LayerKind::statistical, tok.args[0], 0};
    } else if (tok.name == "FC") {
      expect_args(1);
      if (!seen_stat) throw ParseError("FC must appear after S", tok.position);
      if (tok.args[0] < 1) throw ParseError("FC width must be >= 1", tok.position);
      seen_fc = true;
      desc = {LayerKind::fully_connected, tok.args[0], 0};
    } else {
      throw ParseError("unknown layer '" + tok.name + "'", tok.position);
    }
    spec.layers.push_back(desc);
    prev = desc.kind;
    have_prev = true;
  }
  if (!seen_stat) throw ParseError("missing S layer", text.size());
  if (!seen_fc) throw ParseError("missing FC layer after S", text.size());
  if (spec.layers.back().kind != LayerKind::fully_connected ||
      spec.layers.back().arg0 != num_classes) {
    throw ParseError("final FC width must equal the class count (" +
                         std::to_string(num_classes) + ")",
                     text.size());
  }
  return spec;
}

// Infers the class count from the trailing FC layer, for callers that only
// have the architecture text.
inline NetworkSpec parse_architecture(const std::string& text, int height,
                                      int width) {
  const auto tokens = detail::tokenize_architecture(text);
  int classes = -1;
  std::size_t position = 0;
  for (const detail::Token& tok : tokens) {
    if (tok.name == "FC" && tok.args.size() == 1) {
      classes = tok.args[0];
      position = tok.position;
    }
  }
  if (classes < 2) {
    throw ParseError("cannot infer class count: need a final FC layer with"
                     " width >= 2",
                     position);
  }
  return parse_architecture(text, height, width, classes);
}

// Canonical textual form; parse_architecture(to_string(spec), ...) rebuilds
// an identical spec.
inline std::string to_string(const NetworkSpec& spec) {
  std::string out;
  for (const LayerDesc& l : spec.layers) {
    if (!out.empty()) out.push_back('-');
    switch (l.kind) {
      case LayerKind::spectral_conv:
        out += "SC[" + std::to_string(l.arg0) + "," + std::to_string(l.arg1) + "]";
        break;
      case LayerKind::dynamic_pool:
        out += "DP[" + std::to_string(l.arg0) + "]";
        break;
      case LayerKind::statistical:
        out += "S[" + std::to_string(l.arg0) + "]";
        break;
      case LayerKind::fully_connected:
        out += "FC[" + std::to_string(l.arg0) + "]";
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct NetworkParams {
  std::vector<SpectralConvParams> conv;
  std::vector<FcParams> fc;
};

// Gradient containers share the parameter layout.
using NetworkGrads = NetworkParams;

// Visits every trainable tensor exactly once, in a fixed documented order:
// conv1.alpha, conv1.beta, conv2.alpha, ..., fc1.weight, fc1.bias, ...
template <typename Params, typename Fn>
void for_each_tensor(Params&& params, Fn&& fn) {
  for (std::size_t i = 0; i < params.conv.size(); ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    fn(base + ".alpha", params.conv[i].alpha);
    fn(base + ".beta", params.conv[i].beta);
  }
  for (std::size_t j = 0; j < params.fc.size(); ++j) {
    const std::string base = "fc" + std::to_string(j + 1);
    fn(base + ".weight", params.fc[j].weight);
    fn(base + ".bias", params.fc[j].bias);
  }
}

// Initializes all trainable tensors from the given seed: filter coefficients
// come from the spectral window bank, beta from U[0,1], fully-connected
// weights and biases from U[-1,1]. Draw order is fixed (layer order; beta
// entries in index order; FC weight row-major then bias).
inline NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  NetworkParams params;
  int input_maps = 1;
  int fc_in = spec.fc_input_dim();
  for (const LayerDesc& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::spectral_conv: {
        SpectralConvParams p;
        p.num_filters = layer.arg0;
        p.degree = layer.arg1;
        p.alpha.reserve(static_cast<std::size_t>(p.num_filters) * (p.degree + 1));
        for (const PolynomialFilter& f : init_filter_bank(p.num_filters, p.degree)) {
          p.alpha.insert(p.alpha.end(), f.coefficients.begin(),
                         f.coefficients.end());
        }
        p.beta.resize(static_cast<std::size_t>(input_maps));
        for (double& b : p.beta) b = rng.uniform01();
        input_maps = p.num_filters;
        params.conv.push_back(std::move(p));
        break;
      }
      case LayerKind::fully_connected: {
        FcParams p;
        p.out_dim = layer.arg0;
        p.in_dim = fc_in;
        p.weight.resize(static_cast<std::size_t>(p.out_dim) * p.in_dim);
        for (double& w : p.weight) w = rng.uniform(-1.0, 1.0);
        p.bias.resize(static_cast<std::size_t>(p.out_dim));
        for (double& b : p.bias) b = rng.uniform(-1.0, 1.0);
        fc_in = p.out_dim;
        params.fc.push_back(std::move(p));
        break;
      }
      case LayerKind::dynamic_pool:
      case LayerKind::statistical:
        break;  // no trainable state
    }
  }
  return params;
}

inline NetworkGrads zeros_like(const NetworkParams& params) {
  NetworkGrads grads = params;
  for_each_tensor(grads, [](const std::string&, std::vector<double>& t) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return grads;
}

// ---------------------------------------------------------------------------
// Whole-network forward / backward
// ---------------------------------------------------------------------------

struct NetworkTape {
  bool valid = false;
  std::vector<SpectralConvTape> conv;
  std::vector<PoolTape> pool;
  StatTape stat;
  FcStackTape fc;
  std::vector<double> probabilities;
};

// Per-layer feature maps captured during a forward pass (inspection only).
struct LayerSnapshot {
  std::string label;  // e.g. "l2_pool"
  std::vector<GraphSignal> maps;
};

inline std::vector<double> forward(const NetworkSpec& spec,
                                   const NetworkParams& params,
                                   const NormalizedLaplacian& lap,
                                   const GraphSignal& input, NetworkTape& tape,
                                   std::vector<LayerSnapshot>* snapshots = nullptr) {
  if (static_cast<int>(input.size()) != spec.num_vertices() ||
      lap.size() != spec.num_vertices()) {
    throw std::invalid_argument("forward: input length mismatch");
  }
  tape = NetworkTape{};

  std::vector<GraphSignal> maps = {input};
  ActiveNodeSet active = ActiveNodeSet::full(spec.num_vertices());
  std::size_t conv_idx = 0;
  int layer_number = 0;
  std::vector<double> fc_input;
  for (const LayerDesc& layer : spec.layers) {
    ++layer_number;
    switch (layer.kind) {
      case LayerKind::spectral_conv: {
        if (conv_idx >= params.conv.size()) {
          throw std::invalid_argument("forward: parameter/spec mismatch");
        }
        tape.conv.emplace_back();
        maps = spectral_conv_forward(params.conv[conv_idx], maps, active, lap,
                                     tape.conv.back());
        ++conv_idx;
        if (snapshots) {
          snapshots->push_back(
              {"l" + std::to_string(layer_number) + "_conv", maps});
        }
        break;
      }
      case LayerKind::dynamic_pool: {
        tape.pool.emplace_back();
        auto [pooled, next] = dynamic_pool(maps, active, layer.arg0,
                                           tape.pool.back());
        maps = std::move(pooled);
        active = std::move(next);
        if (snapshots) {
          snapshots->push_back(
              {"l" + std::to_string(layer_number) + "_pool", maps});
        }
        break;
      }
      case LayerKind::statistical: {
        std::vector<StatFeature> features =
            statistical_forward(maps, lap, layer.arg0, tape.stat);
        for (const StatFeature& f : features) {
          fc_input.insert(fc_input.end(), f.phi.begin(), f.phi.end());
        }
        break;
      }
      case LayerKind::fully_connected:
        break;  // the whole FC stack runs below
    }
  }
  if (params.fc.empty() ||
      static_cast<int>(fc_input.size()) != params.fc.front().in_dim) {
    throw std::invalid_argument("forward: parameter/spec mismatch at FC input");
  }
  tape.probabilities = fc_softmax_forward(params.fc, fc_input, tape.fc);
  tape.valid = true;
  return tape.probabilities;
}

// Backpropagates the negative log-likelihood of the label through the whole
// stack. Returns the loss along with gradients for every trainable tensor.
inline std::pair<double, NetworkGrads> backward(const NetworkSpec& spec,
                                                const NetworkParams& params,
                                                const NetworkTape& tape,
                                                int label) {
  if (!tape.valid) {
    throw std::logic_error("backward: forward pass not recorded");
  }
  auto [loss, d_logits] = nll_loss(tape.probabilities, label);
  auto [fc_grads, d_fc_input] =
      fc_softmax_backward(tape.fc, params.fc, d_logits);

  NetworkGrads grads = zeros_like(params);
  for (std::size_t j = 0; j < fc_grads.size(); ++j) {
    grads.fc[j].weight = std::move(fc_grads[j].weight);
    grads.fc[j].bias = std::move(fc_grads[j].bias);
  }

  // Split the concatenated phi gradient per map and push through the
  // statistical layer.
  const int phi_len = 2 * spec.stat_k_max() + 2;
  const int stat_maps = spec.stat_input_maps();
  std::vector<std::vector<double>> d_phi(static_cast<std::size_t>(stat_maps));
  for (int i = 0; i < stat_maps; ++i) {
    d_phi[static_cast<std::size_t>(i)].assign(
        d_fc_input.begin() + static_cast<std::ptrdiff_t>(i) * phi_len,
        d_fc_input.begin() + static_cast<std::ptrdiff_t>(i + 1) * phi_len);
  }
  std::vector<GraphSignal> d_maps = statistical_backward(tape.stat, d_phi);

  // Reverse through the pooling/convolution prefix.
  std::size_t conv_idx = tape.conv.size();
  std::size_t pool_idx = tape.pool.size();
  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const LayerDesc& layer = spec.layers[li];
    if (layer.kind == LayerKind::dynamic_pool) {
      d_maps = dynamic_pool_backward(tape.pool[--pool_idx], d_maps);
    } else if (layer.kind == LayerKind::spectral_conv) {
      SpectralConvGrads cg =
          spectral_conv_backward(tape.conv[--conv_idx], d_maps);
      grads.conv[conv_idx].alpha = std::move(cg.alpha);
      grads.conv[conv_idx].beta = std::move(cg.beta);
      d_maps = std::move(cg.inputs);
    }
  }
  return {loss, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Binary, little-endian. Layout:
//   magic "TIGR" | u32 version | u32 arch_len + arch bytes
//   u32 height | u32 width | u32 num_classes | u64 seed
//   u32 epoch | f64 train_loss | f64 train_acc | f64 val_acc
//   u32 conv_count { u32 filters | u32 coeffs_per_filter | u32 beta_len
//                    | f64 alpha[] | f64 beta[] }
//   u32 fc_count   { u32 out | u32 in | f64 weight[] | f64 bias[] }
//   u8 has_optimizer [ u64 step | f64 lr,beta1,beta2,eps
//                      | u64 tensor_count { u64 len | f64 m[] | f64 v[] } ]

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, corrupt };

  CheckpointError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct OptimizerState {
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moments;
  std::vector<std::vector<double>> second_moments;
};

struct Checkpoint {
  std::string arch;
  NetworkSpec spec;
  NetworkParams params;
  std::optional<OptimizerState> optimizer;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

namespace detail {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'T', 'I', 'G', 'R'};

inline void put_bytes(std::ostream& out, const void* data, std::size_t len) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 8);
}

inline void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void get_bytes(std::istream& in, void* data, std::size_t len) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "checkpoint truncated");
  }
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  get_bytes(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

inline void put_f64_vector(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) put_f64(out, x);
}

inline void get_f64_vector(std::istream& in, std::vector<double>& v) {
  for (double& x : v) x = get_f64(in);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot open checkpoint for writing: " + path);
  }
  detail::put_bytes(out, detail::kCheckpointMagic, 4);
  detail::put_u32(out, detail::kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(c.arch.size()));
  detail::put_bytes(out, c.arch.data(), c.arch.size());
  detail::put_u32(out, static_cast<std::uint32_t>(c.spec.height));
  detail::put_u32(out, static_cast<std::uint32_t>(c.spec.width));
  detail::put_u32(out, static_cast<std::uint32_t>(c.spec.num_classes));
  detail::put_u64(out, c.seed);
  detail::put_u32(out, c.epoch);
  detail::put_f64(out, c.train_loss);
  detail::put_f64(out, c.train_acc);
  detail::put_f64(out, c.val_acc);

  detail::put_u32(out, static_cast<std::uint32_t>(c.params.conv.size()));
  for (const SpectralConvParams& p : c.params.conv) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.num_filters));
    detail::put_u32(out, static_cast<std::uint32_t>(p.degree + 1));
    detail::put_u32(out, static_cast<std::uint32_t>(p.beta.size()));
    detail::put_f64_vector(out, p.alpha);
    detail::put_f64_vector(out, p.beta);
  }
  detail::put_u32(out, static_cast<std::uint32_t>(c.params.fc.size()));
  for (const FcParams& p : c.params.fc) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.out_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(p.in_dim));
    detail::put_f64_vector(out, p.weight);
    detail::put_f64_vector(out, p.bias);
  }

  const unsigned char has_opt = c.optimizer.has_value() ? 1 : 0;
  detail::put_bytes(out, &has_opt, 1);
  if (c.optimizer) {
    const OptimizerState& s = *c.optimizer;
    detail::put_u64(out, s.step);
    detail::put_f64(out, s.learning_rate);
    detail::put_f64(out, s.beta1);
    detail::put_f64(out, s.beta2);
    detail::put_f64(out, s.epsilon);
    detail::put_u64(out, s.first_moments.size());
    for (std::size_t i = 0; i < s.first_moments.size(); ++i) {
      detail::put_u64(out, s.first_moments[i].size());
      detail::put_f64_vector(out, s.first_moments[i]);
      detail::put_f64_vector(out, s.second_moments[i]);
    }
  }
  out.flush();
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "write failed for checkpoint: " + path);
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot open checkpoint: " + path);
  }
  char magic[4];
  detail::get_bytes(in, magic, 4);
  if (std::memcmp(magic, detail::kCheckpointMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::bad_magic,
                          "not a checkpoint file: " + path);
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != detail::kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::version_mismatch,
                          "unsupported checkpoint version " +
                              std::to_string(version));
  }

  Checkpoint c;
  const std::uint32_t arch_len = detail::get_u32(in);
  if (arch_len > (1u << 20)) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "implausible architecture length");
  }
  c.arch.resize(arch_len);
  detail::get_bytes(in, c.arch.data(), arch_len);
  const int height = static_cast<int>(detail::get_u32(in));
  const int width = static_cast<int>(detail::get_u32(in));
  const int classes = static_cast<int>(detail::get_u32(in));
  c.seed = detail::get_u64(in);
  c.epoch = detail::get_u32(in);
  c.train_loss = detail::get_f64(in);
  c.train_acc = detail::get_f64(in);
  c.val_acc = detail::get_f64(in);
  try {
    c.spec = parse_architecture(c.arch, height, width, classes);
  } catch (const std::exception& e) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          std::string("invalid architecture in checkpoint: ") +
                              e.what());
  }

  const std::uint32_t conv_count = detail::get_u32(in);
  for (std::uint32_t i = 0; i < conv_count; ++i) {
    SpectralConvParams p;
    p.num_filters = static_cast<int>(detail::get_u32(in));
    const std::uint32_t coeffs = detail::get_u32(in);
    const std::uint32_t beta_len = detail::get_u32(in);
    if (p.num_filters < 1 || coeffs < 1 || beta_len < 1 ||
        static_cast<std::uint64_t>(p.num_filters) * coeffs > (1u << 24)) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            "implausible convolution shape");
    }
    p.degree = static_cast<int>(coeffs) - 1;
    p.alpha.resize(static_cast<std::size_t>(p.num_filters) * coeffs);
    p.beta.resize(beta_len);
    detail::get_f64_vector(in, p.alpha);
    detail::get_f64_vector(in, p.beta);
    c.params.conv.push_back(std::move(p));
  }
  const std::uint32_t fc_count = detail::get_u32(in);
  for (std::uint32_t j = 0; j < fc_count; ++j) {
    FcParams p;
    p.out_dim = static_cast<int>(detail::get_u32(in));
    p.in_dim = static_cast<int>(detail::get_u32(in));
    if (p.out_dim < 1 || p.in_dim < 1 ||
        static_cast<std::uint64_t>(p.out_dim) * p.in_dim > (1u << 26)) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            "implausible FC shape");
    }
    p.weight.resize(static_cast<std::size_t>(p.out_dim) * p.in_dim);
    p.bias.resize(static_cast<std::size_t>(p.out_dim));
    detail::get_f64_vector(in, p.weight);
    detail::get_f64_vector(in, p.bias);
    c.params.fc.push_back(std::move(p));
  }

  unsigned char has_opt = 0;
  detail::get_bytes(in, &has_opt, 1);
  if (has_opt) {
    OptimizerState s;
    s.step = detail::get_u64(in);
    s.learning_rate = detail::get_f64(in);
    s.beta1 = detail::get_f64(in);
    s.beta2 = detail::get_f64(in);
    s.epsilon = detail::get_f64(in);
    const std::uint64_t tensors = detail::get_u64(in);
    if (tensors > (1u << 16)) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            "implausible optimizer tensor count");
    }
    for (std::uint64_t i = 0; i < tensors; ++i) {
      const std::uint64_t len = detail::get_u64(in);
      if (len > (1u << 26)) {
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              "implausible optimizer tensor length");
      }
      std::vector<double> m(len);
      std::vector<double> v(len);
      detail::get_f64_vector(in, m);
      detail::get_f64_vector(in, v);
      s.first_moments.push_back(std::move(m));
      s.second_moments.push_back(std::move(v));
    }
    c.optimizer = std::move(s);
  }
  return c;
}

}  // namespace tigranet

#endif  // TIGRANET_NETWORK_HPP
