#ifndef TIGRANET_OPTIM_HPP
#define TIGRANET_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tigranet/graph.hpp"
#include "tigranet/network.hpp"
#include "tigranet/rng.hpp"

namespace tigranet {

// Adam keeps its moments per tensor in for_each_tensor order, which is also
// how they are serialized into checkpoints.
using AdamState = OptimizerState;

namespace detail {

template <typename Params>
std::vector<std::vector<double>*> tensor_pointers(Params& params) {
  std::vector<std::vector<double>*> out;
  for_each_tensor(params, [&out](const std::string&, std::vector<double>& t) {
    out.push_back(&t);
  });
  return out;
}

inline std::vector<std::string> tensor_names(const NetworkParams& params) {
  std::vector<std::string> names;
  for_each_tensor(const_cast<NetworkParams&>(params),
                  [&names](const std::string& name, std::vector<double>&) {
                    names.push_back(name);
                  });
  return names;
}

}  // namespace detail

inline AdamState make_adam_state(const NetworkParams& params,
                                 double learning_rate, double beta1,
                                 double beta2, double epsilon) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  for_each_tensor(const_cast<NetworkParams&>(params),
                  [&state](const std::string&, std::vector<double>& t) {
                    state.first_moments.emplace_back(t.size(), 0.0);
                    state.second_moments.emplace_back(t.size(), 0.0);
                  });
  return state;
}

// One bias-corrected Adam update. Gradients must be finite; a non-finite
// entry aborts the run with a diagnostic rather than being clipped.
inline void adam_step(AdamState& state, NetworkParams& params,
                      const NetworkGrads& grads) {
  auto param_tensors = detail::tensor_pointers(params);
  auto grad_tensors = detail::tensor_pointers(const_cast<NetworkGrads&>(grads));
  if (param_tensors.size() != grad_tensors.size() ||
      param_tensors.size() != state.first_moments.size()) {
    throw std::invalid_argument("adam_step: tensor count mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t ti = 0; ti < param_tensors.size(); ++ti) {
    std::vector<double>& p = *param_tensors[ti];
    const std::vector<double>& g = *grad_tensors[ti];
    std::vector<double>& m = state.first_moments[ti];
    std::vector<double>& v = state.second_moments[ti];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw std::invalid_argument("adam_step: tensor shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw std::runtime_error("adam_step: non-finite gradient in tensor " +
                                 std::to_string(ti) + " at index " +
                                 std::to_string(i));
      }
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<GraphSignal> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  int eval_every = 1;
  int threads = 1;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  // Filled by the evaluation driver after training.
  double test_acc = -1.0;
  double transformed_test_acc = -1.0;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

namespace detail {

inline void check_dataset(const Dataset& data, const NetworkSpec& spec,
                          const char* what) {
  if (data.inputs.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty dataset");
  }
  if (data.inputs.size() != data.labels.size()) {
    throw std::invalid_argument(std::string(what) +
                                ": image/label count mismatch");
  }
  for (const GraphSignal& x : data.inputs) {
    if (static_cast<int>(x.size()) != spec.num_vertices()) {
      throw std::invalid_argument(std::string(what) +
                                  ": input size does not match network input");
    }
  }
  for (int label : data.labels) {
    if (label < 0 || label >= spec.num_classes) {
      throw std::invalid_argument(std::string(what) + ": label out of range");
    }
  }
}

inline int predict(const std::vector<double>& probs) {
  return static_cast<int>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// Runs fn(i) for i in [0, count) on up to num_threads workers over disjoint
// contiguous ranges. Each index writes only its own output slot, so results
// are identical to the serial order.
inline void parallel_for(std::size_t count, int num_threads,
                         const std::function<void(std::size_t)>& fn) {
  if (num_threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(num_threads), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

inline EvalResult evaluate(const NetworkSpec& spec, const NetworkParams& params,
                           const NormalizedLaplacian& lap, const Dataset& data,
                           int threads = 1) {
  detail::check_dataset(data, spec, "evaluate");
  std::vector<double> losses(data.size());
  std::vector<char> correct(data.size());
  detail::parallel_for(data.size(), threads, [&](std::size_t i) {
    NetworkTape tape;
    const std::vector<double> probs =
        forward(spec, params, lap, data.inputs[i], tape);
    losses[i] = nll_loss(probs, data.labels[i]).first;
    correct[i] = detail::predict(probs) == data.labels[i] ? 1 : 0;
  });
  EvalResult result;
  for (std::size_t i = 0; i < data.size(); ++i) {
    result.mean_loss += losses[i];
    result.accuracy += correct[i];
  }
  result.mean_loss /= static_cast<double>(data.size());
  result.accuracy /= static_cast<double>(data.size());
  return result;
}

inline EvalResult evaluate(const Checkpoint& checkpoint, const Dataset& data,
                           int threads = 1) {
  if (!data.inputs.empty() && static_cast<int>(data.inputs.front().size()) !=
                                  checkpoint.spec.num_vertices()) {
    throw std::invalid_argument(
        "evaluate: dataset image size does not match checkpoint input (" +
        std::to_string(checkpoint.spec.height) + "x" +
        std::to_string(checkpoint.spec.width) + ")");
  }
  const NormalizedLaplacian lap = normalized_laplacian(
      build_grid_graph(checkpoint.spec.height, checkpoint.spec.width));
  return evaluate(checkpoint.spec, checkpoint.params, lap, data, threads);
}

// Mini-batch Adam training on the negative log-likelihood. Deterministic for
// a fixed config: initialization, shuffling and batch reduction all follow
// fixed orders. Returns the checkpoint of the best validation epoch plus the
// full metric history.
inline std::pair<Checkpoint, Metrics> train(const NetworkSpec& spec,
                                            const TrainConfig& config,
                                            const Dataset& train_set,
                                            const Dataset& val_set) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");
  detail::check_dataset(train_set, spec, "train(train set)");
  detail::check_dataset(val_set, spec, "train(validation set)");

  const NormalizedLaplacian lap =
      normalized_laplacian(build_grid_graph(spec.height, spec.width));
  NetworkParams params = init_params(spec, config.seed);
  AdamState adam = make_adam_state(params, config.learning_rate, config.beta1,
                                   config.beta2, config.epsilon);
  SplitMix64 shuffle_rng(SplitMix64::derive(config.seed, 1));

  Metrics metrics;
  Checkpoint best;
  best.arch = to_string(spec);
  best.spec = spec;
  best.seed = config.seed;
  double best_val = -1.0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double last_val_acc = 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = order.size(); i-- > 1;) {
        const std::size_t j = shuffle_rng.below(i + 1);
        std::swap(order[i], order[j]);
      }
    }
    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::size_t count = end - start;
      std::vector<double> losses(count);
      std::vector<char> correct(count);
      std::vector<NetworkGrads> grads(count);
      detail::parallel_for(count, config.threads, [&](std::size_t b) {
        const std::size_t idx = order[start + b];
        NetworkTape tape;
        const std::vector<double> probs =
            forward(spec, params, lap, train_set.inputs[idx], tape);
        correct[b] = detail::predict(probs) == train_set.labels[idx] ? 1 : 0;
        auto [loss, g] = backward(spec, params, tape, train_set.labels[idx]);
        losses[b] = loss;
        grads[b] = std::move(g);
      });
      // Fixed-order reduction: mean over the batch in example order.
      NetworkGrads batch_grad = zeros_like(params);
      auto acc_tensors = detail::tensor_pointers(batch_grad);
      for (std::size_t b = 0; b < count; ++b) {
        epoch_loss += losses[b];
        epoch_correct += static_cast<std::size_t>(correct[b]);
        auto g_tensors = detail::tensor_pointers(grads[b]);
        for (std::size_t ti = 0; ti < acc_tensors.size(); ++ti) {
          std::vector<double>& acc = *acc_tensors[ti];
          const std::vector<double>& g = *g_tensors[ti];
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
        }
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (std::vector<double>* t : acc_tensors) {
        for (double& x : *t) x *= inv;
      }
      adam_step(adam, params, batch_grad);
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / static_cast<double>(train_set.size());
    em.train_acc =
        static_cast<double>(epoch_correct) / static_cast<double>(train_set.size());
    if (epoch % std::max(1, config.eval_every) == 0 || epoch == config.epochs) {
      last_val_acc = evaluate(spec, params, lap, val_set, config.threads).accuracy;
    }
    em.val_acc = last_val_acc;
    metrics.epochs.push_back(em);

    if (em.val_acc > best_val) {
      best_val = em.val_acc;
      best.params = params;
      best.optimizer = adam;
      best.epoch = static_cast<std::uint32_t>(epoch);
      best.train_loss = em.train_loss;
      best.train_acc = em.train_acc;
      best.val_acc = em.val_acc;
      metrics.best_epoch = epoch;
      metrics.best_val_acc = em.val_acc;
    }
  }
  return {std::move(best), std::move(metrics)};
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckEntry {
  std::string tensor;
  double max_rel_error = 0.0;
  std::size_t parameter_count = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 1e-4;
  bool passed = false;

  const GradCheckEntry& worst() const {
    return *std::max_element(entries.begin(), entries.end(),
                             [](const GradCheckEntry& a, const GradCheckEntry& b) {
                               return a.max_rel_error < b.max_rel_error;
                             });
  }
};

// Central-difference verification (h = 1e-5) of every analytic gradient on a
// random input/label drawn from the seed. Relative error uses
// |a - n| / max(|a|, |n|, 1e-6) so immaterial near-zero noise does not trip
// the check. The optional hook lets tests corrupt the analytic gradients to
// prove the check catches faults.
inline GradCheckReport gradcheck(
    const NetworkSpec& spec, std::uint64_t seed, double tolerance,
    const std::function<void(NetworkGrads&)>& corrupt_analytic = {}) {
  constexpr double kStep = 1e-5;
  const NormalizedLaplacian lap =
      normalized_laplacian(build_grid_graph(spec.height, spec.width));
  NetworkParams params = init_params(spec, seed);
  SplitMix64 rng(SplitMix64::derive(seed, 2));
  GraphSignal input(static_cast<std::size_t>(spec.num_vertices()));
  for (double& x : input) x = rng.uniform(0.05, 1.0);
  const int label = static_cast<int>(
      rng.below(static_cast<std::uint64_t>(spec.num_classes)));

  NetworkTape tape;
  forward(spec, params, lap, input, tape);
  auto [loss, analytic] = backward(spec, params, tape, label);
  (void)loss;
  if (corrupt_analytic) corrupt_analytic(analytic);

  auto loss_at = [&](const NetworkParams& p) {
    NetworkTape t;
    const std::vector<double> probs = forward(spec, p, lap, input, t);
    return nll_loss(probs, label).first;
  };

  GradCheckReport report;
  report.tolerance = tolerance;
  auto param_tensors = detail::tensor_pointers(params);
  auto grad_tensors = detail::tensor_pointers(analytic);
  const std::vector<std::string> names = detail::tensor_names(params);
  for (std::size_t ti = 0; ti < param_tensors.size(); ++ti) {
    GradCheckEntry entry;
    entry.tensor = names[ti];
    entry.parameter_count = param_tensors[ti]->size();
    std::vector<double>& tensor = *param_tensors[ti];
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + kStep;
      const double plus = loss_at(params);
      tensor[i] = saved - kStep;
      const double minus = loss_at(params);
      tensor[i] = saved;
      const double numeric = (plus - minus) / (2.0 * kStep);
      const double anal = (*grad_tensors[ti])[i];
      const double denom = std::max({std::abs(anal), std::abs(numeric), 1e-6});
      entry.max_rel_error =
          std::max(entry.max_rel_error, std::abs(anal - numeric) / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  report.passed = true;
  for (const GradCheckEntry& e : report.entries) {
    if (!(e.max_rel_error <= tolerance)) report.passed = false;
  }
  return report;
}

}  // namespace tigranet

#endif  // TIGRANET_OPTIM_HPP
