// tigranet command-line driver: reproducible training, evaluation and
// inspection for graph-based isometry-invariant image classifiers.
//
// Subcommands:
//   train      fit a network on an IDX dataset, write checkpoint + metrics
//   eval       score a checkpoint on plain and transformed test splits
//   inspect    dump filter spectra and per-layer feature maps as CSV
//   gradcheck  compare analytic gradients against central differences
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tigranet/tigranet.hpp"

namespace fs = std::filesystem;
using namespace tigranet;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sig17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

struct DataOptions {
  std::string dataset = "mnist012";
  std::string data_dir;
  std::string subsample;  // "train,val,test" caps for the variant datasets
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--dataset", opts.dataset, "Dataset variant")
      ->check(CLI::IsMember({"mnist012", "mnist-rot", "mnist-trans"}))
      ->capture_default_str();
  cmd->add_option("--data-dir", opts.data_dir,
                  "Directory holding train-images-idx3-ubyte and "
                  "train-labels-idx1-ubyte")
      ->envname("TIGRA_DATA_DIR")
      ->required();
  cmd->add_option("--subsample", opts.subsample,
                  "Split-size caps train,val,test (variants only), e.g. "
                  "2000,300,1000");
}

std::optional<SubsampleCaps> parse_subsample(const std::string& text) {
  if (text.empty()) return std::nullopt;
  SubsampleCaps caps;
  if (std::sscanf(text.c_str(), "%zu,%zu,%zu", &caps.train, &caps.val,
                  &caps.test) != 3) {
    throw std::runtime_error(
        "--subsample expects three comma-separated sizes, got '" + text + "'");
  }
  return caps;
}

DatasetSplits load_splits(const DataOptions& opts, std::uint64_t seed) {
  const fs::path dir(opts.data_dir);
  const ImageDataset source =
      read_idx((dir / "train-images-idx3-ubyte").string(),
               (dir / "train-labels-idx1-ubyte").string());
  if (opts.dataset == "mnist012") {
    return make_mnist012(source, seed);
  }
  const VariantKind kind =
      opts.dataset == "mnist-rot" ? VariantKind::rot : VariantKind::trans;
  return make_variant(source, kind, seed, parse_subsample(opts.subsample));
}

Dataset to_dataset(const ImageDataset& images) {
  Dataset d;
  d.inputs = images.images;
  d.labels = images.labels;
  return d;
}

// Applies a fresh random transform of the split's kind to every plain test
// image. repeat_tag distinguishes re-sampled evaluation rounds.
Dataset transformed_test_set(const DatasetSplits& splits, std::uint64_t seed,
                             std::uint64_t repeat_tag) {
  Dataset out;
  out.labels = splits.plain_test.labels;
  const int h = splits.plain_test.height;
  const int w = splits.plain_test.width;
  for (std::size_t i = 0; i < splits.plain_test.size(); ++i) {
    SplitMix64 rng(
        SplitMix64::derive(seed, 20000 + repeat_tag * 1000000 + i));
    if (splits.test_transform == TransformKind::translate) {
      const int dx = static_cast<int>(rng.below(13)) - 6;
      const int dy = static_cast<int>(rng.below(13)) - 6;
      out.inputs.push_back(
          translate_image(splits.plain_test.images[i], h, w, dx, dy));
    } else {
      const double angle = rng.uniform(0.0, 360.0);
      out.inputs.push_back(
          rotate_image(splits.plain_test.images[i], h, w, angle));
    }
  }
  return out;
}

void write_manifest(const fs::path& path,
                    const std::vector<ManifestEntry>& manifest) {
  std::ofstream out = open_output(path);
  out << "index,label,kind,param1,param2\n";
  for (const ManifestEntry& e : manifest) {
    out << e.source_index << ',' << e.label << ',' << to_string(e.kind) << ','
        << sig17(e.param1) << ',' << sig17(e.param2) << '\n';
  }
}

void write_metrics_csv(const fs::path& path, const Metrics& metrics,
                       const Checkpoint& best) {
  std::ofstream out = open_output(path);
  out << "epoch,train_loss,train_acc,val_acc\n";
  for (const EpochMetrics& em : metrics.epochs) {
    out << em.epoch << ',' << fixed6(em.train_loss) << ','
        << fixed6(em.train_acc) << ',' << fixed6(em.val_acc) << '\n';
  }
  out << "final," << fixed6(best.train_loss) << ',' << fixed6(best.train_acc)
      << ',' << fixed6(best.val_acc) << '\n';
}

void write_config_echo(const fs::path& path, const CLI::App* cmd) {
  std::ofstream out = open_output(path);
  out << "# resolved configuration for: " << cmd->get_name() << '\n';
  out << cmd->config_to_str(true, true);
}

// Flat `key = value` config files mirroring the flag names; values given on
// the command line win. Applied by injecting synthetic flags for keys the
// user did not pass explicitly.
std::vector<std::string> apply_config_file(
    const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) {
    throw std::runtime_error("cannot read config file " + config_path);
  }
  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t\r");
    const auto end = s.find_last_not_of(" \t\r");
    return begin == std::string::npos ? std::string()
                                      : s.substr(begin, end - begin + 1);
  };
  std::vector<std::string> out = args;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line is not key=value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config") continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const std::string& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
        given = true;
        break;
      }
    }
    if (!given) {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

const char* transform_prefix(TransformKind kind) {
  return kind == TransformKind::translate ? "translated" : "rotated";
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string arch;
  std::string out_dir;
  DataOptions data;
  std::uint64_t seed = 0;
  int epochs = 50;
  int batch = 16;
  double lr = 1e-3;
  int eval_every = 1;
  int threads = 1;
};

int run_train(const TrainOptions& opts, const CLI::App* cmd) {
  ensure_directory(opts.out_dir);
  const fs::path out_dir(opts.out_dir);
  write_config_echo(out_dir / "config.txt", cmd);

  const DatasetSplits splits = load_splits(opts.data, opts.seed);
  const NetworkSpec spec = parse_architecture(opts.arch, splits.train.height,
                                              splits.train.width);

  TrainConfig config;
  config.epochs = opts.epochs;
  config.batch_size = opts.batch;
  config.learning_rate = opts.lr;
  config.seed = opts.seed;
  config.eval_every = opts.eval_every;
  config.threads = opts.threads;

  auto [checkpoint, metrics] =
      train(spec, config, to_dataset(splits.train), to_dataset(splits.val));

  const EvalResult plain =
      evaluate(checkpoint, to_dataset(splits.test), opts.threads);
  const EvalResult transformed =
      evaluate(checkpoint, transformed_test_set(splits, opts.seed, 0),
               opts.threads);
  metrics.test_acc = plain.accuracy;
  metrics.transformed_test_acc = transformed.accuracy;

  save_checkpoint((out_dir / "checkpoint.tig").string(), checkpoint);
  write_metrics_csv(out_dir / "metrics.csv", metrics, checkpoint);
  write_manifest(out_dir / "train_manifest.csv", splits.train_manifest);
  write_manifest(out_dir / "val_manifest.csv", splits.val_manifest);
  write_manifest(out_dir / "test_manifest.csv", splits.test_manifest);

  std::cout << "best_epoch " << metrics.best_epoch << '\n'
            << "train_acc " << fixed6(checkpoint.train_acc) << '\n'
            << "val_acc " << fixed6(checkpoint.val_acc) << '\n'
            << "test_acc " << fixed6(plain.accuracy) << '\n'
            << transform_prefix(splits.test_transform) << "_test_acc "
            << fixed6(transformed.accuracy) << '\n';
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string split = "test";
  DataOptions data;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int repeats = 1;
  int threads = 1;
};

int run_eval(const EvalOptions& opts) {
  const Checkpoint checkpoint = load_checkpoint(opts.checkpoint);
  const std::uint64_t seed = opts.seed_given ? opts.seed : checkpoint.seed;
  const DatasetSplits splits = load_splits(opts.data, seed);

  const ImageDataset* split = &splits.test;
  if (opts.split == "train") split = &splits.train;
  if (opts.split == "val") split = &splits.val;

  const EvalResult result =
      evaluate(checkpoint, to_dataset(*split), opts.threads);
  std::cout << opts.split << "_acc " << fixed6(result.accuracy) << '\n'
            << opts.split << "_loss " << fixed6(result.mean_loss) << '\n';

  if (opts.split == "test") {
    std::vector<double> accs;
    for (int r = 0; r < opts.repeats; ++r) {
      accs.push_back(
          evaluate(checkpoint,
                   transformed_test_set(splits, seed,
                                        static_cast<std::uint64_t>(r)),
                   opts.threads)
              .accuracy);
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double std_dev =
        accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1))
                        : 0.0;
    const char* prefix = transform_prefix(splits.test_transform);
    std::cout << prefix << "_test_acc_mean " << fixed6(mean) << '\n'
              << prefix << "_test_acc_std " << fixed6(std_dev) << '\n';
  }
  return 0;
}

struct InspectOptions {
  std::string checkpoint;
  std::string out_dir;
  std::string input;
  int index = 0;
  int samples = 256;
};

int run_inspect(const InspectOptions& opts, const CLI::App* cmd) {
  const Checkpoint checkpoint = load_checkpoint(opts.checkpoint);
  ensure_directory(opts.out_dir);
  const fs::path out_dir(opts.out_dir);
  write_config_echo(out_dir / "config.txt", cmd);

  int conv_number = 0;
  for (const SpectralConvParams& conv : checkpoint.params.conv) {
    ++conv_number;
    for (int i = 0; i < conv.num_filters; ++i) {
      const fs::path path =
          out_dir / ("response_l" + std::to_string(conv_number) + "_f" +
                     std::to_string(i + 1) + ".csv");
      std::ofstream out = open_output(path);
      out << "lambda,response\n";
      for (const auto& [lambda, value] :
           spectral_response(conv.filter(i), opts.samples)) {
        out << sig17(lambda) << ',' << sig17(value) << '\n';
      }
    }
  }
  std::cout << "wrote spectral responses for " << conv_number
            << " convolutional layer(s)\n";

  if (!opts.input.empty()) {
    auto [images, dims] = read_idx_images(opts.input);
    if (opts.index < 0 || opts.index >= static_cast<int>(images.size())) {
      throw std::runtime_error("--index out of range: file holds " +
                               std::to_string(images.size()) + " image(s)");
    }
    if (dims.first != checkpoint.spec.height ||
        dims.second != checkpoint.spec.width) {
      throw std::runtime_error(
          "input image is " + std::to_string(dims.first) + "x" +
          std::to_string(dims.second) + " but the checkpoint expects " +
          std::to_string(checkpoint.spec.height) + "x" +
          std::to_string(checkpoint.spec.width));
    }
    const NormalizedLaplacian lap = normalized_laplacian(
        build_grid_graph(checkpoint.spec.height, checkpoint.spec.width));
    NetworkTape tape;
    std::vector<LayerSnapshot> snapshots;
    const auto probs =
        forward(checkpoint.spec, checkpoint.params, lap,
                images[static_cast<std::size_t>(opts.index)], tape, &snapshots);
    for (const LayerSnapshot& snap : snapshots) {
      for (std::size_t m = 0; m < snap.maps.size(); ++m) {
        const fs::path path = out_dir / ("featuremap_" + snap.label + "_m" +
                                         std::to_string(m + 1) + ".csv");
        std::ofstream out = open_output(path);
        out << "vertex,value\n";
        for (std::size_t v = 0; v < snap.maps[m].size(); ++v) {
          out << v << ',' << sig17(snap.maps[m][v]) << '\n';
        }
      }
    }
    std::cout << "wrote feature maps for " << snapshots.size() << " layer(s)\n";
    std::cout << "predicted_class "
              << (std::max_element(probs.begin(), probs.end()) - probs.begin())
              << '\n';
  }
  return 0;
}

struct GradcheckOptions {
  std::string arch = "SC[2,2]-DP[8]-SC[2,2]-DP[6]-S[3]-FC[6]-FC[3]";
  int height = 5;
  int width = 5;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckOptions& opts) {
  const NetworkSpec spec =
      parse_architecture(opts.arch, opts.height, opts.width);
  const GradCheckReport report = gradcheck(spec, opts.seed, opts.tolerance);
  for (const GradCheckEntry& e : report.entries) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s max_rel_err %.3e  (%zu params) %s",
                  e.tensor.c_str(), e.max_rel_error, e.parameter_count,
                  e.max_rel_error <= report.tolerance ? "ok" : "FAIL");
    std::cout << line << '\n';
  }
  if (!report.passed) {
    std::cerr << "gradcheck FAILED: worst tensor " << report.worst().tensor
              << " with max_rel_err " << report.worst().max_rel_error
              << " > tolerance " << report.tolerance << '\n';
    return 1;
  }
  std::cout << "gradcheck passed at tolerance " << report.tolerance << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "TIGraNet: isometry-invariant image classification on grid graphs"};
  app.require_subcommand(1);

  std::string config_file;  // consumed by apply_config_file before parsing
  auto add_config_flag = [&config_file](CLI::App* cmd) {
    cmd->add_option("--config", config_file,
                    "Flat key=value config file; explicit flags win");
  };

  TrainOptions train_opts;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train a network and write a run directory");
  add_config_flag(train_cmd);
  train_cmd
      ->add_option("--arch", train_opts.arch,
                   "Architecture string, e.g. "
                   "SC[3,3]-DP[300]-SC[6,3]-DP[100]-S[10]-FC[50]-FC[30]-FC[10]")
      ->required();
  train_cmd->add_option("--out", train_opts.out_dir, "Run output directory")
      ->required();
  add_data_options(train_cmd, train_opts.data);
  train_cmd->add_option("--seed", train_opts.seed, "RNG seed")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.epochs)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch", train_opts.batch)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lr", train_opts.lr, "Adam learning rate")
      ->capture_default_str();
  train_cmd->add_option("--eval-every", train_opts.eval_every)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd
      ->add_option("--threads", train_opts.threads,
                   "Worker threads (1 = bitwise deterministic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  EvalOptions eval_opts;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  add_config_flag(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint)->required();
  add_data_options(eval_cmd, eval_opts.data);
  eval_cmd->add_option("--split", eval_opts.split)
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  CLI::Option* seed_opt = eval_cmd->add_option(
      "--seed", eval_opts.seed, "Split seed (defaults to the checkpoint's)");
  eval_cmd
      ->add_option("--repeats", eval_opts.repeats,
                   "Transform re-sampling rounds for the test split")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval_opts.threads)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  InspectOptions inspect_opts;
  CLI::App* inspect_cmd = app.add_subcommand(
      "inspect", "Dump filter spectra and feature maps from a checkpoint");
  add_config_flag(inspect_cmd);
  inspect_cmd->add_option("--checkpoint", inspect_opts.checkpoint)->required();
  inspect_cmd->add_option("--out", inspect_opts.out_dir)->required();
  inspect_cmd->add_option("--input", inspect_opts.input,
                          "IDX image file whose --index image is pushed "
                          "through the network");
  inspect_cmd->add_option("--index", inspect_opts.index)->capture_default_str();
  inspect_cmd
      ->add_option("--samples", inspect_opts.samples,
                   "Spectral response sample count")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();

  GradcheckOptions grad_opts;
  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against central differences");
  add_config_flag(grad_cmd);
  grad_cmd->add_option("--arch", grad_opts.arch)->capture_default_str();
  grad_cmd->add_option("--height", grad_opts.height)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad_cmd->add_option("--width", grad_opts.width)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad_cmd->add_option("--seed", grad_opts.seed)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_opts.tolerance)
      ->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config_file(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes reversed args
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_opts, train_cmd);
    if (eval_cmd->parsed()) {
      eval_opts.seed_given = seed_opt->count() > 0;
      return run_eval(eval_opts);
    }
    if (inspect_cmd->parsed()) return run_inspect(inspect_opts, inspect_cmd);
    if (grad_cmd->parsed()) return run_gradcheck(grad_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
