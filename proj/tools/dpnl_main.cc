//
// Copyright 2026 The dp-noise-ledger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// dp-noise-ledger command line: privacy accounting, sigma calibration, grid
// sweeps, desk-scale DP-SGD training and gradient-noise reports.
//
// Exit codes: 0 success, 2 usage/config error, 3 infeasible calibration,
// 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpnl/accountant.h"
#include "dpnl/calibration.h"
#include "dpnl/data.h"
#include "dpnl/dpsgd.h"
#include "dpnl/models.h"
#include "dpnl/noise_meter.h"
#include "dpnl/run_config.h"
#include "dpnl/text_format.h"
#include "json.hpp"

namespace dpnl {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> ParseGrid(const std::string& csv_list,
                              const std::string& flag) {
  std::vector<double> grid;
  std::stringstream ss(csv_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument(flag + ": not a number: " + item);
    }
  }
  if (grid.empty()) {
    throw std::invalid_argument(flag + ": empty grid");
  }
  return grid;
}

void WriteFileOrThrow(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  out << contents;
  if (!out.good()) {
    throw IoError("write failed: " + path);
  }
}

Conversion ParseConversion(const std::string& name) {
  if (name == "classic") return Conversion::kClassic;
  if (name == "improved") return Conversion::kImproved;
  throw std::invalid_argument("--conversion must be classic or improved");
}

uint64_t DefaultSeed() {
  const char* env = std::getenv("DP_LEDGER_SEED");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError("DP_LEDGER_SEED is not an integer: " +
                      std::string(env));
  }
  return v;
}

// ---------------------------------------------------------------------------
// account
// ---------------------------------------------------------------------------

struct AccountArgs {
  double q = -1.0;  // -1 = not given
  double sigma = 0.0;
  double delta = 1e-5;
  int64_t steps = -1;  // -1 = not given
  int epochs = 0;
  int64_t dataset_size = 0;
  int64_t batch_size = 0;
  std::string conversion = "improved";
  std::string json_path;
};

int RunAccount(const AccountArgs& args) {
  double q = args.q;
  int64_t steps = args.steps;
  if (args.epochs > 0) {
    if (q >= 0.0) {
      throw std::invalid_argument(
          "give either --q with --steps, or --epochs with --dataset-size "
          "and --batch-size");
    }
    if (args.dataset_size < 1 || args.batch_size < 1 ||
        args.batch_size > args.dataset_size) {
      throw std::invalid_argument(
          "--epochs requires --dataset-size and --batch-size with 1 <= "
          "batch <= dataset");
    }
    q = static_cast<double>(args.batch_size) /
        static_cast<double>(args.dataset_size);
    steps = StepsFromEpochs(args.epochs, q);
  } else if (steps < 0 || q < 0.0) {
    throw std::invalid_argument(
        "--q and one of --steps/--epochs are required");
  }
  const EpsDelta result =
      EpsFor(q, args.sigma, steps, args.delta, ParseConversion(args.conversion));
  std::cout << "epsilon=" << FormatDouble(result.eps)
            << " best_order=" << FormatDouble(result.best_order) << "\n";
  if (!args.json_path.empty()) {
    nlohmann::json doc{{"q", q},
                       {"sigma", args.sigma},
                       {"delta", args.delta},
                       {"steps", steps},
                       {"conversion", args.conversion},
                       {"epsilon", result.eps},
                       {"best_order", result.best_order}};
    WriteFileOrThrow(args.json_path, doc.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
  double target_eps = 0.0;
  double delta = 1e-5;
  double q = 0.0;
  int epochs = 0;
  double sigma_lo = kDefaultSigmaLo;
  double sigma_hi = kDefaultSigmaHi;
  double tolerance = kDefaultSigmaTolerance;
};

int RunCalibrate(const CalibrateArgs& args) {
  CalibrationTarget target;
  target.target_eps = args.target_eps;
  target.delta = args.delta;
  target.q = args.q;
  target.epochs = args.epochs;
  target.sigma_lo = args.sigma_lo;
  target.sigma_hi = args.sigma_hi;
  target.tolerance = args.tolerance;
  const double sigma = CalibrateSigma(target);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", sigma);
  std::cout << buf << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string q_grid;
  std::string sigma_grid;
  int epochs = 0;
  double delta = 1e-5;
  std::string out_path;
};

int RunSweep(const SweepArgs& args) {
  const std::vector<double> qs = ParseGrid(args.q_grid, "--q-grid");
  const std::vector<double> sigmas = ParseGrid(args.sigma_grid, "--sigma-grid");
  const std::vector<SweepRow> rows =
      SweepGrid(qs, sigmas, args.epochs, args.delta);

  std::string csv = std::string(kCsvVersionLine) + "\n";
  csv += "q,sigma,steps,delta,epsilon,best_order\n";
  for (const SweepRow& row : rows) {
    csv += FormatDouble(row.q) + "," + FormatDouble(row.sigma) + "," +
           FormatInt(row.steps) + "," + FormatDouble(row.delta) + "," +
           FormatDouble(row.epsilon) + "," + FormatDouble(row.best_order) +
           "\n";
  }
  WriteFileOrThrow(args.out_path, csv);
  std::cout << "wrote " << rows.size() << " rows to " << args.out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / noise-report
// ---------------------------------------------------------------------------

struct TrainSetup {
  TrainConfig config;
  Dataset train;
  Dataset test;
  std::string out_dir;
  std::string resolved;
};

// Reads the flat config document, loads/derives the dataset splits, and
// validates the training configuration. Throws before any compute on bad
// input; records every resolved value for the config echo.
TrainSetup BuildTrainSetup(RunConfig& cfg, bool out_dir_required) {
  TrainSetup setup;

  const std::string dataset = cfg.GetString("dataset");
  const int64_t n_train = cfg.GetIntOr("n_train", 1000);
  const int64_t n_test = cfg.GetIntOr("n_test", 1000);
  const uint64_t split_seed =
      static_cast<uint64_t>(cfg.GetIntOr("split_seed", 7));
  cfg.SetResolved("dataset", dataset);
  cfg.SetResolved("n_train", FormatInt(n_train));
  cfg.SetResolved("n_test", FormatInt(n_test));
  cfg.SetResolved("split_seed", FormatInt(static_cast<int64_t>(split_seed)));

  if (dataset == "blobs") {
    const int64_t blobs_n = cfg.GetIntOr("blobs_n", n_train + n_test);
    const int64_t blobs_dim = cfg.GetIntOr("blobs_dim", 10);
    const int64_t blobs_classes = cfg.GetIntOr("blobs_classes", 4);
    const double blobs_spread = cfg.GetDoubleOr("blobs_spread", 0.45);
    const uint64_t blobs_seed =
        static_cast<uint64_t>(cfg.GetIntOr("blobs_seed", 1));
    cfg.SetResolved("blobs_n", FormatInt(blobs_n));
    cfg.SetResolved("blobs_dim", FormatInt(blobs_dim));
    cfg.SetResolved("blobs_classes", FormatInt(blobs_classes));
    cfg.SetResolved("blobs_spread", FormatDouble(blobs_spread));
    cfg.SetResolved("blobs_seed", FormatInt(static_cast<int64_t>(blobs_seed)));
    const Dataset all =
        SyntheticBlobs(blobs_n, blobs_dim, blobs_classes, blobs_spread,
                       blobs_seed);
    std::tie(setup.train, setup.test) =
        SubsetSplit(all, n_train, n_test, split_seed);
  } else if (dataset == "idx") {
    const std::string images = cfg.GetString("idx_images");
    const std::string labels = cfg.GetString("idx_labels");
    cfg.SetResolved("idx_images", images);
    cfg.SetResolved("idx_labels", labels);
    const Dataset all = LoadIdx(images, labels);
    std::tie(setup.train, setup.test) =
        SubsetSplit(all, n_train, n_test, split_seed);
  } else {
    throw ConfigError("dataset must be `blobs` or `idx`, got " + dataset);
  }

  TrainConfig& config = setup.config;
  config.arch.input_dim = setup.train.InputDim();
  config.arch.num_classes = setup.train.num_classes;
  config.arch.hidden = cfg.GetInt("arch_hidden");
  config.learning_rate = cfg.GetDouble("learning_rate");
  config.epochs = static_cast<int>(cfg.GetInt("epochs"));

  const std::string mode = cfg.GetString("batch_mode");
  cfg.SetResolved("batch_mode", mode);
  if (mode == "full") {
    config.mode = BatchMode::kFull;
  } else if (mode == "fixed") {
    config.mode = BatchMode::kFixed;
    config.batch_size = cfg.GetInt("batch_size");
    cfg.SetResolved("batch_size", FormatInt(config.batch_size));
  } else if (mode == "poisson") {
    config.mode = BatchMode::kPoisson;
    config.sampling_rate = cfg.GetDouble("sampling_rate");
    cfg.SetResolved("sampling_rate", FormatDouble(config.sampling_rate));
  } else {
    throw ConfigError("batch_mode must be full, fixed or poisson, got " +
                      mode);
  }

  const std::string clip = cfg.GetStringOr("clip", "none");
  cfg.SetResolved("clip", clip);
  if (clip != "none") {
    try {
      size_t pos = 0;
      const double c = std::stod(clip, &pos);
      if (pos != clip.size()) throw std::invalid_argument(clip);
      config.clip = ClipConfig::Bounded(c);
    } catch (const std::invalid_argument&) {
      throw ConfigError("clip must be `none` or a positive number, got " +
                        clip);
    }
  }

  config.sigma = cfg.GetDoubleOr("sigma", 0.0);
  config.delta = cfg.GetDoubleOr("delta", 1e-5);
  config.eval_every = cfg.GetIntOr("eval_every", 10);
  config.max_steps = cfg.GetIntOr("max_steps", 0);
  config.seed = cfg.Has("seed") ? static_cast<uint64_t>(cfg.GetInt("seed"))
                                : DefaultSeed();
  cfg.SetResolved("seed", FormatInt(static_cast<int64_t>(config.seed)));

  setup.out_dir = cfg.GetStringOr("out_dir", "");
  if (out_dir_required && setup.out_dir.empty()) {
    throw ConfigError("missing required config key `out_dir`");
  }
  if (!setup.out_dir.empty()) {
    cfg.SetResolved("out_dir", setup.out_dir);
  }

  cfg.SetResolved("arch_hidden", FormatInt(config.arch.hidden));
  cfg.SetResolved("learning_rate", FormatDouble(config.learning_rate));
  cfg.SetResolved("epochs", FormatInt(config.epochs));
  cfg.SetResolved("sigma", FormatDouble(config.sigma));
  cfg.SetResolved("delta", FormatDouble(config.delta));
  cfg.SetResolved("eval_every", FormatInt(config.eval_every));
  cfg.SetResolved("max_steps", FormatInt(config.max_steps));

  cfg.RejectUnknownKeys();
  config.Validate(setup.train.Size());
  setup.resolved = cfg.ResolvedText();
  return setup;
}

std::string MetricsCsv(const TrainMetrics& metrics) {
  std::string csv = std::string(kCsvVersionLine) + "\n";
  csv +=
      "step,epoch,eps_spent,train_loss,test_acc,inherent_noise,"
      "additive_noise,accounted_fraction\n";
  for (const MetricsRow& row : metrics.rows) {
    csv += FormatInt(row.step) + "," + FormatDouble(row.epoch) + "," +
           FormatDouble(row.eps_spent) + "," + FormatDouble(row.train_loss) +
           "," + FormatDouble(row.test_acc) + "," +
           FormatDouble(row.inherent_noise) + "," +
           FormatDouble(row.additive_noise) + "," +
           FormatDouble(row.accounted_fraction) + "\n";
  }
  return csv;
}

int RunTrain(const std::string& config_path) {
  RunConfig cfg = RunConfig::ParseFile(config_path);
  TrainSetup setup = BuildTrainSetup(cfg, /*out_dir_required=*/true);

  const TrainMetrics metrics = Train(setup.config, setup.train, setup.test);

  std::error_code ec;
  std::filesystem::create_directories(setup.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory: " + setup.out_dir);
  }
  WriteFileOrThrow(setup.out_dir + "/metrics.csv", MetricsCsv(metrics));
  WriteFileOrThrow(setup.out_dir + "/config_resolved.cfg", setup.resolved);

  const MetricsRow& last = metrics.rows.back();
  std::cout << "final: step=" << last.step
            << " eps_spent=" << FormatDouble(last.eps_spent)
            << " train_loss=" << FormatDouble(last.train_loss)
            << " test_acc=" << FormatDouble(last.test_acc) << "\n";
  return kExitOk;
}

int RunNoiseReport(const std::string& config_path, int64_t at_step) {
  if (at_step < 0) {
    throw std::invalid_argument("--at-step must be >= 0");
  }
  RunConfig cfg = RunConfig::ParseFile(config_path);
  TrainSetup setup = BuildTrainSetup(cfg, /*out_dir_required=*/false);
  TrainConfig config = setup.config;

  MlpParams params;
  if (at_step == 0) {
    params = InitParams(config.arch, config.seed);
  } else {
    config.max_steps = at_step;
    config.eval_every = at_step;  // a single log row
    const TrainMetrics metrics = Train(config, setup.train, setup.test);
    if (metrics.total_steps < at_step) {
      throw std::invalid_argument(
          "--at-step " + std::to_string(at_step) +
          " exceeds the run's total step count " +
          std::to_string(metrics.total_steps));
    }
    params = metrics.final_params;
  }

  const int64_t n = setup.train.Size();
  std::vector<int64_t> all(n);
  for (int64_t i = 0; i < n; ++i) all[i] = i;
  Matrix grads = PerSampleGradients(params, setup.train, all);
  grads = ClipPerSample(std::move(grads), config.clip);

  double batch_size = static_cast<double>(n);
  double q = 1.0;
  if (config.mode == BatchMode::kFixed) {
    batch_size = static_cast<double>(config.batch_size);
    q = batch_size / static_cast<double>(n);
  } else if (config.mode == BatchMode::kPoisson) {
    q = config.sampling_rate;
    batch_size = std::max(1.0, q * static_cast<double>(n));
  }
  NoiseReport report =
      MakeNoiseReport(grads, batch_size, config.clip.bound, config.sigma);
  report.context.q = q;
  report.context.step = at_step;

  nlohmann::json doc{
      {"inherent_scale", report.inherent_scale},
      {"additive_scale", report.additive_scale},
      {"accounted_fraction", report.accounted_fraction},
      {"context",
       {{"batch_size", report.context.batch_size},
        {"q", report.context.q},
        {"n", report.context.n},
        {"dim", report.context.dim},
        {"clip", report.context.clip.has_value()
                     ? nlohmann::json(*report.context.clip)
                     : nlohmann::json(nullptr)},
        {"sigma", report.context.sigma},
        {"step", report.context.step}}}};
  std::cout << doc.dump(2) << "\n";

  if (!setup.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(setup.out_dir, ec);
    if (ec) {
      throw IoError("cannot create output directory: " + setup.out_dir);
    }
    WriteFileOrThrow(setup.out_dir + "/config_resolved.cfg", setup.resolved);
  }
  return kExitOk;
}

int Dispatch(int argc, char** argv) {
  CLI::App app{
      "dp-noise-ledger: Renyi-DP accounting, calibration and desk-scale "
      "DP-SGD for the subsampled Gaussian mechanism"};
  app.require_subcommand(1);

  AccountArgs account;
  CLI::App* cmd_account = app.add_subcommand(
      "account", "Compute the (eps, delta) guarantee of a DP-SGD run");
  cmd_account->add_option("--q", account.q, "Poisson sampling rate in (0, 1]");
  cmd_account->add_option("--sigma", account.sigma, "noise multiplier")
      ->required();
  cmd_account->add_option("--delta", account.delta, "failure probability");
  CLI::Option* steps_opt =
      cmd_account->add_option("--steps", account.steps, "number of steps");
  CLI::Option* epochs_opt =
      cmd_account->add_option("--epochs", account.epochs, "number of epochs");
  cmd_account->add_option("--dataset-size", account.dataset_size,
                          "training set size (with --epochs)");
  cmd_account->add_option("--batch-size", account.batch_size,
                          "expected batch size (with --epochs)");
  cmd_account->add_option("--conversion", account.conversion,
                          "classic | improved");
  cmd_account->add_option("--json", account.json_path,
                          "also write the result as JSON to this path");
  steps_opt->excludes(epochs_opt);

  CalibrateArgs calibrate;
  CLI::App* cmd_calibrate = app.add_subcommand(
      "calibrate", "Find the minimal sigma meeting a target epsilon");
  cmd_calibrate->add_option("--target-eps", calibrate.target_eps, "target eps")
      ->required();
  cmd_calibrate->add_option("--delta", calibrate.delta, "failure probability");
  cmd_calibrate->add_option("--q", calibrate.q, "sampling rate")->required();
  cmd_calibrate->add_option("--epochs", calibrate.epochs, "epoch budget")
      ->required();
  cmd_calibrate->add_option("--sigma-lo", calibrate.sigma_lo,
                            "search bracket lower end");
  cmd_calibrate->add_option("--sigma-hi", calibrate.sigma_hi,
                            "search bracket upper end");
  cmd_calibrate->add_option("--tolerance", calibrate.tolerance,
                            "bisection tolerance on sigma");

  SweepArgs sweep;
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "Evaluate epsilon over a (q, sigma) grid, write CSV");
  cmd_sweep->add_option("--q-grid", sweep.q_grid, "comma-separated q values")
      ->required();
  cmd_sweep
      ->add_option("--sigma-grid", sweep.sigma_grid,
                   "comma-separated sigma values")
      ->required();
  cmd_sweep->add_option("--epochs", sweep.epochs, "epoch budget")->required();
  cmd_sweep->add_option("--delta", sweep.delta, "failure probability");
  cmd_sweep->add_option("--out", sweep.out_path, "output CSV path")
      ->required();

  std::string train_config;
  CLI::App* cmd_train =
      app.add_subcommand("train", "Train a desk-scale model per config file");
  cmd_train->add_option("--config", train_config, "path to key=value config")
      ->required();

  std::string report_config;
  int64_t report_step = 0;
  CLI::App* cmd_report = app.add_subcommand(
      "noise-report", "Decompose gradient noise at a training step");
  cmd_report->add_option("--config", report_config, "path to key=value config")
      ->required();
  cmd_report->add_option("--at-step", report_step, "step to report at")
      ->required();

  argv = app.ensure_utf8(argv);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (cmd_account->parsed()) return RunAccount(account);
  if (cmd_calibrate->parsed()) return RunCalibrate(calibrate);
  if (cmd_sweep->parsed()) return RunSweep(sweep);
  if (cmd_train->parsed()) return RunTrain(train_config);
  if (cmd_report->parsed()) return RunNoiseReport(report_config, report_step);
  return kExitUsage;
}

}  // namespace
}  // namespace dpnl

int main(int argc, char** argv) {
  try {
    return dpnl::Dispatch(argc, argv);
  } catch (const dpnl::BracketError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return dpnl::kExitInfeasible;
  } catch (const dpnl::IdxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dpnl::kExitIo;
  } catch (const dpnl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dpnl::kExitIo;
  } catch (const dpnl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dpnl::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dpnl::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
