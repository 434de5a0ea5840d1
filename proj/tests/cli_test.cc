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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpnl/calibration.h"
#include "json.hpp"

namespace {

const std::string kCli = DPNL_CLI_PATH;

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

std::string ScratchDir() {
  static const std::string dir = [] {
    const auto path =
        std::filesystem::temp_directory_path() / "dpnl_cli_test";
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
    return path.string();
  }();
  return dir;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs `args` (appended to the CLI path) through the shell, capturing stdout.
CommandResult Run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const std::string out_path =
      ScratchDir() + "/stdout_" + std::to_string(counter++);
  const std::string cmd =
      env + (env.empty() ? "" : " ") + kCli + " " + args + " > " + out_path +
      " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = ReadFile(out_path);
  return result;
}

double ParseEpsilon(const std::string& line) {
  const size_t at = line.find("epsilon=");
  REQUIRE(at != std::string::npos);
  return std::strtod(line.c_str() + at + 8, nullptr);
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string WriteTrainConfig(const std::string& name,
                             const std::string& extra) {
  const std::string path = ScratchDir() + "/" + name + ".cfg";
  std::ofstream out(path);
  out << "# desk-scale smoke config\n"
      << "dataset = blobs\n"
      << "blobs_n = 150\n"
      << "blobs_dim = 4\n"
      << "blobs_classes = 3\n"
      << "blobs_spread = 0.4\n"
      << "blobs_seed = 2\n"
      << "n_train = 100\n"
      << "n_test = 50\n"
      << "split_seed = 3\n"
      << "arch_hidden = 4\n"
      << "learning_rate = 0.5\n"
      << "epochs = 3\n"
      << "eval_every = 5\n"
      << extra;
  return path;
}

}  // namespace

TEST_CASE("account prints the classic single-step epsilon") {
  const CommandResult r =
      Run("account --q 1 --sigma 1 --steps 1 --delta 1e-5 --conversion "
          "classic");
  CHECK(r.exit_code == 0);
  CHECK(ParseEpsilon(r.out) == doctest::Approx(5.30).epsilon(1e-3));
  CHECK(r.out.find("best_order=6") != std::string::npos);
}

TEST_CASE("account at zero steps spends zero epsilon") {
  const CommandResult r = Run("account --q 0.5 --sigma 2 --steps 0");
  CHECK(r.exit_code == 0);
  CHECK(ParseEpsilon(r.out) == 0.0);
}

TEST_CASE("account supports the epochs route and json output") {
  const std::string json_path = ScratchDir() + "/account.json";
  const CommandResult r =
      Run("account --sigma 4.65 --epochs 60 --dataset-size 100 --batch-size "
          "17 --delta 1e-5 --json " +
          json_path);
  CHECK(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(ReadFile(json_path));
  CHECK(doc["q"].get<double>() == doctest::Approx(0.17));
  CHECK(doc["steps"].get<int64_t>() == 353);
  CHECK(doc["epsilon"].get<double>() == ParseEpsilon(r.out));
}

TEST_CASE("account rejects missing or conflicting flags with exit 2") {
  CHECK(Run("account --q 1 --steps 1").exit_code == 2);
  CHECK(Run("account --sigma 1").exit_code == 2);
  CHECK(Run("account --q 0.5 --sigma 1 --steps 1 --epochs 2").exit_code == 2);
  CHECK(Run("account --q 2 --sigma 1 --steps 1").exit_code == 2);
}

TEST_CASE("calibrate prints sigma to four decimals") {
  const CommandResult r =
      Run("calibrate --target-eps 3 --delta 1e-5 --q 0.04 --epochs 60");
  CHECK(r.exit_code == 0);
  const double sigma = std::strtod(r.out.c_str(), nullptr);
  CHECK(std::abs(sigma - 2.6) / 2.6 <= 0.15);
  // Exactly four decimal places.
  CHECK(r.out.find('.') == r.out.size() - 6);  // d.dddd\n
}

TEST_CASE("doubling the target epsilon lowers the calibrated sigma") {
  const double s3 = std::strtod(
      Run("calibrate --target-eps 3 --q 0.1 --epochs 60").out.c_str(),
      nullptr);
  const double s6 = std::strtod(
      Run("calibrate --target-eps 6 --q 0.1 --epochs 60").out.c_str(),
      nullptr);
  CHECK(s6 < s3);
}

TEST_CASE("unreachable calibration targets exit 3") {
  const CommandResult r =
      Run("calibrate --target-eps 1e-9 --q 0.5 --epochs 60");
  CHECK(r.exit_code == 3);
}

TEST_CASE("sweep writes the exact csv schema deterministically") {
  const std::string out_a = ScratchDir() + "/sweep_a.csv";
  const std::string out_b = ScratchDir() + "/sweep_b.csv";
  const std::string flags =
      "sweep --q-grid 0.04,0.16 --sigma-grid 2.6,5.2 --epochs 60 --delta "
      "1e-5 --out ";
  CHECK(Run(flags + out_a).exit_code == 0);
  CHECK(Run(flags + out_b).exit_code == 0);

  const std::string text = ReadFile(out_a);
  CHECK(text == ReadFile(out_b));  // byte-identical rerun
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# dp-noise-ledger v1");
  std::getline(in, line);
  CHECK(line == "q,sigma,steps,delta,epsilon,best_order");
  const auto rows = ParseCsv(text);
  REQUIRE(rows.size() == 5);  // header + 4 cells
  CHECK(rows[1][0] == "0.04");
  CHECK(rows[1][2] == "1500");
}

TEST_CASE("sweep propagates accountant values bit-exactly") {
  const std::string out = ScratchDir() + "/sweep_exact.csv";
  CHECK(Run("sweep --q-grid 0.1 --sigma-grid 3 --epochs 60 --out " + out)
            .exit_code == 0);
  const auto rows = ParseCsv(ReadFile(out));
  REQUIRE(rows.size() == 2);
  const double eps = std::strtod(rows[1][4].c_str(), nullptr);
  CHECK(eps == dpnl::EpsFor(0.1, 3.0, 600, 1e-5).eps);
}

TEST_CASE("sweep reports unwritable outputs with exit 4") {
  CHECK(Run("sweep --q-grid 0.1 --sigma-grid 3 --epochs 60 --out "
            "/dev/null/nope.csv")
            .exit_code == 4);
}

TEST_CASE("train writes metrics, echoes its config, and reruns identically") {
  const std::string out_dir = ScratchDir() + "/run_sgd";
  const std::string config = WriteTrainConfig(
      "sgd", "batch_mode = fixed\nbatch_size = 10\nseed = 4\nout_dir = " +
                 out_dir + "\n");
  const CommandResult first = Run("train --config " + config);
  CHECK(first.exit_code == 0);
  CHECK(first.out.find("final: step=30") != std::string::npos);

  const std::string metrics = ReadFile(out_dir + "/metrics.csv");
  std::istringstream in(metrics);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# dp-noise-ledger v1");
  std::getline(in, line);
  CHECK(line ==
        "step,epoch,eps_spent,train_loss,test_acc,inherent_noise,"
        "additive_noise,accounted_fraction");

  // sigma = 0: no epsilon is ever spent.
  for (const auto& row : ParseCsv(metrics)) {
    if (row[0] == "step") continue;
    CHECK(row[2] == "0");
  }

  const std::string echoed = ReadFile(out_dir + "/config_resolved.cfg");
  CHECK(echoed.find("batch_mode = fixed") != std::string::npos);
  CHECK(echoed.find("seed = 4") != std::string::npos);
  CHECK(echoed.find("delta = 1e-05") != std::string::npos);  // default echoed

  const CommandResult second = Run("train --config " + config);
  CHECK(second.exit_code == 0);
  CHECK(ReadFile(out_dir + "/metrics.csv") == metrics);
}

TEST_CASE("trained dp-sgd ledger matches the account subcommand exactly") {
  const std::string out_dir = ScratchDir() + "/run_dpsgd";
  const std::string config = WriteTrainConfig(
      "dpsgd",
      "batch_mode = poisson\nsampling_rate = 0.17\nclip = 1.0\nsigma = "
      "6.07\ndelta = 1e-5\nseed = 4\nout_dir = " +
          out_dir + "\n");
  CHECK(Run("train --config " + config).exit_code == 0);
  const auto rows = ParseCsv(ReadFile(out_dir + "/metrics.csv"));
  REQUIRE(rows.size() > 1);
  for (size_t i = 1; i < rows.size(); ++i) {
    const int64_t step = std::strtoll(rows[i][0].c_str(), nullptr, 10);
    const double eps_csv = std::strtod(rows[i][2].c_str(), nullptr);
    // Shortest round-trip formatting makes this an exact comparison.
    CHECK(eps_csv == dpnl::EpsFor(0.17, 6.07, step, 1e-5).eps);
  }
}

TEST_CASE("unknown config keys are rejected before any compute") {
  const std::string config = WriteTrainConfig(
      "unknown",
      "batch_mode = full\nout_dir = " + ScratchDir() +
          "/unused\nbatch_siez = 10\n");
  const CommandResult r = Run("train --config " + config);
  CHECK(r.exit_code == 2);
  CHECK(!std::filesystem::exists(ScratchDir() + "/unused"));
}

TEST_CASE("conflicting privacy configs exit 2") {
  const std::string config = WriteTrainConfig(
      "conflict", "batch_mode = fixed\nbatch_size = 10\nsigma = 1.0\nclip = "
                  "1.0\nout_dir = " +
                      ScratchDir() + "/unused2\n");
  CHECK(Run("train --config " + config).exit_code == 2);
}

TEST_CASE("noise report scales and asymptotics") {
  const std::string quiet = WriteTrainConfig(
      "quiet", "batch_mode = poisson\nsampling_rate = 0.2\nseed = 4\n");
  const CommandResult r0 = Run("noise-report --config " + quiet +
                               " --at-step 3");
  CHECK(r0.exit_code == 0);
  const nlohmann::json silent = nlohmann::json::parse(r0.out);
  CHECK(silent["accounted_fraction"].get<double>() == 0.0);
  CHECK(silent["context"]["clip"].is_null());
  CHECK(silent["context"]["step"].get<int64_t>() == 3);

  const std::string loud = WriteTrainConfig(
      "loud",
      "batch_mode = poisson\nsampling_rate = 0.2\nclip = 1.0\nsigma = "
      "1000\nseed = 4\n");
  const CommandResult r1 = Run("noise-report --config " + loud +
                               " --at-step 3");
  CHECK(r1.exit_code == 0);
  const nlohmann::json noisy = nlohmann::json::parse(r1.out);
  CHECK(noisy["accounted_fraction"].get<double>() > 0.99);
  CHECK(noisy["additive_scale"].get<double>() > 0.0);
}

TEST_CASE("noise report is deterministic given the seed") {
  const std::string config = WriteTrainConfig(
      "det",
      "batch_mode = poisson\nsampling_rate = 0.2\nclip = 1.0\nsigma = "
      "2.0\nseed = 4\n");
  const std::string a = Run("noise-report --config " + config +
                            " --at-step 5")
                            .out;
  const std::string b = Run("noise-report --config " + config +
                            " --at-step 5")
                            .out;
  CHECK(a == b);
}

TEST_CASE("matched iso-epsilon configs shift noise toward accounted") {
  // Two points on the same Fig.-2 contour: (q=0.04, sigma=2.6) and
  // (q=0.16, sigma=5.2). Reported at the same trained step, the
  // higher-(q, sigma) run shows a strictly higher accounted fraction. The
  // comparison needs genuinely trained models: at shared initialization the
  // fraction is invariant along an exact sqrt(q) contour.
  const auto contour_config = [&](const std::string& name, double q,
                                  double sigma) {
    const std::string path = ScratchDir() + "/" + name + ".cfg";
    std::ofstream out(path);
    out << "dataset = blobs\nblobs_n = 2000\nblobs_dim = 10\n"
        << "blobs_classes = 4\nblobs_spread = 0.45\nblobs_seed = 2\n"
        << "n_train = 1000\nn_test = 1000\nsplit_seed = 3\n"
        << "arch_hidden = 8\nlearning_rate = 0.5\nepochs = 12\n"
        << "batch_mode = poisson\nsampling_rate = " << q << "\n"
        << "clip = 1.0\nsigma = " << sigma << "\nseed = 4\n"
        << "eval_every = 60\n";
    return path;
  };
  const std::string low = contour_config("contour_low", 0.04, 2.6);
  const std::string high = contour_config("contour_high", 0.16, 5.2);
  const nlohmann::json a = nlohmann::json::parse(
      Run("noise-report --config " + low + " --at-step 60").out);
  const nlohmann::json b = nlohmann::json::parse(
      Run("noise-report --config " + high + " --at-step 60").out);
  CHECK(b["accounted_fraction"].get<double>() >
        a["accounted_fraction"].get<double>());
}

TEST_CASE("environment seed is a default that explicit seeds override") {
  const std::string no_seed = WriteTrainConfig(
      "env_seed", "batch_mode = full\nout_dir = " + ScratchDir() +
                      "/env_a\n");
  const CommandResult a =
      Run("train --config " + no_seed, "DP_LEDGER_SEED=5");
  const CommandResult b =
      Run("train --config " + no_seed, "DP_LEDGER_SEED=6");
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(ReadFile(ScratchDir() + "/env_a/config_resolved.cfg")
            .find("seed = 6") != std::string::npos);
  CHECK(a.out != b.out);  // different init, different trajectory

  const std::string with_seed = WriteTrainConfig(
      "env_seed2", "batch_mode = full\nseed = 4\nout_dir = " + ScratchDir() +
                       "/env_b\n");
  const CommandResult c =
      Run("train --config " + with_seed, "DP_LEDGER_SEED=5");
  const CommandResult d =
      Run("train --config " + with_seed, "DP_LEDGER_SEED=6");
  CHECK(c.out == d.out);  // explicit seed wins
}

TEST_CASE("missing subcommand or config file exits 2") {
  CHECK(Run("").exit_code == 2);
  CHECK(Run("train --config /nonexistent.cfg").exit_code == 2);
}
