/*
 * Copyright 2026 The fedsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedsel/config.hpp"
#include "fedsel/dataset.hpp"
#include "fedsel/errors.hpp"
#include "fedsel/fuzzy.hpp"
#include "fedsel/overhead.hpp"
#include "fedsel/partition.hpp"
#include "fedsel/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TauGrid {
  double first = 1.0, last = 120.0, step = 1.0;

  static TauGrid parse(const std::string& text) {
    TauGrid g;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &g.first, &g.last, &g.step, &tail) != 3) {
      throw UsageError("--tau-grid expects a:b:step, got '" + text + "'");
    }
    if (!(g.first > 0 && g.last >= g.first && g.step > 0)) {
      throw UsageError("--tau-grid needs 0 < a <= b and step > 0");
    }
    return g;
  }

  std::vector<double> values() const {
    std::vector<double> out;
    for (long k = 0;; ++k) {
      const double tau = first + static_cast<double>(k) * step;
      if (tau > last + 1e-9 * step) break;
      out.push_back(tau);
    }
    return out;
  }
};

std::string fixed6(double v) { return fedsel::format_fixed(v); }

int cmd_simulate(const std::string& config_path, const std::string& out_dir, const std::optional<std::uint64_t>& seed,
                 const std::optional<int>& rounds, const std::optional<std::string>& scheme,
                 const std::optional<int>& workers) {
  auto config = fedsel::SimConfig::from_file(config_path);
  if (seed) config.seed = *seed;
  if (rounds) config.rounds = *rounds;
  if (workers) config.workers = *workers;
  if (scheme) {
    const auto s = fedsel::selection::parse_scheme(*scheme);
    if (!s) throw UsageError("--scheme must be one of ccs-random, ccs-fuzzy, dcs");
    config.scheme = *s;
  }
  config.validate();
  const auto result = fedsel::run(config);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  fedsel::emit_csv(result.logs, dir / "rounds.csv");
  nlohmann::json summary = fedsel::to_json(result.summary);
  summary["config"] = config.to_json();
  std::ofstream js(dir / "summary.json");
  js << summary.dump(2) << '\n';
  if (!js) throw fedsel::Error("cannot write " + (dir / "summary.json").string());
  std::cout << "rounds=" << result.summary.rounds << " final_accuracy=" << fixed6(result.summary.final_accuracy)
            << " mean_selected=" << fixed6(result.summary.mean_selected) << '\n';
  return kExitOk;
}

int cmd_overhead(const std::string& name, const std::string& grid_text, bool unidirectional) {
  auto scenario = fedsel::overhead::preset(name);
  if (!scenario) {
    std::string known;
    for (const auto& n : fedsel::overhead::preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + name + "' (known: " + known + ")");
  }
  scenario->bidirectional_state = !unidirectional;
  const auto grid = TauGrid::parse(grid_text);
  using fedsel::selection::Scheme;
  std::cout << "tau_s,state_bytes,model_bytes,accumulated_time_ccs,accumulated_time_ccs_fuzzy,accumulated_time_dcs\n";
  for (double tau : grid.values()) {
    auto s = *scenario;
    s.tau_s = tau;
    std::cout << fixed6(tau) << ',' << fixed6(fedsel::overhead::state_overhead(s)) << ','
              << fixed6(fedsel::overhead::model_overhead(s)) << ','
              << fixed6(fedsel::overhead::accumulated_time(s, Scheme::kCcsRandom).total_s()) << ','
              << fixed6(fedsel::overhead::accumulated_time(s, Scheme::kCcsFuzzy).total_s()) << ','
              << fixed6(fedsel::overhead::accumulated_time(s, Scheme::kDcs).total_s()) << '\n';
  }
  return kExitOk;
}

int cmd_fuzzy_eval(const fedsel::fuzzy::Evaluator::Raw& raw, const fedsel::fuzzy::Evaluator::Raw& maxima,
                   const std::string& rule_path) {
  namespace fz = fedsel::fuzzy;
  fz::RuleBase rules = fz::default_rule_base();
  if (!rule_path.empty()) {
    std::ifstream in(rule_path);
    if (!in) throw fedsel::Error("cannot open rule base " + rule_path);
    rules = fz::RuleBase::from_text(in);
  }
  for (double v : raw) {
    if (!(v >= 0.0)) throw UsageError("fuzzy inputs must be nonnegative");
  }
  const auto e = fz::Evaluator(fz::default_families(), rules, maxima).evaluate(raw);
  std::cout << "score=" << fixed6(e.score) << " level=L" << e.level << '\n';
  return kExitOk;
}

int cmd_partition(const std::string& labels_path, int classes_per, const std::string& out, int vehicles,
                  const std::string& profile, int uniform_quantity, int classes, std::uint64_t seed) {
  const auto labels = fedsel::read_idx_labels(labels_path);
  fedsel::PartitionSpec spec;
  spec.classes = classes;
  spec.classes_per_vehicle = classes_per;
  const auto n = static_cast<std::size_t>(vehicles);
  if (profile == "table3") {
    spec.profile = fedsel::QuantityProfile::two_tier(n, std::min<std::size_t>(12, n), 4500, 45);
  } else {
    spec.profile = fedsel::QuantityProfile::uniform(n, static_cast<std::size_t>(uniform_quantity));
  }
  const auto manifest = fedsel::partition_noniid(labels, spec, seed);
  manifest.write(out);
  std::size_t total = 0;
  for (const auto& v : manifest.vehicles) total += v.size();
  std::cout << "vehicles=" << manifest.vehicles.size() << " samples=" << total << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning client-selection simulator for vehicular networks"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a simulation and write rounds.csv and summary.json");
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds, workers;
  std::optional<std::string> scheme;
  sim->add_option("--config", config_path, "JSON configuration file")->required();
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the seed");
  sim->add_option("--rounds", rounds, "Override the round count")->check(CLI::PositiveNumber);
  sim->add_option("--scheme", scheme, "ccs-random, ccs-fuzzy or dcs");
  sim->add_option("--workers", workers, "Client-training threads")->check(CLI::PositiveNumber);

  auto* ovh = app.add_subcommand("overhead", "Tabulate state/model overhead and accumulated time over tau");
  std::string preset, grid = "1:120:1";
  bool unidirectional = false;
  ovh->add_option("--preset", preset, "gboard-ccs, gboard-fuzzy or tokyo")->required();
  ovh->add_option("--tau-grid", grid, "a:b:step in seconds")->capture_default_str();
  ovh->add_flag("--unidirectional", unidirectional, "Count state transfer in one direction only");

  auto* fz = app.add_subcommand("fuzzy-eval", "Score one vehicle with the fuzzy evaluator");
  fedsel::fuzzy::Evaluator::Raw raw{}, maxima{4500.0, 10.4, 1.0, std::numbers::ln10};
  std::string rule_path;
  fz->add_option("--sq", raw[0], "Sample quantity")->required();
  fz->add_option("--ta", raw[1], "Available throughput (Mbps)")->required();
  fz->add_option("--cc", raw[2], "Computational capability ratio")->required();
  fz->add_option("--lf", raw[3], "Loss")->required();
  fz->add_option("--max-sq", maxima[0], "Normalization maximum for SQ")->capture_default_str()->check(CLI::PositiveNumber);
  fz->add_option("--max-ta", maxima[1], "Normalization maximum for TA")->capture_default_str()->check(CLI::PositiveNumber);
  fz->add_option("--max-cc", maxima[2], "Normalization maximum for CC")->capture_default_str()->check(CLI::PositiveNumber);
  fz->add_option("--max-lf", maxima[3], "Normalization maximum for LF")->capture_default_str()->check(CLI::PositiveNumber);
  fz->add_option("--rule-base", rule_path, "81-line rule table (default: built-in)");

  auto* part = app.add_subcommand("partition", "Write a non-i.i.d. partition manifest for an IDX label file");
  std::string dataset, out_file, profile = "table3";
  int classes_per = 9, vehicles = 30, uniform_quantity = 1000, classes = 10;
  std::uint64_t part_seed = 1;
  part->add_option("--dataset", dataset, "IDX label file")->required();
  part->add_option("--classes-per", classes_per, "Classes per vehicle")->required()->check(CLI::PositiveNumber);
  part->add_option("--out", out_file, "Manifest CSV path")->required();
  part->add_option("--vehicles", vehicles, "Vehicle count")->capture_default_str()->check(CLI::PositiveNumber);
  part->add_option("--profile", profile, "table3 or uniform")->capture_default_str()->check(
      CLI::IsMember({"table3", "uniform"}));
  part->add_option("--uniform-quantity", uniform_quantity, "Samples per vehicle for the uniform profile")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  part->add_option("--classes", classes, "Class count")->capture_default_str()->check(CLI::PositiveNumber);
  part->add_option("--seed", part_seed, "Seed")->capture_default_str();

  auto* rules = app.add_subcommand("rules", "Print the built-in 81-rule table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed, rounds, scheme, workers);
    if (ovh->parsed()) return cmd_overhead(preset, grid, unidirectional);
    if (fz->parsed()) return cmd_fuzzy_eval(raw, maxima, rule_path);
    if (part->parsed()) {
      return cmd_partition(dataset, classes_per, out_file, vehicles, profile, uniform_quantity, classes, part_seed);
    }
    if (rules->parsed()) {
      std::cout << fedsel::fuzzy::default_rule_base().to_text();
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
