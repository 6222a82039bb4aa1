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

// Simulation configuration: a flat JSON object. Every key is optional and
// falls back to the desk-scale defaults below; unknown keys are rejected.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsel/errors.hpp"
#include "fedsel/selection.hpp"

namespace fedsel {

struct SimConfig {
  selection::Scheme scheme = selection::Scheme::kDcs;
  int rounds = 100;
  int vehicles = 30;
  std::uint64_t seed = 1;
  int workers = 1;

  // mobility
  double road_length_m = 1000.0;
  double dsrc_range_m = 200.0;
  std::string placement = "uniform";
  double cluster_window_m = 200.0;
  double speed_min_mps = 10.0;
  double speed_max_mps = 30.0;

  // network
  int bs_count = 2;
  std::vector<double> mcs_tiers;  // empty: 8 geometric tiers 10.4 .. 0.24 Mbps
  double coverage_overlap = 1.2;
  double latency_cloud_s = 0.2;
  double latency_dsrc_s = 0.04;
  double broadcast_time_s = 0.2;
  int predictor_window = 16;
  double deadline_s = 20.0;

  // model and training
  std::string model = "mlp";
  std::vector<int> hidden{64};
  double learning_rate = 0.01;
  int batch_size = 20;
  int epochs = 1;
  int timing_epochs = 1;
  double batch_exec_s = 0.06;
  bool literal_training_time = false;
  double compute_min = 0.5;
  double compute_max = 1.0;
  double model_bytes = 0.0;  // 0: parameter count * 4

  // data
  std::string dataset = "synthetic";
  std::string train_images, train_labels, test_images, test_labels;
  int classes = 10;
  int synthetic_dim = 784;
  int synthetic_train_per_class = 6200;
  int synthetic_test_per_class = 500;
  double synthetic_separation = 1.0;
  double synthetic_noise = 1.0;
  int classes_per_vehicle = 9;
  std::string quantity_profile = "table3";
  int big_vehicles = 12;
  int big_quantity = 4500;
  int small_quantity = 45;
  int uniform_quantity = 1000;
  std::string partition_manifest;

  // selection and evaluator
  int clients_per_round = 5;
  double threshold = 37.5;
  int top_m = 2;
  int table_expiry_rounds = 1;
  std::string rule_base;
  std::array<double, 4> membership_means{0.5, 0.5, 0.5, 0.5};
  double max_sample_quantity = 4500.0;
  double max_throughput_mbps = 10.4;
  double max_compute = 1.0;
  double max_loss = std::numbers::ln10;

  static SimConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static SimConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

namespace detail {

class KeyReader {
 public:
  explicit KeyReader(const nlohmann::json& j) : j_(j) {
    if (!j_.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(key, "expected a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ConfigError(key, "expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError(key, "expected an integer");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(key, "expected a string");
      }
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(k, "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::set<std::string> seen_;
};

template <typename Visitor>
void visit_keys(SimConfig& c, std::string& scheme, Visitor&& v) {
  v("scheme", scheme);
  v("rounds", c.rounds);
  v("vehicles", c.vehicles);
  v("seed", c.seed);
  v("workers", c.workers);
  v("road_length_m", c.road_length_m);
  v("dsrc_range_m", c.dsrc_range_m);
  v("placement", c.placement);
  v("cluster_window_m", c.cluster_window_m);
  v("speed_min_mps", c.speed_min_mps);
  v("speed_max_mps", c.speed_max_mps);
  v("bs_count", c.bs_count);
  v("mcs_tiers", c.mcs_tiers);
  v("coverage_overlap", c.coverage_overlap);
  v("latency_cloud_s", c.latency_cloud_s);
  v("latency_dsrc_s", c.latency_dsrc_s);
  v("broadcast_time_s", c.broadcast_time_s);
  v("predictor_window", c.predictor_window);
  v("deadline_s", c.deadline_s);
  v("model", c.model);
  v("hidden", c.hidden);
  v("learning_rate", c.learning_rate);
  v("batch_size", c.batch_size);
  v("epochs", c.epochs);
  v("timing_epochs", c.timing_epochs);
  v("batch_exec_s", c.batch_exec_s);
  v("literal_training_time", c.literal_training_time);
  v("compute_min", c.compute_min);
  v("compute_max", c.compute_max);
  v("model_bytes", c.model_bytes);
  v("dataset", c.dataset);
  v("train_images", c.train_images);
  v("train_labels", c.train_labels);
  v("test_images", c.test_images);
  v("test_labels", c.test_labels);
  v("classes", c.classes);
  v("synthetic_dim", c.synthetic_dim);
  v("synthetic_train_per_class", c.synthetic_train_per_class);
  v("synthetic_test_per_class", c.synthetic_test_per_class);
  v("synthetic_separation", c.synthetic_separation);
  v("synthetic_noise", c.synthetic_noise);
  v("classes_per_vehicle", c.classes_per_vehicle);
  v("quantity_profile", c.quantity_profile);
  v("big_vehicles", c.big_vehicles);
  v("big_quantity", c.big_quantity);
  v("small_quantity", c.small_quantity);
  v("uniform_quantity", c.uniform_quantity);
  v("partition_manifest", c.partition_manifest);
  v("clients_per_round", c.clients_per_round);
  v("threshold", c.threshold);
  v("top_m", c.top_m);
  v("table_expiry_rounds", c.table_expiry_rounds);
  v("rule_base", c.rule_base);
  v("membership_means", c.membership_means);
  v("max_sample_quantity", c.max_sample_quantity);
  v("max_throughput_mbps", c.max_throughput_mbps);
  v("max_compute", c.max_compute);
  v("max_loss", c.max_loss);
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace detail

inline SimConfig SimConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SimConfig c;
  std::string scheme = selection::to_string(c.scheme);
  detail::KeyReader reader(j);
  detail::visit_keys(c, scheme, [&](const std::string& key, auto& field) { reader.read(key, field); });
  reader.reject_unknown();
  const auto parsed = selection::parse_scheme(scheme);
  if (!parsed) throw ConfigError("scheme", "expected one of ccs-random, ccs-fuzzy, dcs");
  c.scheme = *parsed;
  if (!base_dir.empty()) {
    for (std::string* p : {&c.train_images, &c.train_labels, &c.test_images, &c.test_labels,
                           &c.partition_manifest, &c.rule_base}) {
      if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base_dir / *p).string();
    }
  }
  c.validate();
  return c;
}

inline SimConfig SimConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

inline nlohmann::json SimConfig::to_json() const {
  nlohmann::json j;
  SimConfig copy = *this;
  std::string scheme_name = selection::to_string(scheme);
  detail::visit_keys(copy, scheme_name, [&](const std::string& key, auto& field) { j[key] = field; });
  return j;
}

inline void SimConfig::validate() const {
  using detail::require;
  require(rounds > 0, "rounds", "must be positive");
  require(vehicles > 0, "vehicles", "must be positive");
  require(workers > 0, "workers", "must be positive");
  require(road_length_m > 0, "road_length_m", "must be positive");
  require(dsrc_range_m > 0 && dsrc_range_m <= road_length_m, "dsrc_range_m", "must lie in (0, road_length_m]");
  require(placement == "uniform" || placement == "extreme", "placement", "expected uniform or extreme");
  require(cluster_window_m > 0 && cluster_window_m <= road_length_m / 2, "cluster_window_m",
          "must lie in (0, road_length_m / 2]");
  require(speed_min_mps > 0 && speed_max_mps >= speed_min_mps, "speed_max_mps", "need 0 < speed_min_mps <= speed_max_mps");
  require(bs_count > 0, "bs_count", "must be positive");
  for (std::size_t i = 0; i < mcs_tiers.size(); ++i) {
    require(mcs_tiers[i] > 0 && (i == 0 || mcs_tiers[i] <= mcs_tiers[i - 1]), "mcs_tiers",
            "rates must be positive and non-increasing");
  }
  require(coverage_overlap > 0, "coverage_overlap", "must be positive");
  require(latency_cloud_s >= 0, "latency_cloud_s", "must be nonnegative");
  require(latency_dsrc_s >= 0, "latency_dsrc_s", "must be nonnegative");
  require(broadcast_time_s >= 0, "broadcast_time_s", "must be nonnegative");
  require(predictor_window > 0, "predictor_window", "must be positive");
  require(deadline_s > 0, "deadline_s", "must be positive");
  require(model == "mlp" || model == "cnn", "model", "expected mlp or cnn");
  for (int h : hidden) require(h > 0, "hidden", "layer widths must be positive");
  require(learning_rate >= 0, "learning_rate", "must be nonnegative");
  require(batch_size > 0, "batch_size", "must be positive");
  require(epochs > 0, "epochs", "must be positive");
  require(timing_epochs > 0, "timing_epochs", "must be positive");
  require(batch_exec_s > 0, "batch_exec_s", "must be positive");
  require(compute_min > 0 && compute_max >= compute_min, "compute_max", "need 0 < compute_min <= compute_max");
  require(model_bytes >= 0, "model_bytes", "must be nonnegative");
  require(dataset == "synthetic" || dataset == "idx", "dataset", "expected synthetic or idx");
  if (dataset == "idx") {
    for (const auto& [key, path] : {std::pair{"train_images", train_images}, {"train_labels", train_labels},
                                    {"test_images", test_images}, {"test_labels", test_labels}}) {
      require(!path.empty(), key, "required when dataset is idx");
      require(std::filesystem::exists(path), key, "file not found: " + path);
    }
  }
  require(classes > 1, "classes", "must be at least 2");
  require(synthetic_dim > 0, "synthetic_dim", "must be positive");
  require(synthetic_train_per_class > 0, "synthetic_train_per_class", "must be positive");
  require(synthetic_test_per_class > 0, "synthetic_test_per_class", "must be positive");
  require(synthetic_separation > 0, "synthetic_separation", "must be positive");
  require(synthetic_noise >= 0, "synthetic_noise", "must be nonnegative");
  require(classes_per_vehicle >= 1 && classes_per_vehicle <= classes, "classes_per_vehicle",
          "must lie in [1, classes]");
  require(quantity_profile == "table3" || quantity_profile == "uniform", "quantity_profile",
          "expected table3 or uniform");
  require(big_vehicles >= 0, "big_vehicles", "must be nonnegative");
  require(big_quantity > 0, "big_quantity", "must be positive");
  require(small_quantity > 0, "small_quantity", "must be positive");
  require(uniform_quantity > 0, "uniform_quantity", "must be positive");
  if (!partition_manifest.empty()) {
    require(std::filesystem::exists(partition_manifest), "partition_manifest", "file not found: " + partition_manifest);
  }
  require(clients_per_round >= 0, "clients_per_round", "must be nonnegative");
  require(threshold >= 0 && threshold <= 100, "threshold", "must lie in [0, 100]");
  require(top_m >= 1, "top_m", "must be at least 1");
  require(table_expiry_rounds >= 1, "table_expiry_rounds", "must be at least 1");
  if (!rule_base.empty()) {
    require(std::filesystem::exists(rule_base), "rule_base", "file not found: " + rule_base);
  }
  for (double m : membership_means) require(m > 0 && m < 1, "membership_means", "each mean must lie in (0, 1)");
  require(max_sample_quantity > 0, "max_sample_quantity", "must be positive");
  require(max_throughput_mbps > 0, "max_throughput_mbps", "must be positive");
  require(max_compute > 0, "max_compute", "must be positive");
  require(max_loss > 0, "max_loss", "must be positive");
}

}  // namespace fedsel
