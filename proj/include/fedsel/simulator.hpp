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

// Per-round event loop: mobility, broadcast, evaluation, selection, local
// training, MAX C/I uplink under a deadline, aggregation and test accuracy.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/dataset.hpp"
#include "fedsel/errors.hpp"
#include "fedsel/fl.hpp"
#include "fedsel/fuzzy.hpp"
#include "fedsel/mobility.hpp"
#include "fedsel/model.hpp"
#include "fedsel/net.hpp"
#include "fedsel/partition.hpp"
#include "fedsel/rng.hpp"
#include "fedsel/selection.hpp"

namespace fedsel {

struct RoundLog {
  int round = 0;
  double accuracy = 0.0;
  double global_loss = std::numeric_limits<double>::quiet_NaN();  // NaN when nothing arrived
  std::vector<int> selected;
  std::vector<int> uploaded;
  std::vector<int> dropped;
  double bytes_up = 0.0;
  double time_s = 0.0;
};

struct RunSummary {
  int rounds = 0;
  double final_accuracy = 0.0;
  double mean_selected = 0.0;
  double mean_uploaded = 0.0;
  std::size_t total_selected = 0;
  std::size_t total_uploaded = 0;
  std::size_t total_dropped = 0;
  double total_bytes_up = 0.0;
  double total_time_s = 0.0;

  static RunSummary from_logs(const std::vector<RoundLog>& logs) {
    RunSummary s;
    s.rounds = static_cast<int>(logs.size());
    for (const auto& l : logs) {
      s.total_selected += l.selected.size();
      s.total_uploaded += l.uploaded.size();
      s.total_dropped += l.dropped.size();
      s.total_bytes_up += l.bytes_up;
      s.total_time_s += l.time_s;
    }
    if (!logs.empty()) {
      s.final_accuracy = logs.back().accuracy;
      s.mean_selected = static_cast<double>(s.total_selected) / static_cast<double>(logs.size());
      s.mean_uploaded = static_cast<double>(s.total_uploaded) / static_cast<double>(logs.size());
    }
    return s;
  }
};

// Every piece of vehicle-originated data that reaches the server.
struct FlowEvent {
  enum class Item { kState, kEvaluation, kModel };
  int round = 0;
  Item item = Item::kModel;
  int vehicle = 0;
};

class AuditLog {
 public:
  void record(int round, FlowEvent::Item item, int vehicle) { events_.push_back({round, item, vehicle}); }
  const std::vector<FlowEvent>& events() const noexcept { return events_; }
  std::size_t count(FlowEvent::Item item) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const FlowEvent& e) { return e.item == item; }));
  }

 private:
  std::vector<FlowEvent> events_;
};

// The server's only inbound channels.
class Server {
 public:
  explicit Server(AuditLog& audit) : audit_(audit) {}

  void receive_state(int round, int vehicle) { audit_.record(round, FlowEvent::Item::kState, vehicle); }

  void receive_evaluation(int round, int vehicle, double score) {
    audit_.record(round, FlowEvent::Item::kEvaluation, vehicle);
    evaluations_[vehicle] = score;
  }

  void receive_model(int round, int vehicle, std::span<const double> params, std::size_t samples) {
    audit_.record(round, FlowEvent::Item::kModel, vehicle);
    contributions_.push_back({params, samples});
  }

  const std::map<int, double>& evaluations() const noexcept { return evaluations_; }
  const std::vector<Contribution>& contributions() const noexcept { return contributions_; }

  void reset() {
    evaluations_.clear();
    contributions_.clear();
  }

 private:
  AuditLog& audit_;
  std::map<int, double> evaluations_;
  std::vector<Contribution> contributions_;
};

struct SimData {
  std::shared_ptr<const Dataset> train;
  Dataset test;
  PartitionManifest manifest;
};

inline QuantityProfile quantity_profile(const SimConfig& c) {
  const auto n = static_cast<std::size_t>(c.vehicles);
  if (c.quantity_profile == "uniform") return QuantityProfile::uniform(n, static_cast<std::size_t>(c.uniform_quantity));
  return QuantityProfile::two_tier(n, static_cast<std::size_t>(std::min(c.big_vehicles, c.vehicles)),
                                   static_cast<std::size_t>(c.big_quantity), static_cast<std::size_t>(c.small_quantity));
}

inline SimData load_data(const SimConfig& c) {
  SimData out;
  if (c.dataset == "idx") {
    out.train = std::make_shared<const Dataset>(read_idx(c.train_images, c.train_labels, c.classes));
    out.test = read_idx(c.test_images, c.test_labels, c.classes);
  } else {
    BlobSpec spec{c.classes,
                  static_cast<std::size_t>(c.synthetic_train_per_class + c.synthetic_test_per_class),
                  c.synthetic_dim, c.synthetic_separation, c.synthetic_noise};
    auto [train, test] = train_test_split(synthetic_blobs(spec, c.seed),
                                          static_cast<std::size_t>(c.synthetic_test_per_class));
    out.train = std::make_shared<const Dataset>(std::move(train));
    out.test = std::move(test);
  }
  if (!c.partition_manifest.empty()) {
    std::ifstream in(c.partition_manifest);
    if (!in) throw Error("cannot open partition manifest " + c.partition_manifest);
    out.manifest = PartitionManifest::from_csv(in);
    if (out.manifest.vehicles.size() != static_cast<std::size_t>(c.vehicles)) {
      throw ConfigError("partition_manifest", "manifest covers " + std::to_string(out.manifest.vehicles.size()) +
                                                  " vehicles, config has " + std::to_string(c.vehicles));
    }
  } else {
    PartitionSpec spec{c.classes, c.classes_per_vehicle, quantity_profile(c)};
    out.manifest = partition_noniid(out.train->labels, spec, c.seed);
  }
  for (std::size_t v = 0; v < out.manifest.vehicles.size(); ++v) {
    if (out.manifest.vehicles[v].empty()) throw Error("vehicle " + std::to_string(v) + " holds no samples");
  }
  return out;
}

inline ModelSpec model_spec(const SimConfig& c, const Dataset& d) {
  if (c.model == "cnn") {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d.dim))));
    if (side * side != d.dim) throw ConfigError("model", "cnn needs square single-channel inputs");
    return ModelSpec::cnn(side, side, 1, 32, 64, 5, 512, d.classes);
  }
  return ModelSpec::mlp(d.dim, c.hidden, d.classes);
}

// Runs fn(0..n-1) on up to `workers` threads. The first failing index (in
// index order) has its exception rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct RunResult {
  std::vector<RoundLog> logs;
  RunSummary summary;
  AuditLog audit;
  ParamVector final_params;
};

class Simulator {
 public:
  Simulator(SimConfig config, SimData data) : cfg_(std::move(config)), data_(std::move(data)) {
    cfg_.validate();
    if (data_.manifest.vehicles.size() != static_cast<std::size_t>(cfg_.vehicles)) {
      throw ConfigError("vehicles", "partition covers " + std::to_string(data_.manifest.vehicles.size()) + " vehicles");
    }
    model_ = make_model(model_spec(cfg_, *data_.train));
    road_ = {cfg_.road_length_m, cfg_.dsrc_range_m};
    road_.validate();
    stations_ = std::make_unique<net::BaseStations>(cfg_.road_length_m, cfg_.bs_count);
    const double radius = net::McsTable::coverage_radius_for(cfg_.road_length_m, cfg_.bs_count, cfg_.coverage_overlap);
    mcs_ = std::make_unique<net::McsTable>(cfg_.mcs_tiers.empty() ? net::McsTable::geometric(radius)
                                                                  : net::McsTable(cfg_.mcs_tiers, radius));
    evaluator_ = std::make_unique<fuzzy::Evaluator>(families(), rules(),
                                                    fuzzy::Evaluator::Raw{cfg_.max_sample_quantity, cfg_.max_throughput_mbps,
                                                                          cfg_.max_compute, cfg_.max_loss});
    model_bytes_ = cfg_.model_bytes > 0 ? cfg_.model_bytes : static_cast<double>(model_->param_count()) * 4.0;
  }

  const Model& model() const { return *model_; }
  double model_bytes() const noexcept { return model_bytes_; }

  RunResult run() {
    RunResult result;
    Server server(result.audit);
    const auto n = static_cast<std::size_t>(cfg_.vehicles);
    const std::uint64_t seed = cfg_.seed;

    std::vector<LocalDataset> local;
    for (const auto& idx : data_.manifest.vehicles) local.emplace_back(data_.train, idx);
    std::vector<double> compute(n);
    {
      Rng rng(seed, Stream::kCompute);
      for (double& c : compute) c = rng.uniform(cfg_.compute_min, cfg_.compute_max);
    }
    std::vector<net::ThroughputPredictor> predictors(
        n, net::ThroughputPredictor(static_cast<std::size_t>(cfg_.predictor_window)));

    ParamVector global = model_->init(stream_seed(seed, static_cast<std::uint64_t>(Stream::kInit)));
    std::vector<mobility::VehicleKinematics> cars = initial_kinematics(global, local, compute, predictors);

    std::vector<selection::EvalTable> tables;
    for (std::size_t i = 0; i < n; ++i) tables.emplace_back(static_cast<int>(i));
    const selection::DcsParams dcs{cfg_.threshold, static_cast<std::size_t>(cfg_.top_m), cfg_.table_expiry_rounds};
    const Hyperparams hyper{cfg_.learning_rate, cfg_.batch_size, cfg_.epochs};

    for (int round = 1; round <= cfg_.rounds; ++round) {
      server.reset();
      if (round > 1) {
        for (auto& k : cars) k = mobility::step(k, cfg_.deadline_s, road_);
      }
      std::vector<double> pos(n);
      for (std::size_t i = 0; i < n; ++i) pos[i] = cars[i].position;

      // Broadcast: every vehicle downloads the global model and logs the
      // achieved downlink throughput.
      std::vector<net::BaseStations::Attachment> attach(n);
      for (std::size_t i = 0; i < n; ++i) {
        attach[i] = stations_->nearest(pos[i]);
        predictors[i].observe(mcs_->capacity(attach[i].distance));
      }

      std::vector<double> scores;
      if (cfg_.scheme != selection::Scheme::kCcsRandom) {
        scores = evaluate_all(global, local, compute, predictors);
      }

      selection::SelectionOutcome chosen;
      double selection_delay = 0.0;
      switch (cfg_.scheme) {
        case selection::Scheme::kCcsRandom: {
          std::vector<int> ids(n);
          for (std::size_t i = 0; i < n; ++i) {
            ids[i] = static_cast<int>(i);
            server.receive_state(round, ids[i]);
          }
          chosen = selection::select_ccs_random(
              ids, static_cast<std::size_t>(cfg_.clients_per_round),
              stream_seed(seed, static_cast<std::uint64_t>(Stream::kSelection), static_cast<std::uint64_t>(round)));
          selection_delay = cfg_.latency_cloud_s;
          break;
        }
        case selection::Scheme::kCcsFuzzy: {
          for (std::size_t i = 0; i < n; ++i) server.receive_evaluation(round, static_cast<int>(i), scores[i]);
          chosen = selection::select_ccs_fuzzy(server.evaluations(), static_cast<std::size_t>(cfg_.clients_per_round));
          selection_delay = 2.0 * cfg_.latency_cloud_s;
          break;
        }
        case selection::Scheme::kDcs: {
          std::vector<std::vector<int>> nbrs(n);
          for (std::size_t i = 0; i < n; ++i) nbrs[i] = mobility::neighbors(pos, i, road_.dsrc_range, road_.length);
          selection::broadcast_evaluations(tables, scores, nbrs, round, dcs);
          chosen = selection::dcs_round(tables, scores, dcs);
          selection_delay = cfg_.latency_dsrc_s;
          break;
        }
      }

      RoundLog log;
      log.round = round;
      log.selected = chosen.clients;
      const double start = cfg_.broadcast_time_s + selection_delay;

      // Uplink timing does not depend on the trained weights, so stragglers
      // are identified before any training is spent on them.
      std::vector<std::vector<net::UplinkJob>> per_bs(static_cast<std::size_t>(stations_->count()));
      std::vector<int> unreachable;
      for (int id : chosen.clients) {
        const auto v = static_cast<std::size_t>(id);
        net::TrainingTimeInputs t{cfg_.timing_epochs, compute[v], local[v].size(), cfg_.batch_size, cfg_.batch_exec_s};
        const double train_s = cfg_.literal_training_time ? net::training_time_literal(t) : net::training_time(t);
        const int tier = mcs_->tier(attach[v].distance);
        const double rate = mcs_->tier_rate(tier);
        if (!(rate > 0.0)) {
          unreachable.push_back(id);
          continue;
        }
        per_bs[static_cast<std::size_t>(attach[v].station)].push_back(
            {id, mcs_->mcs_index(attach[v].distance), start + train_s, model_bytes_, rate});
      }
      std::map<int, net::UplinkOutcome> outcomes;
      for (const auto& jobs : per_bs) {
        for (const auto& o : net::simulate_max_ci(jobs, cfg_.latency_cloud_s)) outcomes[o.id] = o;
      }
      double last = start;
      for (int id : chosen.clients) {
        auto it = outcomes.find(id);
        if (it != outcomes.end() && it->second.completion <= cfg_.deadline_s) {
          log.uploaded.push_back(id);
          last = std::max(last, it->second.completion);
          predictors[static_cast<std::size_t>(id)].observe(it->second.achieved_mbps);
        } else {
          log.dropped.push_back(id);
        }
      }
      log.time_s = log.dropped.empty() ? last : cfg_.deadline_s;

      std::vector<TrainResult> trained(log.uploaded.size());
      parallel_for(log.uploaded.size(), cfg_.workers, [&](std::size_t k) {
        const auto v = static_cast<std::size_t>(log.uploaded[k]);
        trained[k] = local_train(*model_, global, local[v], hyper,
                                     stream_seed(stream_seed(seed, static_cast<std::uint64_t>(Stream::kTraining)),
                                                 static_cast<std::uint64_t>(round), v));
      });

      std::vector<LossShare> losses;
      for (std::size_t k = 0; k < trained.size(); ++k) {
        server.receive_model(round, log.uploaded[k], trained[k].params, trained[k].report.samples);
        losses.push_back({trained[k].report.post_loss, trained[k].report.samples});
        log.bytes_up += model_bytes_;
      }
      if (!server.contributions().empty()) {
        global = fedavg(server.contributions());
        log.global_loss = global_loss(losses);
      }
      log.accuracy = accuracy(*model_, global, data_.test);
      result.logs.push_back(std::move(log));
    }
    result.summary = RunSummary::from_logs(result.logs);
    result.final_params = std::move(global);
    return result;
  }

 private:
  fuzzy::Families families() const {
    fuzzy::Families f{fuzzy::MembershipFamily::from_mean(cfg_.membership_means[0]),
                      fuzzy::MembershipFamily::from_mean(cfg_.membership_means[1]),
                      fuzzy::MembershipFamily::from_mean(cfg_.membership_means[2]),
                      fuzzy::MembershipFamily::from_mean(cfg_.membership_means[3])};
    return f;
  }

  fuzzy::RuleBase rules() const {
    if (cfg_.rule_base.empty()) return fuzzy::default_rule_base();
    std::ifstream in(cfg_.rule_base);
    if (!in) throw Error("cannot open rule base " + cfg_.rule_base);
    try {
      return fuzzy::RuleBase::from_text(in);
    } catch (const Error& e) {
      throw ConfigError("rule_base", e.what());
    }
  }

  std::vector<double> evaluate_all(const ParamVector& global, const std::vector<LocalDataset>& local,
                                   const std::vector<double>& compute,
                                   const std::vector<net::ThroughputPredictor>& predictors) const {
    std::vector<double> scores(local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
      const double loss = loss_pass(*model_, global, local[i]);
      scores[i] = evaluator_
                      ->evaluate({static_cast<double>(local[i].size()), predictors[i].predict(), compute[i], loss})
                      .score;
    }
    return scores;
  }

  // Extreme placement needs an initial ranking; the whole fleet then drives
  // at one common speed so the two clusters keep their shape.
  std::vector<mobility::VehicleKinematics> initial_kinematics(const ParamVector& global,
                                                              const std::vector<LocalDataset>& local,
                                                              const std::vector<double>& compute,
                                                              const std::vector<net::ThroughputPredictor>& predictors) const {
    const auto n = local.size();
    mobility::PlacementPolicy policy;
    policy.cluster_window = cfg_.cluster_window_m;
    std::vector<int> rank(n, 0);
    std::vector<double> speeds;
    if (cfg_.placement == "extreme") {
      policy.kind = mobility::PlacementPolicy::Kind::kExtreme;
      const auto scores = evaluate_all(global, local, compute, predictors);
      std::map<int, double> by_id;
      for (std::size_t i = 0; i < n; ++i) by_id[static_cast<int>(i)] = scores[i];
      const auto order = selection::top_n(by_id, n);
      for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r);
      speeds.assign(n, mobility::init_speeds(1, cfg_.speed_min_mps, cfg_.speed_max_mps, cfg_.seed)[0]);
    } else {
      speeds = mobility::init_speeds(n, cfg_.speed_min_mps, cfg_.speed_max_mps, cfg_.seed);
    }
    const auto pos = mobility::init_placement(road_, policy, rank, n, cfg_.seed);
    std::vector<mobility::VehicleKinematics> cars(n);
    for (std::size_t i = 0; i < n; ++i) cars[i] = {pos[i], speeds[i]};
    return cars;
  }

  SimConfig cfg_;
  SimData data_;
  std::unique_ptr<Model> model_;
  mobility::RoadConfig road_;
  std::unique_ptr<net::BaseStations> stations_;
  std::unique_ptr<net::McsTable> mcs_;
  std::unique_ptr<fuzzy::Evaluator> evaluator_;
  double model_bytes_ = 0.0;
};

inline RunResult run(const SimConfig& config) { return Simulator(config, load_data(config)).run(); }

inline std::string format_fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(ids[i]);
  }
  return s;
}

inline constexpr const char* kRoundCsvHeader =
    "round,accuracy,global_loss,n_selected,n_uploaded,n_dropped,bytes_up,selected_ids";

inline std::string to_csv(const std::vector<RoundLog>& logs) {
  std::ostringstream out;
  out << kRoundCsvHeader << '\n';
  for (const auto& l : logs) {
    out << l.round << ',' << format_fixed(l.accuracy) << ',' << format_fixed(l.global_loss) << ','
        << l.selected.size() << ',' << l.uploaded.size() << ',' << l.dropped.size() << ','
        << format_fixed(l.bytes_up) << ',' << join_ids(l.selected) << '\n';
  }
  return out.str();
}

inline void emit_csv(const std::vector<RoundLog>& logs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_csv(logs);
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

inline nlohmann::json to_json(const RunSummary& s) {
  return {{"rounds", s.rounds},
          {"final_accuracy", s.final_accuracy},
          {"mean_selected", s.mean_selected},
          {"mean_uploaded", s.mean_uploaded},
          {"total_selected", s.total_selected},
          {"total_uploaded", s.total_uploaded},
          {"total_dropped", s.total_dropped},
          {"total_bytes_up", s.total_bytes_up},
          {"total_time_s", s.total_time_s}};
}

}  // namespace fedsel
