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

// Cellular link model: distance-tiered MCS capacity, CWND-style throughput
// prediction, MAX C/I uplink scheduling and transfer/training times.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "fedsel/errors.hpp"

namespace fedsel::net {

inline constexpr double kBestMbps = 10.4;
inline constexpr double kWorstMbps = 0.24;

// Piecewise-constant capacity by distance to the serving base station. Tier 0
// (highest MCS) covers the nearest band; breakpoints are uniform over the
// coverage radius and anything beyond falls into the last tier.
class McsTable {
 public:
  McsTable(std::vector<double> rates_mbps, double coverage_radius)
      : rates_(std::move(rates_mbps)), radius_(coverage_radius) {
    if (rates_.empty()) throw InvalidArgument("mcs table needs at least one tier");
    if (!(radius_ > 0.0)) throw InvalidArgument("coverage radius must be positive");
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      if (!(rates_[i] > 0.0)) throw InvalidArgument("mcs tier rates must be positive");
      if (i > 0 && rates_[i] > rates_[i - 1]) throw InvalidArgument("mcs tier rates must not increase");
    }
  }

  // `tiers` rates geometric from best to worst.
  static McsTable geometric(double coverage_radius, int tiers = 8, double best = kBestMbps,
                            double worst = kWorstMbps) {
    std::vector<double> r(static_cast<std::size_t>(tiers));
    for (int k = 0; k < tiers; ++k) {
      r[static_cast<std::size_t>(k)] = tiers == 1 ? best : best * std::pow(worst / best, double(k) / (tiers - 1));
    }
    r.back() = tiers == 1 ? best : worst;
    return McsTable(std::move(r), coverage_radius);
  }

  static double coverage_radius_for(double road_length, int bs_count, double overlap = 1.2) {
    return road_length / bs_count / 2.0 * overlap;
  }

  int tiers() const { return static_cast<int>(rates_.size()); }

  int tier(double distance) const {
    if (!(distance >= 0.0)) throw InvalidArgument("distance must be nonnegative");
    const double band = radius_ / tiers();
    const double t = std::floor(distance / band);
    return t >= tiers() - 1 ? tiers() - 1 : static_cast<int>(t);
  }

  // Higher is better; tiers() - 1 is the top MCS.
  int mcs_index(double distance) const { return tiers() - 1 - tier(distance); }

  double tier_rate(int tier) const { return rates_.at(static_cast<std::size_t>(tier)); }

  double capacity(double distance, double allocated_fraction = 1.0) const {
    if (!(allocated_fraction >= 0.0 && allocated_fraction <= 1.0)) {
      throw InvalidArgument("allocated fraction must lie in [0, 1]");
    }
    return rates_[static_cast<std::size_t>(tier(distance))] * allocated_fraction;
  }

  const std::vector<double>& rates() const noexcept { return rates_; }
  double coverage_radius() const noexcept { return radius_; }

 private:
  std::vector<double> rates_;
  double radius_;
};

// Base stations spaced evenly along a ring road.
class BaseStations {
 public:
  BaseStations(double road_length, int count) : length_(road_length) {
    if (count < 1) throw InvalidArgument("need at least one base station");
    for (int k = 0; k < count; ++k) positions_.push_back((k + 0.5) * road_length / count);
  }

  struct Attachment {
    int station = 0;
    double distance = 0.0;
  };

  Attachment nearest(double position) const {
    Attachment best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < positions_.size(); ++k) {
      const double d = std::fabs(position - positions_[k]);
      const double ring = std::min(d, length_ - d);
      if (ring < best.distance) best = {static_cast<int>(k), ring};
    }
    return best;
  }

  int count() const { return static_cast<int>(positions_.size()); }

 private:
  double length_;
  std::vector<double> positions_;
};

// Mean of the most recent throughput observations (Mbps), standing in for an
// average over the sender's congestion-window history.
class ThroughputPredictor {
 public:
  explicit ThroughputPredictor(std::size_t window = 16, double prior = kWorstMbps)
      : window_(window), prior_(prior) {
    if (window_ == 0) throw InvalidArgument("predictor window must be at least 1");
  }

  void observe(double mbps) {
    if (!(mbps >= 0.0)) throw InvalidArgument("throughput samples must be nonnegative");
    samples_.push_back(mbps);
    if (samples_.size() > window_) samples_.pop_front();
  }

  double predict() const {
    if (samples_.empty()) return prior_;
    return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(samples_.size());
  }

  std::size_t size() const noexcept { return samples_.size(); }

 private:
  std::size_t window_;
  double prior_;
  std::deque<double> samples_;
};

struct Contender {
  int id = 0;
  int mcs = 0;
};

// Order in which MAX C/I drains contenders that are all pending at once:
// highest MCS first, ties by lowest id.
inline std::vector<int> schedule_max_ci(std::span<const Contender> contenders) {
  std::vector<Contender> c(contenders.begin(), contenders.end());
  std::sort(c.begin(), c.end(), [](const Contender& a, const Contender& b) {
    return a.mcs != b.mcs ? a.mcs > b.mcs : a.id < b.id;
  });
  std::vector<int> order;
  for (const auto& x : c) order.push_back(x.id);
  return order;
}

struct UplinkJob {
  int id = 0;
  int mcs = 0;
  double ready = 0.0;  // seconds
  double bytes = 0.0;
  double rate_mbps = 0.0;  // rate while holding every RB
};

struct UplinkOutcome {
  int id = 0;
  double first_byte = 0.0;
  double last_byte = 0.0;
  double completion = 0.0;  // last byte plus one-way latency
  double achieved_mbps = 0.0;
};

struct ServiceSegment {
  int id = 0;
  double begin = 0.0;
  double end = 0.0;
};

// Preemptive MAX C/I on one base station: at every instant all RBs go to the
// ready job with the highest MCS (ties by lowest id). Outcomes follow the
// input order; `segments` optionally records the service timeline.
inline std::vector<UplinkOutcome> simulate_max_ci(std::span<const UplinkJob> jobs, double latency,
                                                  std::vector<ServiceSegment>* segments = nullptr) {
  const std::size_t n = jobs.size();
  std::vector<double> remaining(n);
  std::vector<UplinkOutcome> out(n);
  std::vector<bool> started(n, false), done(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    remaining[i] = jobs[i].bytes * 8.0;  // bits
    out[i].id = jobs[i].id;
    if (remaining[i] > 0.0 && !(jobs[i].rate_mbps > 0.0)) {
      throw UnreachableError("uplink job " + std::to_string(jobs[i].id) + " has zero capacity");
    }
  }
  double t = 0.0;
  if (n > 0) {
    t = std::min_element(jobs.begin(), jobs.end(), [](auto& a, auto& b) { return a.ready < b.ready; })->ready;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (remaining[i] <= 0.0) {
      out[i] = {jobs[i].id, jobs[i].ready, jobs[i].ready, jobs[i].ready + latency, 0.0};
      done[i] = true;
    }
  }
  while (true) {
    int best = -1;
    double next_arrival = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      if (jobs[i].ready > t) {
        next_arrival = std::min(next_arrival, jobs[i].ready);
        continue;
      }
      if (best < 0 || jobs[i].mcs > jobs[best].mcs ||
          (jobs[i].mcs == jobs[best].mcs && jobs[i].id < jobs[best].id)) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) {
      if (std::isinf(next_arrival)) break;
      t = next_arrival;
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    const double rate = jobs[b].rate_mbps * 1e6;
    const double finish = t + remaining[b] / rate;
    const double until = std::min(finish, next_arrival);
    if (!started[b]) {
      started[b] = true;
      out[b].first_byte = t;
    }
    if (segments) {
      if (!segments->empty() && segments->back().id == jobs[b].id && segments->back().end == t) {
        segments->back().end = until;
      } else {
        segments->push_back({jobs[b].id, t, until});
      }
    }
    if (finish <= next_arrival) {
      remaining[b] = 0.0;
      done[b] = true;
      out[b].last_byte = finish;
      out[b].completion = finish + latency;
      const double busy = finish - jobs[b].ready;
      out[b].achieved_mbps = busy > 0.0 ? jobs[b].bytes * 8.0 / busy / 1e6 : jobs[b].rate_mbps;
    } else {
      remaining[b] -= (until - t) * rate;
    }
    t = until;
  }
  return out;
}

struct TransferJob {
  double bytes = 0.0;
  double capacity_mbps = 0.0;
  double one_way_latency = 0.0;  // seconds
};

inline double transfer_time(const TransferJob& job) {
  if (job.bytes <= 0.0) return job.one_way_latency;
  if (!(job.capacity_mbps > 0.0)) throw UnreachableError("transfer over a zero-capacity link");
  return job.bytes * 8.0 / (job.capacity_mbps * 1e6) + job.one_way_latency;
}

struct TrainingTimeInputs {
  int epochs = 1;
  double compute_ratio = 1.0;
  std::size_t samples = 0;
  int batch_size = 20;
  double batch_exec_s = 0.06;
};

// epochs * ceil(|D| / batch) * batch_exec / compute_ratio.
inline double training_time(const TrainingTimeInputs& in) {
  if (in.epochs <= 0 || !(in.compute_ratio > 0.0) || in.samples == 0 || in.batch_size <= 0 ||
      !(in.batch_exec_s > 0.0)) {
    throw InvalidArgument("training_time: all inputs must be positive");
  }
  const auto batches = (in.samples + static_cast<std::size_t>(in.batch_size) - 1) / static_cast<std::size_t>(in.batch_size);
  return in.epochs * static_cast<double>(batches) * in.batch_exec_s / in.compute_ratio;
}

// E * C_i * |D_i| / (B_size * B_exe) exactly as typeset; kept for auditing.
inline double training_time_literal(const TrainingTimeInputs& in) {
  if (in.epochs <= 0 || !(in.compute_ratio > 0.0) || in.samples == 0 || in.batch_size <= 0 ||
      !(in.batch_exec_s > 0.0)) {
    throw InvalidArgument("training_time: all inputs must be positive");
  }
  return in.epochs * in.compute_ratio * static_cast<double>(in.samples) / (in.batch_size * in.batch_exec_s);
}

}  // namespace fedsel::net
