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

// Closed-form communication overhead: active-state maintenance versus model
// exchange, their crossover interval, and accumulated communication time.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/selection.hpp"

namespace fedsel::overhead {

struct OverheadScenario {
  double participants = 0.0;      // N
  double state_bytes = 0.0;       // s, full active state
  double evaluation_bytes = 0.0;  // compact state carrying only a fuzzy score
  double round_s = 0.0;           // t
  double tau_s = 1.0;             // state sending interval
  double model_bytes = 0.0;       // m
  double clients_per_round = 0.0;
  double latency_cloud_s = 0.2;
  double latency_dsrc_s = 0.04;
  bool bidirectional_state = true;
  double cloud_rate_mbps = 10.4;  // state and model uplink rate
  double dsrc_rate_mbps = 6.0;

  void validate() const {
    if (!(participants > 0 && state_bytes > 0 && evaluation_bytes > 0 && round_s > 0 && tau_s > 0 &&
          model_bytes >= 0 && clients_per_round >= 0 && latency_cloud_s >= 0 && latency_dsrc_s >= 0 &&
          cloud_rate_mbps > 0 && dsrc_rate_mbps > 0)) {
      throw InvalidArgument("overhead scenario: sizes and times must be positive");
    }
  }
};

// Gboard numbers: 1.5M devices, 72 s rounds, 1.4 MB model, 300 clients,
// 100 B (full) or 30 B (fuzzy score) state.
inline OverheadScenario gboard_ccs() {
  OverheadScenario s;
  s.participants = 1.5e6;
  s.state_bytes = 100;
  s.evaluation_bytes = 30;
  s.round_s = 72;
  s.model_bytes = 1.4e6;
  s.clients_per_round = 300;
  return s;
}

inline OverheadScenario gboard_fuzzy() {
  OverheadScenario s = gboard_ccs();
  s.state_bytes = 30;
  return s;
}

// 3.09M registered vehicles, 1000 clients per round, 5.2 MB model.
inline OverheadScenario tokyo() {
  OverheadScenario s;
  s.participants = 3.09e6;
  s.state_bytes = 100;
  s.evaluation_bytes = 30;
  s.round_s = 72;
  s.model_bytes = 5.2e6;
  s.clients_per_round = 1000;
  return s;
}

inline std::optional<OverheadScenario> preset(std::string_view name) {
  if (name == "gboard-ccs") return gboard_ccs();
  if (name == "gboard-fuzzy") return gboard_fuzzy();
  if (name == "tokyo") return tokyo();
  return std::nullopt;
}

inline std::vector<std::string> preset_names() { return {"gboard-ccs", "gboard-fuzzy", "tokyo"}; }

inline double direction_factor(const OverheadScenario& s) { return s.bidirectional_state ? 2.0 : 1.0; }

// N * s * t / tau bytes per round, doubled when both directions are counted.
inline double state_overhead(const OverheadScenario& s) {
  if (!(s.tau_s > 0.0)) throw InvalidArgument("state_overhead: tau must be positive");
  return direction_factor(s) * s.participants * s.state_bytes * s.round_s / s.tau_s;
}

inline double model_overhead(const OverheadScenario& s) { return s.clients_per_round * s.model_bytes; }

// Interval at which state maintenance costs as much as the model uploads.
inline double crossover_tau(const OverheadScenario& s) {
  const double model = model_overhead(s);
  if (!(model > 0.0)) throw NoCrossoverError("crossover_tau: model overhead is zero");
  return direction_factor(s) * s.participants * s.state_bytes * s.round_s / model;
}

struct AccumulatedTime {
  double state_latency_s = 0.0;  // N * (t / tau) * latency
  double state_serialization_s = 0.0;
  double model_exchange_s = 0.0;

  double state_s() const { return state_latency_s + state_serialization_s; }
  double total_s() const { return state_s() + model_exchange_s; }
};

// Per-round communication time summed over participants. Every state message
// costs a full one-way latency plus its serialization time; CCS sends the full
// state to the cloud, CCS-fuzzy only the score, and DCS the score over DSRC.
inline AccumulatedTime accumulated_time(const OverheadScenario& s, selection::Scheme scheme) {
  s.validate();
  const double sends = s.participants * (s.round_s / s.tau_s);
  double latency = s.latency_cloud_s, bytes = s.state_bytes, rate = s.cloud_rate_mbps;
  if (scheme == selection::Scheme::kCcsFuzzy) {
    bytes = s.evaluation_bytes;
  } else if (scheme == selection::Scheme::kDcs) {
    latency = s.latency_dsrc_s;
    bytes = s.evaluation_bytes;
    rate = s.dsrc_rate_mbps;
  }
  AccumulatedTime t;
  t.state_latency_s = sends * latency;
  t.state_serialization_s = sends * bytes * 8.0 / (rate * 1e6);
  t.model_exchange_s = s.clients_per_round * (s.model_bytes * 8.0 / (s.cloud_rate_mbps * 1e6) + s.latency_cloud_s);
  return t;
}

struct OverheadReport {
  double tau_s = 0.0;
  double state_bytes_per_round = 0.0;
  double model_bytes_per_round = 0.0;
  std::optional<double> crossover_tau_s;
  double accumulated_ccs_s = 0.0;
  double accumulated_ccs_fuzzy_s = 0.0;
  double accumulated_dcs_s = 0.0;
};

inline OverheadReport report(const OverheadScenario& s) {
  OverheadReport r;
  r.tau_s = s.tau_s;
  r.state_bytes_per_round = state_overhead(s);
  r.model_bytes_per_round = model_overhead(s);
  if (r.model_bytes_per_round > 0.0) r.crossover_tau_s = crossover_tau(s);
  r.accumulated_ccs_s = accumulated_time(s, selection::Scheme::kCcsRandom).total_s();
  r.accumulated_ccs_fuzzy_s = accumulated_time(s, selection::Scheme::kCcsFuzzy).total_s();
  r.accumulated_dcs_s = accumulated_time(s, selection::Scheme::kDcs).total_s();
  return r;
}

}  // namespace fedsel::overhead
