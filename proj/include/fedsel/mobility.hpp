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

// Free-way motion on a ring road and DSRC neighbourhoods.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/rng.hpp"

namespace fedsel::mobility {

struct RoadConfig {
  double length = 1000.0;     // metres
  double dsrc_range = 200.0;  // metres

  void validate() const {
    if (!(length > 0.0)) throw InvalidArgument("road length must be positive");
    if (!(dsrc_range > 0.0 && dsrc_range <= length)) {
      throw InvalidArgument("dsrc range must lie in (0, road length]");
    }
  }
};

struct VehicleKinematics {
  double position = 0.0;  // metres, [0, length)
  double speed = 0.0;     // metres per second
};

struct PlacementPolicy {
  enum class Kind { kUniform, kExtreme };
  Kind kind = Kind::kUniform;
  double cluster_window = 200.0;
};

inline double wrap(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r = 0.0;
  return r;
}

inline double ring_distance(double a, double b, double length) {
  const double d = std::fabs(a - b);
  return std::min(d, length - d);
}

// Uniform: i.i.d. positions on the road. Extreme: the better-ranked half
// (rank 0 is best) packed into [0, window), the rest into the window half a
// ring away.
inline std::vector<double> init_placement(const RoadConfig& road, const PlacementPolicy& policy,
                                          std::span<const int> rank, std::size_t n, std::uint64_t seed) {
  road.validate();
  if (n == 0) throw InvalidArgument("init_placement: need at least one vehicle");
  Rng rng(seed, Stream::kPlacement);
  std::vector<double> pos(n);
  if (policy.kind == PlacementPolicy::Kind::kUniform) {
    for (double& p : pos) p = rng.uniform(0.0, road.length);
    return pos;
  }
  if (!(policy.cluster_window > 0.0 && policy.cluster_window <= road.length / 2.0)) {
    throw InvalidArgument("cluster window must lie in (0, length / 2]");
  }
  if (rank.size() != n) throw InvalidArgument("init_placement: one rank per vehicle required");
  const auto top = static_cast<int>((n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = rank[i] < top ? 0.0 : road.length / 2.0;
    pos[i] = wrap(base + rng.uniform(0.0, policy.cluster_window), road.length);
  }
  return pos;
}

inline std::vector<double> init_speeds(std::size_t n, double lo, double hi, std::uint64_t seed) {
  if (!(lo > 0.0 && hi >= lo)) throw InvalidArgument("speed range must satisfy 0 < lo <= hi");
  Rng rng(seed, Stream::kPlacement, 1);
  std::vector<double> v(n);
  for (double& s : v) s = rng.uniform(lo, hi);
  return v;
}

inline VehicleKinematics step(const VehicleKinematics& k, double dt, const RoadConfig& road) {
  if (!(dt >= 0.0)) throw InvalidArgument("step: dt must be nonnegative");
  return {wrap(k.position + k.speed * dt, road.length), k.speed};
}

// Every j != i within `range` of vehicle i on the ring, ascending.
inline std::vector<int> neighbors(std::span<const double> positions, std::size_t i, double range,
                                  double length) {
  if (i >= positions.size()) throw InvalidArgument("neighbors: vehicle index out of range");
  std::vector<int> out;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j != i && ring_distance(positions[i], positions[j], length) <= range) out.push_back(static_cast<int>(j));
  }
  return out;
}

}  // namespace fedsel::mobility
