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

// Non-i.i.d. label-skew partitioning: every vehicle receives equal per-class
// counts from a fixed number of distinct classes, and no sample is shared.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

// Target sample count per vehicle, in vehicle-id order.
struct QuantityProfile {
  std::vector<std::size_t> targets;

  // `big` vehicles with `big_quantity` samples, the rest with `small_quantity`.
  static QuantityProfile two_tier(std::size_t vehicles, std::size_t big, std::size_t big_quantity,
                                  std::size_t small_quantity) {
    QuantityProfile p;
    for (std::size_t v = 0; v < vehicles; ++v) p.targets.push_back(v < big ? big_quantity : small_quantity);
    return p;
  }

  // Vehicles 0-11 about 4500 samples, the remainder about 45.
  static QuantityProfile table3(std::size_t vehicles = 30) { return two_tier(vehicles, 12, 4500, 45); }

  static QuantityProfile uniform(std::size_t vehicles, std::size_t quantity) {
    return two_tier(vehicles, vehicles, quantity, quantity);
  }
};

struct PartitionManifest {
  std::vector<std::vector<std::size_t>> vehicles;

  std::size_t vehicle_count() const noexcept { return vehicles.size(); }

  // vehicle_id,sample_index rows with a header line.
  std::string to_csv() const {
    std::ostringstream out;
    out << "vehicle_id,sample_index\n";
    for (std::size_t v = 0; v < vehicles.size(); ++v) {
      for (std::size_t i : vehicles[v]) out << v << ',' << i << '\n';
    }
    return out.str();
  }

  static PartitionManifest from_csv(std::istream& in) {
    PartitionManifest m;
    std::string line;
    if (!std::getline(in, line) || line.rfind("vehicle_id,sample_index", 0) != 0) {
      throw InvalidArgument("partition manifest: missing header");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      std::size_t v = 0, idx = 0;
      char comma = 0;
      std::istringstream fields(line);
      if (!(fields >> v >> comma >> idx) || comma != ',') {
        throw InvalidArgument("partition manifest line " + std::to_string(line_no) + ": malformed");
      }
      if (m.vehicles.size() <= v) m.vehicles.resize(v + 1);
      m.vehicles[v].push_back(idx);
    }
    return m;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << to_csv();
    if (!out) throw Error("cannot write " + path.string());
  }
};

struct PartitionSpec {
  int classes = 10;
  int classes_per_vehicle = 9;
  QuantityProfile profile = QuantityProfile::table3();
};

// Class sets rotate through a seeded class permutation so that every class is
// demanded by roughly the same number of vehicles. Samples are drawn without
// replacement from seeded per-class pools in vehicle-id order.
inline PartitionManifest partition_noniid(std::span<const int> labels, const PartitionSpec& spec,
                                          std::uint64_t seed) {
  const int c = spec.classes;
  const int k = spec.classes_per_vehicle;
  if (k < 1 || k > c) throw InvalidArgument("classes_per_vehicle must lie in [1, class count]");
  Rng rng(seed, Stream::kPartition);

  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) throw InvalidArgument("label outside class range");
    pools[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (auto& pool : pools) rng.shuffle(std::span<std::size_t>(pool));
  std::vector<std::size_t> cursor(pools.size(), 0);

  std::vector<int> perm(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(std::span<int>(perm));
  const auto offset = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(c)));

  PartitionManifest m;
  m.vehicles.resize(spec.profile.targets.size());
  for (std::size_t v = 0; v < spec.profile.targets.size(); ++v) {
    const std::size_t per_class = spec.profile.targets[v] / static_cast<std::size_t>(k);
    if (per_class == 0) {
      throw InvalidArgument("vehicle " + std::to_string(v) + ": quantity below classes_per_vehicle");
    }
    for (int j = 0; j < k; ++j) {
      const auto cls = static_cast<std::size_t>(
          perm[(offset + v * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)) % static_cast<std::size_t>(c)]);
      if (cursor[cls] + per_class > pools[cls].size()) {
        throw CapacityError("partition: class " + std::to_string(cls) + " exhausted while serving vehicle " +
                                std::to_string(v),
                            static_cast<int>(cls));
      }
      auto first = pools[cls].begin() + static_cast<std::ptrdiff_t>(cursor[cls]);
      m.vehicles[v].insert(m.vehicles[v].end(), first, first + static_cast<std::ptrdiff_t>(per_class));
      cursor[cls] += per_class;
    }
    std::sort(m.vehicles[v].begin(), m.vehicles[v].end());
  }
  return m;
}

}  // namespace fedsel
