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

// Client selection: centralized random, centralized ranking of local fuzzy
// scores, and the distributed neighbour-table election.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <span>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/rng.hpp"

namespace fedsel::selection {

enum class Scheme { kCcsRandom, kCcsFuzzy, kDcs };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kCcsRandom: return "ccs-random";
    case Scheme::kCcsFuzzy: return "ccs-fuzzy";
    case Scheme::kDcs: return "dcs";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "ccs-random") return Scheme::kCcsRandom;
  if (s == "ccs-fuzzy") return Scheme::kCcsFuzzy;
  if (s == "dcs") return Scheme::kDcs;
  return std::nullopt;
}

struct SelectionOutcome {
  std::vector<int> clients;  // ascending vehicle ids
  std::map<int, double> scores_used;
};

// Uniform sample without replacement of min(n, |participants|) ids.
inline SelectionOutcome select_ccs_random(std::span<const int> participants, std::size_t n, std::uint64_t seed) {
  std::vector<int> pool(participants.begin(), participants.end());
  std::sort(pool.begin(), pool.end());
  Rng rng(seed);
  const std::size_t take = std::min(n, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  SelectionOutcome out;
  out.clients.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(out.clients.begin(), out.clients.end());
  return out;
}

// Ids of the n highest scores; equal scores prefer the lower id.
inline std::vector<int> top_n(const std::map<int, double>& scores, std::size_t n) {
  std::vector<std::pair<int, double>> v(scores.begin(), scores.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<int> ids;
  for (std::size_t i = 0; i < std::min(n, v.size()); ++i) ids.push_back(v[i].first);
  return ids;
}

inline SelectionOutcome select_ccs_fuzzy(const std::map<int, double>& evaluations, std::size_t n) {
  SelectionOutcome out;
  out.clients = top_n(evaluations, n);
  std::sort(out.clients.begin(), out.clients.end());
  for (int id : out.clients) out.scores_used[id] = evaluations.at(id);
  return out;
}

struct TableEntry {
  double score = 0.0;
  int round = 0;
};

// A vehicle's view of its own and its neighbours' latest evaluations.
class EvalTable {
 public:
  explicit EvalTable(int owner = 0) : owner_(owner) {}

  int owner() const noexcept { return owner_; }

  void update(int id, double score, int round) {
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.round <= round) entries_[id] = {score, round};
  }

  // An entry lives for `expiry_rounds` rounds: dropped once its age reaches
  // that count.
  void expire(int round, int expiry_rounds) {
    if (expiry_rounds < 1) throw InvalidArgument("table expiry must be at least one round");
    std::erase_if(entries_, [&](const auto& kv) { return round - kv.second.round >= expiry_rounds; });
  }

  std::optional<TableEntry> find(int id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(int id) const { return entries_.count(id) > 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<int, TableEntry>& entries() const noexcept { return entries_; }

  bool in_top(int id, std::size_t m) const {
    std::map<int, double> scores;
    for (const auto& [k, e] : entries_) scores[k] = e.score;
    const auto top = top_n(scores, m);
    return std::find(top.begin(), top.end(), id) != top.end();
  }

 private:
  int owner_;
  std::map<int, TableEntry> entries_;
};

struct DcsParams {
  double threshold = 37.5;
  std::size_t top_m = 2;
  int expiry_rounds = 1;
};

// One evaluation exchange: each vehicle records its own score, then every
// vehicle at or above the threshold sends its score to each neighbour
// (sender-major, receiver-minor order). Stale entries are expired last.
inline void broadcast_evaluations(std::vector<EvalTable>& tables, std::span<const double> scores,
                                  std::span<const std::vector<int>> neighbor_sets, int round,
                                  const DcsParams& params) {
  if (tables.size() != scores.size() || neighbor_sets.size() != scores.size()) {
    throw InvalidArgument("broadcast_evaluations: tables, scores and neighbour sets must align");
  }
  for (std::size_t i = 0; i < tables.size(); ++i) tables[i].update(static_cast<int>(i), scores[i], round);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (scores[i] < params.threshold) continue;
    for (int j : neighbor_sets[i]) tables[static_cast<std::size_t>(j)].update(static_cast<int>(i), scores[i], round);
  }
  for (auto& t : tables) t.expire(round, params.expiry_rounds);
}

// Decided by each vehicle from its own table only: above threshold and within
// the table's top m.
inline bool dcs_decide(const EvalTable& own, double own_score, const DcsParams& params) {
  if (params.top_m < 1) throw InvalidArgument("dcs: top_m must be at least 1");
  return own_score >= params.threshold && own.in_top(own.owner(), params.top_m);
}

inline SelectionOutcome dcs_round(std::span<const EvalTable> tables, std::span<const double> scores,
                                  const DcsParams& params) {
  SelectionOutcome out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (!tables[i].contains(static_cast<int>(i))) {
      throw InvalidArgument("dcs_round: table " + std::to_string(i) + " lacks its owner's score");
    }
    if (dcs_decide(tables[i], scores[i], params)) {
      out.clients.push_back(static_cast<int>(i));
      out.scores_used[static_cast<int>(i)] = scores[i];
    }
  }
  return out;
}

}  // namespace fedsel::selection
