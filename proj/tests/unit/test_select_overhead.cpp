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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fedsel/mobility.hpp"
#include "fedsel/overhead.hpp"
#include "fedsel/rng.hpp"
#include "fedsel/selection.hpp"

using namespace fedsel;
using selection::Scheme;

namespace {

// Each vehicle's view rebuilt from scratch: itself plus above-threshold
// neighbours, then top-m by score with ties to the lower id.
std::vector<int> dcs_oracle(const std::vector<double>& scores, const std::vector<std::vector<int>>& nbrs,
                            const selection::DcsParams& p) {
  std::vector<int> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < p.threshold) continue;
    std::size_t better = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (j == i || scores[j] < p.threshold) continue;
      if (std::find(nbrs[j].begin(), nbrs[j].end(), static_cast<int>(i)) == nbrs[j].end()) continue;
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++better;
    }
    if (better < p.top_m) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

TEST(CcsRandom, Examples) {
  std::vector<int> ids(30);
  for (int i = 0; i < 30; ++i) ids[i] = i;
  const auto a = selection::select_ccs_random(ids, 5, 7);
  EXPECT_EQ(a.clients.size(), 5u);
  EXPECT_EQ(std::set<int>(a.clients.begin(), a.clients.end()).size(), 5u);
  EXPECT_EQ(selection::select_ccs_random(ids, 5, 7).clients, a.clients);
  EXPECT_EQ(selection::select_ccs_random(ids, 40, 7).clients.size(), 30u);
  EXPECT_TRUE(selection::select_ccs_random(ids, 0, 7).clients.empty());
}

TEST(CcsFuzzy, ExamplesAndTies) {
  const std::map<int, double> s{{0, 10}, {1, 90}, {2, 50}, {3, 70}, {4, 20}};
  EXPECT_EQ(selection::select_ccs_fuzzy(s, 2).clients, (std::vector<int>{1, 3}));
  EXPECT_TRUE(selection::select_ccs_fuzzy(s, 0).clients.empty());
  const std::map<int, double> tie{{3, 80}, {7, 80}, {1, 10}};
  EXPECT_EQ(selection::select_ccs_fuzzy(tie, 1).clients, std::vector<int>{3});
}

TEST(CcsFuzzy, MatchesSortOracleAndMonotoneInvariance) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::map<int, double> s;
    const int n = 1 + static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) s[i] = rng.uniform(0, 100);
    const auto k = static_cast<std::size_t>(rng.below(8));
    std::vector<std::pair<double, int>> v;
    for (auto [id, sc] : s) v.push_back({-sc, id});
    std::sort(v.begin(), v.end());
    std::vector<int> want;
    for (std::size_t i = 0; i < std::min(k, v.size()); ++i) want.push_back(v[i].second);
    std::sort(want.begin(), want.end());
    const auto got = selection::select_ccs_fuzzy(s, k).clients;
    EXPECT_EQ(got, want);
    std::map<int, double> warped;
    for (auto [id, sc] : s) warped[id] = std::exp(sc / 10.0) - 3.0;
    EXPECT_EQ(selection::select_ccs_fuzzy(warped, k).clients, got);
  }
}

TEST(Dcs, ThresholdAndIsolation) {
  const selection::DcsParams p{37.5, 2, 1};
  std::vector<selection::EvalTable> tables{selection::EvalTable(0), selection::EvalTable(1)};
  const std::vector<double> low{10, 20};
  const std::vector<std::vector<int>> adj{{1}, {0}};
  selection::broadcast_evaluations(tables, low, adj, 1, p);
  EXPECT_TRUE(selection::dcs_round(tables, low, p).clients.empty());
  EXPECT_FALSE(tables[1].contains(0));

  std::vector<selection::EvalTable> lone{selection::EvalTable(0)};
  const std::vector<double> hi{60};
  const std::vector<std::vector<int>> none{{}};
  selection::broadcast_evaluations(lone, hi, none, 1, p);
  EXPECT_EQ(selection::dcs_round(lone, hi, p).clients, std::vector<int>{0});
}

TEST(Dcs, FiveMutuallyInRange) {
  const selection::DcsParams p{37.5, 2, 1};
  std::vector<selection::EvalTable> tables;
  std::vector<std::vector<int>> adj(5);
  for (int i = 0; i < 5; ++i) {
    tables.emplace_back(i);
    for (int j = 0; j < 5; ++j)
      if (j != i) adj[i].push_back(j);
  }
  const std::vector<double> s{40, 95, 60, 80, 50};
  selection::broadcast_evaluations(tables, s, adj, 3, p);
  EXPECT_EQ(selection::dcs_round(tables, s, p).clients, (std::vector<int>{1, 3}));
  EXPECT_TRUE(tables[4].contains(1));
  EXPECT_EQ(tables[4].find(1)->round, 3);
}

TEST(Dcs, ExpiryRule) {
  selection::EvalTable t(0);
  t.update(5, 70, 4);
  t.expire(4, 1);
  EXPECT_TRUE(t.contains(5));
  t.expire(6, 1);
  EXPECT_FALSE(t.contains(5));
  t.update(6, 70, 4);
  t.expire(5, 2);
  EXPECT_TRUE(t.contains(6));
  t.expire(6, 2);
  EXPECT_FALSE(t.contains(6));
  EXPECT_THROW(t.expire(1, 0), InvalidArgument);
}

TEST(Dcs, MissingOwnEntryIsRejected) {
  std::vector<selection::EvalTable> tables{selection::EvalTable(0)};
  const std::vector<double> s{50};
  EXPECT_THROW(selection::dcs_round(tables, s, {}), InvalidArgument);
}

TEST(Dcs, OracleEquivalenceAndCliqueBound) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    selection::DcsParams p{rng.uniform(20, 60), 1 + rng.below(3), 1};
    std::vector<double> pos(n), scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = rng.uniform(0, 1000);
      scores[i] = std::round(rng.uniform(0, 100));  // rounding forces ties
    }
    std::vector<std::vector<int>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) nbrs[i] = mobility::neighbors(pos, i, 200, 1000);
    std::vector<selection::EvalTable> tables;
    for (std::size_t i = 0; i < n; ++i) tables.emplace_back(static_cast<int>(i));
    selection::broadcast_evaluations(tables, scores, nbrs, 1, p);
    const auto got = selection::dcs_round(tables, scores, p).clients;
    EXPECT_EQ(got, dcs_oracle(scores, nbrs, p));
    for (int c : got) EXPECT_GE(scores[static_cast<std::size_t>(c)], p.threshold);
    // Vehicles within one 200 m arc are pairwise in range.
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t inside = 0;
      for (int c : got) {
        const double d = std::fmod(pos[static_cast<std::size_t>(c)] - pos[i] + 1000.0, 1000.0);
        if (d <= 200.0) ++inside;
      }
      EXPECT_LE(inside, p.top_m);
    }
  }
}

TEST(Overhead, StateExamples) {
  auto s = overhead::gboard_ccs();
  s.bidirectional_state = false;
  EXPECT_DOUBLE_EQ(overhead::state_overhead(s), 1.08e10);
  s.tau_s = s.round_s;
  EXPECT_DOUBLE_EQ(overhead::state_overhead(s), 1.5e8);
  auto f = overhead::gboard_fuzzy();
  f.bidirectional_state = false;
  EXPECT_DOUBLE_EQ(overhead::state_overhead(f), 3.24e9);
  EXPECT_DOUBLE_EQ(overhead::state_overhead(overhead::gboard_ccs()), 2.16e10);
  s.tau_s = 0;
  EXPECT_THROW(overhead::state_overhead(s), InvalidArgument);
}

TEST(Overhead, ModelExamples) {
  EXPECT_DOUBLE_EQ(overhead::model_overhead(overhead::gboard_ccs()), 4.2e8);
  auto z = overhead::gboard_ccs();
  z.clients_per_round = 0;
  EXPECT_DOUBLE_EQ(overhead::model_overhead(z), 0.0);
  EXPECT_THROW(overhead::crossover_tau(z), NoCrossoverError);
  EXPECT_DOUBLE_EQ(overhead::model_overhead(overhead::tokyo()), 5.2e9);
}

TEST(Overhead, Crossovers) {
  const auto ccs = overhead::gboard_ccs();
  EXPECT_NEAR(overhead::crossover_tau(ccs), 2.0 * 1.5e6 * 100 * 72 / 4.2e8, 1e-9);
  EXPECT_NEAR(overhead::crossover_tau(ccs), 51.43, 0.005);
  EXPECT_NEAR(overhead::crossover_tau(overhead::gboard_fuzzy()), 15.43, 0.005);
  auto doubled = ccs;
  doubled.model_bytes *= 2;
  EXPECT_NEAR(overhead::crossover_tau(doubled), overhead::crossover_tau(ccs) / 2, 1e-12);
  auto at = ccs;
  at.tau_s = overhead::crossover_tau(ccs);
  EXPECT_NEAR(overhead::state_overhead(at) / overhead::model_overhead(at), 1.0, 1e-9);
}

TEST(Overhead, AccumulatedTimeExamples) {
  auto s = overhead::tokyo();
  const auto ccs = overhead::accumulated_time(s, Scheme::kCcsRandom);
  EXPECT_NEAR(ccs.state_latency_s, 4.4496e7, 1.0);
  const auto dcs = overhead::accumulated_time(s, Scheme::kDcs);
  EXPECT_NEAR(ccs.state_latency_s / dcs.state_latency_s, 5.0, 1e-12);
  s.tau_s = 72;
  EXPECT_NEAR(overhead::accumulated_time(s, Scheme::kCcsRandom).state_latency_s, 3.09e6 * 0.2, 1e-6);
}

TEST(Overhead, StateOverheadProperties) {
  auto s = overhead::gboard_ccs();
  double prev = 1e300;
  for (double tau = 0.5; tau < 200; tau += 0.5) {
    s.tau_s = tau;
    const double v = overhead::state_overhead(s);
    EXPECT_LT(v, prev);
    prev = v;
  }
  s.tau_s = 3;
  const double base = overhead::state_overhead(s);
  auto t = s;
  t.participants *= 3;
  EXPECT_NEAR(overhead::state_overhead(t), 3 * base, 1e-6 * base);
  t = s;
  t.state_bytes *= 3;
  EXPECT_NEAR(overhead::state_overhead(t), 3 * base, 1e-6 * base);
  t = s;
  t.round_s *= 3;
  EXPECT_NEAR(overhead::state_overhead(t), 3 * base, 1e-6 * base);
}

TEST(Overhead, SchemeOrderingOnGrid) {
  for (const auto& name : overhead::preset_names()) {
    auto s = *overhead::preset(name);
    for (double tau = 1; tau <= 120; tau += 1) {
      s.tau_s = tau;
      const double c = overhead::accumulated_time(s, Scheme::kCcsRandom).total_s();
      const double f = overhead::accumulated_time(s, Scheme::kCcsFuzzy).total_s();
      const double d = overhead::accumulated_time(s, Scheme::kDcs).total_s();
      if (s.evaluation_bytes < s.state_bytes) {
        EXPECT_LT(f, c) << name << " tau " << tau;
      }
      EXPECT_LT(d, f) << name << " tau " << tau;
    }
  }
  EXPECT_FALSE(overhead::preset("nope").has_value());
}
