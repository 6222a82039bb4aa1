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

#include <cmath>

#include "fedsel/mobility.hpp"
#include "fedsel/net.hpp"
#include "fedsel/rng.hpp"

using namespace fedsel;

TEST(Capacity, TierEndpointsAndScaling) {
  const auto t = net::McsTable::geometric(300.0);
  EXPECT_DOUBLE_EQ(t.capacity(0.0), 10.4);
  EXPECT_DOUBLE_EQ(t.capacity(1e6), 0.24);
  EXPECT_DOUBLE_EQ(t.capacity(0.0, 0.5), 5.2);
  EXPECT_EQ(t.tiers(), 8);
  EXPECT_THROW(t.capacity(0.0, 1.5), InvalidArgument);
  double prev = 1e9;
  for (double d = 0; d < 400; d += 0.5) {
    const double c = t.capacity(d);
    EXPECT_LE(c, prev);
    EXPECT_GE(c, 0.24);
    EXPECT_LE(c, 10.4);
    prev = c;
  }
}

TEST(Capacity, CoverageRadiusAndStations) {
  EXPECT_DOUBLE_EQ(net::McsTable::coverage_radius_for(1000, 2), 300.0);
  const net::BaseStations bs(1000, 2);
  EXPECT_EQ(bs.nearest(250).station, 0);
  EXPECT_DOUBLE_EQ(bs.nearest(250).distance, 0.0);
  EXPECT_EQ(bs.nearest(760).station, 1);
  EXPECT_EQ(bs.nearest(990).station, 1);
  EXPECT_DOUBLE_EQ(bs.nearest(990).distance, 240.0);
  EXPECT_DOUBLE_EQ(bs.nearest(10).distance, 240.0);
}

TEST(Predictor, MeanPriorAndOrder) {
  net::ThroughputPredictor p;
  EXPECT_DOUBLE_EQ(p.predict(), 0.24);
  for (int i = 0; i < 3; ++i) p.observe(4.0);
  EXPECT_DOUBLE_EQ(p.predict(), 4.0);
  net::ThroughputPredictor a(4), b(4);
  for (int i = 0; i < 10; ++i) a.observe(3.0), b.observe(2.0);
  EXPECT_GT(a.predict(), b.predict());
  net::ThroughputPredictor w(2);
  w.observe(1), w.observe(2), w.observe(6);
  EXPECT_DOUBLE_EQ(w.predict(), 4.0);
  EXPECT_THROW(w.observe(-1), InvalidArgument);
}

TEST(MaxCi, ScheduleOrder) {
  const net::Contender one[] = {{3, 5}};
  EXPECT_EQ(net::schedule_max_ci(one), std::vector<int>{3});
  const net::Contender two[] = {{1, 2}, {2, 7}};
  EXPECT_EQ(net::schedule_max_ci(two), (std::vector<int>{2, 1}));
  const net::Contender tie[] = {{9, 4}, {4, 4}};
  EXPECT_EQ(net::schedule_max_ci(tie), (std::vector<int>{4, 9}));
}

TEST(MaxCi, SingleJobHoldsAllResources) {
  const net::UplinkJob jobs[] = {{0, 7, 1.0, 5.2e6, 10.4}};
  std::vector<net::ServiceSegment> seg;
  const auto out = net::simulate_max_ci(jobs, 0.2, &seg);
  ASSERT_EQ(seg.size(), 1u);
  EXPECT_NEAR(out[0].completion, 1.0 + 4.0 + 0.2, 1e-12);
  EXPECT_NEAR(out[0].achieved_mbps, 10.4, 1e-9);
}

TEST(MaxCi, HigherMcsServedFirstAndPreempts) {
  const net::UplinkJob jobs[] = {{1, 2, 0.0, 1e6, 1.0}, {2, 7, 0.0, 1e6, 8.0}};
  const auto out = net::simulate_max_ci(jobs, 0.0);
  EXPECT_NEAR(out[1].last_byte, 1.0, 1e-12);
  EXPECT_NEAR(out[0].first_byte, 1.0, 1e-12);
  EXPECT_NEAR(out[0].last_byte, 9.0, 1e-12);

  const net::UplinkJob late[] = {{1, 2, 0.0, 1e6, 1.0}, {2, 7, 2.0, 1e6, 8.0}};
  const auto pre = net::simulate_max_ci(late, 0.0);
  EXPECT_NEAR(pre[1].first_byte, 2.0, 1e-12);
  EXPECT_NEAR(pre[1].last_byte, 3.0, 1e-12);
  EXPECT_NEAR(pre[0].last_byte, 9.0, 1e-12);
}

TEST(MaxCi, NeverServesLowerMcsWhileHigherPending) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<net::UplinkJob> jobs;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      jobs.push_back({i, static_cast<int>(rng.below(8)), rng.uniform(0, 5), rng.uniform(1e4, 1e6), rng.uniform(0.24, 10.4)});
    }
    std::vector<net::ServiceSegment> seg;
    const auto out = net::simulate_max_ci(jobs, 0.1, &seg);
    for (const auto& s : seg) {
      const auto& served = jobs[static_cast<std::size_t>(s.id)];
      const double mid = 0.5 * (s.begin + s.end);
      for (const auto& j : jobs) {
        const bool pending = j.ready <= mid && out[static_cast<std::size_t>(j.id)].last_byte > mid;
        if (pending && j.id != served.id) {
          EXPECT_TRUE(j.mcs < served.mcs || (j.mcs == served.mcs && j.id > served.id));
        }
      }
    }
    for (const auto& o : out) EXPECT_GT(o.completion, 0.0);
  }
}

TEST(Transfer, Examples) {
  EXPECT_NEAR(net::transfer_time({5.2e6, 10.4, 0.2}), 4.2, 1e-12);
  EXPECT_DOUBLE_EQ(net::transfer_time({0, 10.4, 0.2}), 0.2);
  EXPECT_NEAR(net::transfer_time({5.2e6, 0.24, 0.2}), 173.5333333, 1e-6);
  EXPECT_THROW(net::transfer_time({10, 0.0, 0.2}), UnreachableError);
}

TEST(Transfer, Additivity) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(1, 1e7), b = rng.uniform(1, 1e7), cap = rng.uniform(0.24, 10.4), lat = rng.uniform(0, 1);
    const double split = net::transfer_time({a, cap, lat}) + net::transfer_time({b, cap, lat});
    EXPECT_NEAR(split - net::transfer_time({a + b, cap, lat}), lat, 1e-9);
  }
}

TEST(TrainingTime, Examples) {
  EXPECT_NEAR(net::training_time({1, 1.0, 4500, 20, 0.06}), 13.5, 1e-12);
  EXPECT_NEAR(net::training_time({1, 1.0, 45, 20, 0.06}), 0.18, 1e-12);
  EXPECT_NEAR(net::training_time({1, 2.0, 4500, 20, 0.06}), 6.75, 1e-12);
  EXPECT_NEAR(net::training_time_literal({30, 1.0, 4500, 20, 0.06}), 112500.0, 1e-6);
  EXPECT_THROW(net::training_time({0, 1.0, 10, 20, 0.06}), InvalidArgument);
}

TEST(Mobility, Placement) {
  const mobility::RoadConfig road;
  const std::vector<int> none;
  const auto u = mobility::init_placement(road, {}, none, 30, 1);
  ASSERT_EQ(u.size(), 30u);
  for (double p : u) EXPECT_TRUE(p >= 0 && p < 1000);
  EXPECT_EQ(mobility::init_placement(road, {}, none, 1, 1).size(), 1u);

  std::vector<int> rank(30);
  for (int i = 0; i < 30; ++i) rank[i] = (i * 7) % 30;
  mobility::PlacementPolicy extreme{mobility::PlacementPolicy::Kind::kExtreme, 200};
  const auto e = mobility::init_placement(road, extreme, rank, 30, 1);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 30; ++i) {
    if (rank[i] < 15) lo = std::min(lo, e[i]), hi = std::max(hi, e[i]);
  }
  EXPECT_LT(hi - lo, 200.0);
  for (int i = 0; i < 30; ++i) {
    if (rank[i] >= 15) {
      EXPECT_TRUE(e[i] >= 500 && e[i] < 700);
    }
  }
}

TEST(Mobility, Step) {
  const mobility::RoadConfig road;
  EXPECT_DOUBLE_EQ(mobility::step({100, 20}, 1, road).position, 120);
  EXPECT_DOUBLE_EQ(mobility::step({990, 20}, 1, road).position, 10);
  EXPECT_DOUBLE_EQ(mobility::step({990, 20}, 0, road).position, 990);
  mobility::VehicleKinematics k{3, 29.7};
  for (int i = 0; i < 1000; ++i) {
    k = mobility::step(k, 3.3, road);
    ASSERT_TRUE(k.position >= 0 && k.position < 1000);
  }
}

TEST(Mobility, Neighbors) {
  const std::vector<double> pos{0, 199, 201, 990};
  const auto n0 = mobility::neighbors(pos, 0, 200, 1000);
  EXPECT_EQ(n0, (std::vector<int>{1, 3}));
  const std::vector<double> ring{10, 990};
  EXPECT_EQ(mobility::neighbors(ring, 0, 200, 1000), std::vector<int>{1});
}

TEST(Mobility, NeighborRelationSymmetricIrreflexive) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> pos(25);
    for (double& p : pos) p = rng.uniform(0, 1000);
    std::vector<std::vector<int>> nb;
    for (std::size_t i = 0; i < pos.size(); ++i) nb.push_back(mobility::neighbors(pos, i, 200, 1000));
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (int j : nb[i]) {
        EXPECT_NE(static_cast<std::size_t>(j), i);
        const auto& back = nb[static_cast<std::size_t>(j)];
        EXPECT_NE(std::find(back.begin(), back.end(), static_cast<int>(i)), back.end());
      }
    }
  }
}
