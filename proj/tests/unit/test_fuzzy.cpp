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
#include <sstream>

#include "fedsel/fuzzy.hpp"
#include "fedsel/rng.hpp"

namespace fz = fedsel::fuzzy;

namespace {

// Linguistic labels as printed in the published rule table, best first.
enum Sq { kSufficient, kAverage, kShortage };
enum Ta { kHigh, kMiddleTa, kPoor };
enum Cc { kStrong, kMiddleCc, kWeak };
enum Lf { kGreater, kMiddleLf, kSmaller };

fz::RuleKey key_of(Sq sq, Ta ta, Cc cc, Lf lf) { return {2 - sq, 2 - ta, 2 - cc, 2 - lf}; }

double gauss(double x, double c, double s) { return std::exp(-(x - c) * (x - c) / (2 * s * s)); }

// Independent 81-rule Mamdani loop over the output universe.
std::vector<double> brute_force_aggregate(const fz::FuzzyInput& in, const fz::RuleBase& rules, double sigma) {
  const double centers[3] = {0.0, 0.5, 1.0};
  const double x[4] = {in.sq, in.ta, in.cc, in.lf};
  std::vector<double> out(1001, 0.0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const int idx[4] = {a, b, c, d};
          double fire = 1.0;
          for (int v = 0; v < 4; ++v) fire = std::min(fire, gauss(x[v], centers[idx[v]], sigma));
          const int level = rules.consequent(fz::RuleKey{a, b, c, d});
          for (int i = 0; i < 1001; ++i) {
            const double mu = gauss(i * 0.1, 12.5 * level, 6.25);
            out[i] = std::max(out[i], std::min(mu, fire));
          }
        }
  return out;
}

}  // namespace

TEST(Normalize, Examples) {
  EXPECT_DOUBLE_EQ(fz::normalize(50, 100), 0.5);
  EXPECT_DOUBLE_EQ(fz::normalize(0, 4500), 0.0);
  EXPECT_DOUBLE_EQ(fz::normalize(4500, 4500), 1.0);
  EXPECT_DOUBLE_EQ(fz::normalize(9000, 4500), 1.0);
  EXPECT_THROW(fz::normalize(1, 0), fedsel::InvalidArgument);
  EXPECT_THROW(fz::normalize(1, -2), fedsel::InvalidArgument);
  EXPECT_THROW(fz::normalize(-1, 2), fedsel::InvalidArgument);
}

TEST(Fuzzify, PeakAndSymmetry) {
  const auto f = fz::MembershipFamily::from_mean(0.5);
  EXPECT_DOUBLE_EQ(f.fuzzify(1.0)[2], 1.0);
  const auto mid = f.fuzzify(0.25);
  EXPECT_DOUBLE_EQ(mid[0], mid[1]);
}

TEST(Fuzzify, GaussianFormulaAtZero) {
  const fz::MembershipFamily f({0.0, 0.5, 1.0}, 0.25);
  const auto d = f.fuzzify(0.0);
  EXPECT_DOUBLE_EQ(d[0], 1.0);
  EXPECT_NEAR(d[1], std::exp(-2.0), 1e-15);
  EXPECT_NEAR(d[2], std::exp(-8.0), 1e-15);
}

TEST(Fuzzify, RejectsBadFamilies) {
  EXPECT_THROW(fz::MembershipFamily::from_mean(0.0), fedsel::InvalidArgument);
  EXPECT_THROW(fz::MembershipFamily::from_mean(1.0), fedsel::InvalidArgument);
  EXPECT_THROW(fz::MembershipFamily({0.0, 0.0, 1.0}, 0.2), fedsel::InvalidArgument);
  EXPECT_THROW(fz::MembershipFamily({0.0, 0.5, 1.0}, 0.0), fedsel::InvalidArgument);
}

TEST(RuleBase, PublishedRows) {
  const auto rules = fz::default_rule_base();
  EXPECT_EQ(rules.consequent(key_of(kSufficient, kHigh, kStrong, kGreater)), 8);
  EXPECT_EQ(rules.consequent(key_of(kAverage, kHigh, kStrong, kGreater)), 7);
  EXPECT_EQ(rules.consequent(key_of(kShortage, kHigh, kStrong, kGreater)), 6);
  EXPECT_EQ(rules.consequent(key_of(kSufficient, kPoor, kWeak, kMiddleLf)), 2);
  EXPECT_EQ(rules.consequent(key_of(kAverage, kPoor, kWeak, kMiddleLf)), 1);
  EXPECT_EQ(rules.consequent(key_of(kShortage, kPoor, kWeak, kMiddleLf)), 0);
  EXPECT_EQ(rules.consequent(key_of(kSufficient, kPoor, kWeak, kSmaller)), 0);
  EXPECT_EQ(rules.consequent(key_of(kAverage, kPoor, kWeak, kSmaller)), 0);
  EXPECT_EQ(rules.consequent(key_of(kShortage, kPoor, kWeak, kSmaller)), 0);
}

TEST(RuleBase, CompletionFormula) {
  const auto rules = fz::default_rule_base();
  EXPECT_EQ(rules.consequent(fz::RuleKey{1, 1, 1, 1}), 3);
  for (int i = 0; i < fz::kRules; ++i) {
    const auto k = fz::RuleKey::from_index(i);
    EXPECT_EQ(k.index(), i);
    EXPECT_EQ(rules.consequent(i), std::clamp(k.sq + k.ta + k.cc + 2 * k.lf - 2, 0, 8));
  }
}

TEST(RuleBase, TextRoundTrip) {
  const auto rules = fz::default_rule_base();
  const auto text = rules.to_text();
  std::istringstream in(text);
  const auto back = fz::RuleBase::from_text(in);
  for (int i = 0; i < fz::kRules; ++i) EXPECT_EQ(back.consequent(i), rules.consequent(i));
  int data_lines = 0;
  std::istringstream lines(text);
  for (std::string l; std::getline(lines, l);) data_lines += (!l.empty() && l[0] != '#');
  EXPECT_EQ(data_lines, 81);
}

TEST(RuleBase, TextRejectsMalformed) {
  std::istringstream short_table("0 0 0 0 0\n");
  EXPECT_THROW(fz::RuleBase::from_text(short_table), fedsel::Error);
  auto text = fz::default_rule_base().to_text();
  text += "0 0 0 0 1\n";
  std::istringstream dup(text);
  EXPECT_THROW(fz::RuleBase::from_text(dup), fedsel::Error);
  std::istringstream bad_level("0 0 0 0 9\n");
  EXPECT_THROW(fz::RuleBase::from_text(bad_level), fedsel::Error);
}

TEST(Infer, PeaksDominate) {
  const auto fam = fz::default_families();
  const auto rules = fz::default_rule_base();
  const auto top = fz::infer({1, 1, 1, 1}, fam, rules);
  EXPECT_GT(top.membership[1000], 0.99);
  EXPECT_GE(fz::defuzzify_cog(top).score, 85.0);
  const auto bottom = fz::infer({0, 0, 0, 0}, fam, rules);
  EXPECT_GT(bottom.membership[0], 0.99);
  EXPECT_LE(fz::defuzzify_cog(bottom).score, 15.0);
}

TEST(Infer, MatchesBruteForceOracle) {
  const auto fam = fz::default_families();
  const auto rules = fz::default_rule_base();
  fedsel::Rng rng(11);
  std::vector<fz::FuzzyInput> inputs{{0.7, 0.4, 0.9, 0.2}};
  for (int i = 0; i < 20; ++i) inputs.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
  for (const auto& in : inputs) {
    const auto got = fz::infer(in, fam, rules);
    const auto want = brute_force_aggregate(in, rules, 0.175);
    ASSERT_EQ(got.membership.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got.membership[i], want[i], 1e-9);
  }
}

TEST(Defuzzify, SymmetricSingletonAndDegenerate) {
  fz::FuzzySet sym{0.0, 0.1, std::vector<double>(1001, 0.0)};
  for (int i = 0; i <= 1000; ++i) sym.membership[i] = gauss(i * 0.1, 50, 9) + 0.3 * gauss(i * 0.1, 20, 4) + 0.3 * gauss(i * 0.1, 80, 4);
  EXPECT_NEAR(fz::defuzzify_cog(sym).score, 50.0, 1e-9);

  fz::FuzzySet single{0.0, 0.1, std::vector<double>(1001, 0.0)};
  single.membership[750] = 0.4;
  EXPECT_NEAR(fz::defuzzify_cog(single).score, 75.0, 1e-12);

  fz::FuzzySet zero{0.0, 0.1, std::vector<double>(1001, 0.0)};
  EXPECT_THROW(fz::defuzzify_cog(zero), fedsel::DegenerateSetError);
}

TEST(Defuzzify, ClippedTriangleMatchesQuadrature) {
  auto tri = [](double a) { return std::min(0.5, std::max(0.0, 1.0 - std::fabs(a - 60.0) / 20.0)); };
  double num = 0, den = 0;
  for (int i = 0; i <= 10000; ++i) {
    const double a = i * 0.01;
    num += a * tri(a);
    den += tri(a);
  }
  fz::FuzzySet set{0.0, 0.1, std::vector<double>(1001)};
  for (int i = 0; i <= 1000; ++i) set.membership[i] = tri(i * 0.1);
  EXPECT_NEAR(fz::defuzzify_cog(set).score, num / den, 0.05);
}

TEST(NearestLevel, TiesGoLow) {
  EXPECT_EQ(fz::nearest_level(0.0), 0);
  EXPECT_EQ(fz::nearest_level(100.0), 8);
  EXPECT_EQ(fz::nearest_level(6.25), 0);
  EXPECT_EQ(fz::nearest_level(58.09), 5);
}

TEST(Evaluate, ExtremesAndDeterminism) {
  const fz::Evaluator::Raw maxima{4500, 10.4, 1.0, std::log(10.0)};
  const auto fam = fz::default_families();
  const auto rules = fz::default_rule_base();
  const auto hi = fz::evaluate(maxima, maxima, fam, rules);
  EXPECT_GE(hi.score, 85.0);
  const auto lo = fz::evaluate({0, 0, 0, 0}, maxima, fam, rules);
  EXPECT_LE(lo.score, 15.0);
  const fz::Evaluator::Raw mid{1234, 3.3, 0.7, 1.1};
  EXPECT_EQ(fz::evaluate(mid, maxima, fam, rules).score, fz::evaluate(mid, maxima, fam, rules).score);
}

TEST(Evaluate, ScoreInRangeOnCoarseGrid) {
  const fz::Evaluator ev;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4; ++c)
        for (int d = 0; d <= 4; ++d) {
          const double s = ev.evaluate_normalized({a / 4.0, b / 4.0, c / 4.0, d / 4.0}).score;
          ASSERT_GE(s, 0.0);
          ASSERT_LE(s, 100.0);
        }
}
