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

// Mamdani fuzzy evaluator over four normalized objectives: sample quantity,
// available throughput, computational capability and local loss. Each input
// is fuzzified into three Gaussian linguistics, 81 min-max rules map the
// combinations onto nine output levels on [0, 100], and the aggregate is
// reduced to a crisp score by its centre of gravity.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "fedsel/errors.hpp"

namespace fedsel::fuzzy {

inline constexpr int kLinguistics = 3;
inline constexpr int kInputs = 4;
inline constexpr int kLevels = 9;
inline constexpr int kRules = 81;

// Linguistic index of one input: 0 = low/poor/shortage/weak/smaller,
// 1 = middle/average, 2 = high/good/sufficient/strong/greater.
using Linguistic = int;

inline double normalize(double value, double max_value) {
  if (!(max_value > 0.0)) throw InvalidArgument("normalize: max_value must be positive");
  if (!(value >= 0.0)) throw InvalidArgument("normalize: value must be nonnegative");
  return std::min(value / max_value, 1.0);
}

struct FuzzyInput {
  double sq = 0.0;  // sample quantity
  double ta = 0.0;  // available throughput
  double cc = 0.0;  // computational capability
  double lf = 0.0;  // local loss

  std::array<double, kInputs> values() const { return {sq, ta, cc, lf}; }

  void validate() const {
    for (double v : values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("fuzzy input outside [0, 1]");
    }
  }
};

class MembershipFamily {
 public:
  // Width as a fraction of the smaller gap between adjacent centers.
  static constexpr double kSigmaGapFraction = 0.35;

  // Centers (0, mean, 1); sigma scales with the smaller gap.
  static MembershipFamily from_mean(double historical_mean = 0.5) {
    if (!(historical_mean > 0.0 && historical_mean < 1.0)) {
      throw InvalidArgument("historical mean must lie in (0, 1)");
    }
    const double sigma = kSigmaGapFraction * std::min(historical_mean, 1.0 - historical_mean);
    return MembershipFamily({0.0, historical_mean, 1.0}, sigma);
  }

  MembershipFamily(std::array<double, kLinguistics> centers, double sigma)
      : centers_(centers), sigma_(sigma) {
    if (!(centers_[0] < centers_[1] && centers_[1] < centers_[2])) {
      throw InvalidArgument("membership centers must be strictly ascending");
    }
    if (!(sigma_ > 0.0)) throw InvalidArgument("membership sigma must be positive");
  }

  std::array<double, kLinguistics> fuzzify(double x) const {
    std::array<double, kLinguistics> degrees{};
    for (int k = 0; k < kLinguistics; ++k) {
      const double d = x - centers_[k];
      degrees[k] = std::exp(-d * d / (2.0 * sigma_ * sigma_));
    }
    return degrees;
  }

  const std::array<double, kLinguistics>& centers() const noexcept { return centers_; }
  double sigma() const noexcept { return sigma_; }
  double historical_mean() const noexcept { return centers_[1]; }

 private:
  std::array<double, kLinguistics> centers_;
  double sigma_;
};

using Families = std::array<MembershipFamily, kInputs>;

inline Families default_families() {
  const auto f = MembershipFamily::from_mean(0.5);
  return {f, f, f, f};
}

struct RuleKey {
  Linguistic sq, ta, cc, lf;

  int index() const { return sq + kLinguistics * (ta + kLinguistics * (cc + kLinguistics * lf)); }

  static RuleKey from_index(int index) {
    return {index % 3, (index / 3) % 3, (index / 9) % 3, index / 27};
  }
};

class RuleBase {
 public:
  RuleBase() { consequents_.fill(0); }

  int consequent(RuleKey key) const { return consequents_.at(checked(key)); }
  int consequent(int index) const { return consequents_.at(index); }

  void set(RuleKey key, int level) {
    if (level < 0 || level >= kLevels) throw InvalidArgument("rule level outside L0..L8");
    consequents_[checked(key)] = static_cast<std::uint8_t>(level);
  }

  // One line per rule: "sq ta cc lf level", linguistic indices 0..2 (low to
  // high) and level 0..8. Lines starting with '#' are comments.
  std::string to_text() const {
    std::ostringstream out;
    out << "# sq ta cc lf level\n";
    for (int i = 0; i < kRules; ++i) {
      const RuleKey k = RuleKey::from_index(i);
      out << k.sq << ' ' << k.ta << ' ' << k.cc << ' ' << k.lf << ' '
          << static_cast<int>(consequents_[i]) << '\n';
    }
    return out.str();
  }

  static RuleBase from_text(std::istream& in) {
    RuleBase rules;
    std::array<bool, kRules> seen{};
    std::string line;
    int line_no = 0;
    int count = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream fields(line);
      int sq, ta, cc, lf, level;
      std::string extra;
      if (!(fields >> sq >> ta >> cc >> lf >> level) || (fields >> extra)) {
        throw InvalidArgument("rule table line " + std::to_string(line_no) +
                              ": expected five integers");
      }
      for (int s : {sq, ta, cc, lf}) {
        if (s < 0 || s >= kLinguistics) {
          throw InvalidArgument("rule table line " + std::to_string(line_no) +
                                ": linguistic index outside 0..2");
        }
      }
      const RuleKey key{sq, ta, cc, lf};
      if (seen[key.index()]) {
        throw InvalidArgument("rule table line " + std::to_string(line_no) +
                              ": duplicate combination");
      }
      seen[key.index()] = true;
      rules.set(key, level);
      ++count;
    }
    if (count != kRules) {
      throw InvalidArgument("rule table must contain 81 rules, found " + std::to_string(count));
    }
    return rules;
  }

 private:
  static int checked(RuleKey key) {
    for (int s : {key.sq, key.ta, key.cc, key.lf}) {
      if (s < 0 || s >= kLinguistics) throw InvalidArgument("linguistic index outside 0..2");
    }
    return key.index();
  }

  std::array<std::uint8_t, kRules> consequents_;
};

// Loss is weighted double; the clamp reproduces the published rows.
inline int completion_level(RuleKey key) {
  return std::clamp(key.sq + key.ta + key.cc + 2 * key.lf - 2, 0, kLevels - 1);
}

inline RuleBase default_rule_base() {
  RuleBase rules;
  for (int i = 0; i < kRules; ++i) {
    const RuleKey key = RuleKey::from_index(i);
    rules.set(key, completion_level(key));
  }
  return rules;
}

// Output universe [0, 100] sampled every 0.1; level k is a Gaussian centred at
// 12.5 k with sigma 6.25.
struct OutputUniverse {
  static constexpr int kPoints = 1001;
  static constexpr double kStep = 0.1;
  static constexpr double kLevelSpacing = 12.5;
  static constexpr double kLevelSigma = 6.25;

  static double point(int i) { return i * kStep; }

  static double level_center(int level) { return kLevelSpacing * level; }

  static double level_membership(int level, double a) {
    const double d = a - level_center(level);
    return std::exp(-d * d / (2.0 * kLevelSigma * kLevelSigma));
  }

  static const std::array<std::array<double, kPoints>, kLevels>& table() {
    static const auto t = [] {
      std::array<std::array<double, kPoints>, kLevels> m{};
      for (int k = 0; k < kLevels; ++k) {
        for (int i = 0; i < kPoints; ++i) m[k][i] = level_membership(k, point(i));
      }
      return m;
    }();
    return t;
  }
};

// Membership values on an evenly spaced grid starting at `origin`.
struct FuzzySet {
  double origin = 0.0;
  double step = OutputUniverse::kStep;
  std::vector<double> membership;

  double point(std::size_t i) const { return origin + static_cast<double>(i) * step; }
};

struct Evaluation {
  double score = 0.0;
  int level = 0;
};

// Level whose membership at `score` is largest, i.e. the nearest centre.
// Equidistant scores go to the lower level.
inline int nearest_level(double score) {
  int best = 0;
  double best_mu = -1.0;
  for (int k = 0; k < kLevels; ++k) {
    const double mu = OutputUniverse::level_membership(k, score);
    if (mu > best_mu) {
      best_mu = mu;
      best = k;
    }
  }
  return best;
}

// Firing strength of every rule: min over the four antecedent degrees.
inline std::array<double, kRules> firing_strengths(const FuzzyInput& input, const Families& families) {
  input.validate();
  const auto x = input.values();
  std::array<std::array<double, kLinguistics>, kInputs> degrees{};
  for (int v = 0; v < kInputs; ++v) degrees[v] = families[v].fuzzify(x[v]);
  std::array<double, kRules> strength{};
  for (int i = 0; i < kRules; ++i) {
    const RuleKey k = RuleKey::from_index(i);
    strength[i] = std::min({degrees[0][k.sq], degrees[1][k.ta], degrees[2][k.cc], degrees[3][k.lf]});
  }
  return strength;
}

// Mamdani inference: each consequent level is clipped at the strongest rule
// firing into it and the clipped sets are combined by pointwise max.
inline FuzzySet infer(const FuzzyInput& input, const Families& families, const RuleBase& rules) {
  const auto strength = firing_strengths(input, families);
  std::array<double, kLevels> level_strength{};
  for (int i = 0; i < kRules; ++i) {
    double& s = level_strength[rules.consequent(i)];
    s = std::max(s, strength[i]);
  }
  const auto& table = OutputUniverse::table();
  FuzzySet out;
  out.membership.assign(OutputUniverse::kPoints, 0.0);
  for (int k = 0; k < kLevels; ++k) {
    if (level_strength[k] <= 0.0) continue;
    for (int i = 0; i < OutputUniverse::kPoints; ++i) {
      out.membership[i] = std::max(out.membership[i], std::min(table[k][i], level_strength[k]));
    }
  }
  return out;
}

inline Evaluation defuzzify_cog(const FuzzySet& set) {
  double weighted = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < set.membership.size(); ++i) {
    weighted += set.point(i) * set.membership[i];
    mass += set.membership[i];
  }
  if (!(mass > 0.0)) throw DegenerateSetError("defuzzify: fuzzy set has no nonzero membership");
  const double score = weighted / mass;
  return {score, nearest_level(score)};
}

// Full pipeline: normalize raw objectives by their maxima, then infer and
// defuzzify.
class Evaluator {
 public:
  using Raw = std::array<double, kInputs>;

  Evaluator() : Evaluator(default_families(), default_rule_base(), {1.0, 1.0, 1.0, 1.0}) {}

  Evaluator(Families families, RuleBase rules, Raw maxima)
      : families_(families), rules_(rules), maxima_(maxima) {
    for (double m : maxima_) {
      if (!(m > 0.0)) throw InvalidArgument("evaluator maxima must be positive");
    }
  }

  FuzzyInput normalized(const Raw& raw) const {
    return {normalize(raw[0], maxima_[0]), normalize(raw[1], maxima_[1]),
            normalize(raw[2], maxima_[2]), normalize(raw[3], maxima_[3])};
  }

  Evaluation evaluate(const Raw& raw) const { return evaluate_normalized(normalized(raw)); }

  Evaluation evaluate_normalized(const FuzzyInput& input) const {
    return defuzzify_cog(infer(input, families_, rules_));
  }

  const Families& families() const noexcept { return families_; }
  const RuleBase& rules() const noexcept { return rules_; }
  const Raw& maxima() const noexcept { return maxima_; }

 private:
  Families families_;
  RuleBase rules_;
  Raw maxima_;
};

inline Evaluation evaluate(const Evaluator::Raw& raw, const Evaluator::Raw& maxima,
                           const Families& families, const RuleBase& rules) {
  return Evaluator(families, rules, maxima).evaluate(raw);
}

}  // namespace fedsel::fuzzy
