#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

namespace corrbin {

// Decreasing level sequence eps_1 > eps_2 > ... in (0, 1/2]. eps_0 = 1/2 is
// implicit (the root level).
struct LevelRule {
  enum class Form { List, Geometric };
  Form form = Form::List;
  std::vector<double> values;  // List: eps_1, eps_2, ...
  double first = 0.25;         // Geometric: eps_k = first * ratio^(k-1)
  double ratio = 0.5;

  double level(std::size_t k) const;
  // Number of defined levels; nullopt when the rule is infinite.
  std::optional<std::size_t> size() const;
};

// Nondecreasing counts N_1 = 1, N_2, ... where N_k is the covering number on
// (eps_k, eps_{k-1}).
struct CountRule {
  enum class Form { List, Linear, Geometric, InverseLevel };
  Form form = Form::List;
  std::vector<std::uint64_t> values;  // List: N_1, N_2, ...
  double slope = 1.0;                 // Linear: N_k = 1 + floor(slope (k-1))
  double ratio = 2.0;                 // Geometric: N_k = ceil(ratio^(k-1))
  double scale = 1.0;                 // InverseLevel: N_k = offset + ceil(scale / eps_{k-1}), k >= 2
  std::uint64_t offset = 0;

  std::uint64_t count(std::size_t k, const LevelRule& levels) const;
  std::optional<std::size_t> size() const;
};

// Levels and counts together. Discontinuity k (1-based) is usable when both
// eps_k and N_{k+1} are defined.
struct LevelCountSequence {
  LevelRule levels;
  CountRule counts;

  // nullopt when both rules are infinite.
  std::optional<std::size_t> discontinuities() const;
  double level(std::size_t k) const { return k == 0 ? 0.5 : levels.level(k); }
  std::uint64_t count(std::size_t k) const { return counts.count(k, levels); }
  // Throws InconsistentSequences on the first violation among the first
  // `horizon` discontinuities.
  void validate(std::size_t horizon = 256) const;
};

void to_json(nlohmann::json& j, const LevelRule& rule);
void from_json(const nlohmann::json& j, LevelRule& rule);
void to_json(nlohmann::json& j, const CountRule& rule);
void from_json(const nlohmann::json& j, CountRule& rule);

}  // namespace corrbin
