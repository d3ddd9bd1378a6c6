#include "corrbin/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "corrbin/error.hpp"

namespace corrbin {

namespace {

constexpr std::uint64_t kCountCap = std::uint64_t{1} << 62;

std::uint64_t saturating_ceil(double x) {
  if (!(x < static_cast<double>(kCountCap))) return kCountCap;
  return static_cast<std::uint64_t>(std::ceil(x));
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorCode::InvalidSpec, "unknown field '" + it.key() + "'");
  }
}

}  // namespace

double LevelRule::level(std::size_t k) const {
  if (k == 0) return 0.5;
  if (form == Form::List) {
    if (k > values.size()) throw Error(ErrorCode::InconsistentSequences, "level index beyond list");
    return values[k - 1];
  }
  return first * std::pow(ratio, static_cast<double>(k - 1));
}

std::optional<std::size_t> LevelRule::size() const {
  if (form == Form::List) return values.size();
  return std::nullopt;
}

std::uint64_t CountRule::count(std::size_t k, const LevelRule& levels) const {
  if (k == 0) throw Error(ErrorCode::InconsistentSequences, "counts are indexed from 1");
  switch (form) {
    case Form::List:
      if (k > values.size()) throw Error(ErrorCode::InconsistentSequences, "count index beyond list");
      return values[k - 1];
    case Form::Linear:
      return 1 + static_cast<std::uint64_t>(std::floor(slope * static_cast<double>(k - 1)));
    case Form::Geometric:
      return saturating_ceil(std::pow(ratio, static_cast<double>(k - 1)) - 1e-9);
    case Form::InverseLevel:
      if (k == 1) return 1;
      return offset + saturating_ceil(scale / levels.level(k - 1));
  }
  return 1;
}

std::optional<std::size_t> CountRule::size() const {
  if (form == Form::List) return values.size();
  return std::nullopt;
}

std::optional<std::size_t> LevelCountSequence::discontinuities() const {
  auto nl = levels.size();
  auto nc = counts.size();
  if (!nl && !nc) return std::nullopt;
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  if (nl) limit = std::min(limit, *nl);
  if (nc) limit = std::min(limit, *nc == 0 ? 0 : *nc - 1);
  return limit;
}

void LevelCountSequence::validate(std::size_t horizon) const {
  auto disc = discontinuities();
  std::size_t kmax = disc ? std::min(*disc, horizon) : horizon;
  if (counts.size() && *counts.size() == 0) throw Error(ErrorCode::InconsistentSequences, "empty count list");
  if (count(1) != 1) throw Error(ErrorCode::InconsistentSequences, "N_1 must equal 1");
  double prev = 0.5;
  for (std::size_t k = 1; k <= kmax; ++k) {
    double e = level(k);
    if (!(e > 0.0) || e > 0.5) throw Error(ErrorCode::InconsistentSequences, "levels must lie in (0, 1/2]");
    if (k > 1 && !(e < prev)) throw Error(ErrorCode::InconsistentSequences, "levels must strictly decrease");
    prev = e;
    if (count(k + 1) < count(k)) throw Error(ErrorCode::InconsistentSequences, "counts must be nondecreasing");
  }
}

void to_json(nlohmann::json& j, const LevelRule& rule) {
  if (rule.form == LevelRule::Form::List) {
    j = {{"rule", "list"}, {"values", rule.values}};
  } else {
    j = {{"rule", "geometric"}, {"first", rule.first}, {"ratio", rule.ratio}};
  }
}

void from_json(const nlohmann::json& j, LevelRule& rule) {
  const std::string form = j.at("rule").get<std::string>();
  if (form == "list") {
    reject_unknown(j, {"rule", "values"});
    rule.form = LevelRule::Form::List;
    rule.values = j.at("values").get<std::vector<double>>();
  } else if (form == "geometric") {
    reject_unknown(j, {"rule", "first", "ratio"});
    rule.form = LevelRule::Form::Geometric;
    rule.first = j.at("first").get<double>();
    rule.ratio = j.at("ratio").get<double>();
    if (!(rule.ratio > 0.0 && rule.ratio < 1.0)) throw Error(ErrorCode::InvalidSpec, "level ratio must be in (0,1)");
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown level rule '" + form + "'");
  }
}

void to_json(nlohmann::json& j, const CountRule& rule) {
  switch (rule.form) {
    case CountRule::Form::List: j = {{"rule", "list"}, {"values", rule.values}}; break;
    case CountRule::Form::Linear: j = {{"rule", "linear"}, {"slope", rule.slope}}; break;
    case CountRule::Form::Geometric: j = {{"rule", "geometric"}, {"ratio", rule.ratio}}; break;
    case CountRule::Form::InverseLevel:
      j = {{"rule", "inverse_level"}, {"scale", rule.scale}, {"offset", rule.offset}};
      break;
  }
}

void from_json(const nlohmann::json& j, CountRule& rule) {
  const std::string form = j.at("rule").get<std::string>();
  if (form == "list") {
    reject_unknown(j, {"rule", "values"});
    rule.form = CountRule::Form::List;
    rule.values = j.at("values").get<std::vector<std::uint64_t>>();
  } else if (form == "linear") {
    reject_unknown(j, {"rule", "slope"});
    rule.form = CountRule::Form::Linear;
    rule.slope = j.value("slope", 1.0);
  } else if (form == "geometric") {
    reject_unknown(j, {"rule", "ratio"});
    rule.form = CountRule::Form::Geometric;
    rule.ratio = j.at("ratio").get<double>();
  } else if (form == "inverse_level") {
    reject_unknown(j, {"rule", "scale", "offset"});
    rule.form = CountRule::Form::InverseLevel;
    rule.scale = j.value("scale", 1.0);
    rule.offset = j.value("offset", std::uint64_t{0});
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown count rule '" + form + "'");
  }
}

}  // namespace corrbin
