#include "corrbin/process_models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"

namespace corrbin {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorCode::InvalidSpec, "unknown field '" + it.key() + "' in " + where);
  }
}

double pow2(int e) { return std::ldexp(1.0, e); }

Expr expr_from_json(const json& j) {
  Expr e;
  if (j.is_number_integer()) {
    e.op = Expr::Op::Const;
    e.value = j.get<int>() != 0;
    return e;
  }
  if (!j.is_object() || j.size() == 0) throw Error(ErrorCode::InvalidSpec, "bad expression: " + j.dump());
  if (j.contains("src")) {
    reject_unknown(j, {"src"}, "expression");
    e.op = Expr::Op::Src;
    e.value = j.at("src").get<int>();
  } else if (j.contains("not")) {
    reject_unknown(j, {"not"}, "expression");
    e.op = Expr::Op::Not;
    e.args.push_back(expr_from_json(j.at("not")));
  } else if (j.contains("if")) {
    reject_unknown(j, {"if", "then", "else"}, "expression");
    e.op = Expr::Op::If;
    e.args.push_back(expr_from_json(j.at("if")));
    e.args.push_back(expr_from_json(j.at("then")));
    e.args.push_back(expr_from_json(j.at("else")));
  } else {
    const char* names[] = {"xor", "and", "or"};
    const Expr::Op ops[] = {Expr::Op::Xor, Expr::Op::And, Expr::Op::Or};
    bool found = false;
    for (int t = 0; t < 3; ++t) {
      if (!j.contains(names[t])) continue;
      reject_unknown(j, {names[t]}, "expression");
      e.op = ops[t];
      for (const auto& a : j.at(names[t])) e.args.push_back(expr_from_json(a));
      found = true;
    }
    if (!found) throw Error(ErrorCode::InvalidSpec, "bad expression: " + j.dump());
  }
  return e;
}

json expr_to_json(const Expr& e) {
  auto list = [&] {
    json a = json::array();
    for (const auto& x : e.args) a.push_back(expr_to_json(x));
    return a;
  };
  switch (e.op) {
    case Expr::Op::Const: return e.value;
    case Expr::Op::Src: return {{"src", e.value}};
    case Expr::Op::Not: return {{"not", expr_to_json(e.args[0])}};
    case Expr::Op::Xor: return {{"xor", list()}};
    case Expr::Op::And: return {{"and", list()}};
    case Expr::Op::Or: return {{"or", list()}};
    case Expr::Op::If:
      return {{"if", expr_to_json(e.args[0])}, {"then", expr_to_json(e.args[1])}, {"else", expr_to_json(e.args[2])}};
  }
  return 0;
}

MeanRule mean_rule_from_json(const json& j) {
  MeanRule rule;
  const auto form = j.at("rule").get<std::string>();
  if (form == "power") {
    reject_unknown(j, {"rule", "scale", "exponent"}, "means");
    rule.form = MeanRule::Form::Power;
    rule.scale = j.value("scale", 1.0);
    rule.exponent = j.at("exponent").get<double>();
  } else if (form == "constant") {
    reject_unknown(j, {"rule", "value"}, "means");
    rule.form = MeanRule::Form::Constant;
    rule.value = j.at("value").get<double>();
  } else if (form == "list") {
    reject_unknown(j, {"rule", "values"}, "means");
    rule.form = MeanRule::Form::List;
    rule.values = j.at("values").get<std::vector<double>>();
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown mean rule '" + form + "'");
  }
  return rule;
}

json mean_rule_to_json(const MeanRule& rule) {
  switch (rule.form) {
    case MeanRule::Form::Power: return {{"rule", "power"}, {"scale", rule.scale}, {"exponent", rule.exponent}};
    case MeanRule::Form::Constant: return {{"rule", "constant"}, {"value", rule.value}};
    case MeanRule::Form::List: return {{"rule", "list"}, {"values", rule.values}};
  }
  return {};
}

CustomParams expand_xor(unsigned bits) {
  CustomParams params;
  params.sources.assign(bits, 0.5);
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << bits); ++mask) {
    Expr e;
    e.op = Expr::Op::Xor;
    for (unsigned b = 0; b < bits; ++b) {
      if (mask >> b & 1) {
        Expr s;
        s.op = Expr::Op::Src;
        s.value = static_cast<int>(b);
        e.args.push_back(s);
      }
    }
    params.components.push_back(std::move(e));
  }
  return params;
}

// Exact moment E[prod of listed Custom components] by source enumeration.
double custom_moment(const CustomParams& params, const std::vector<Component>& comps) {
  std::vector<int> involved;
  for (auto c : comps) params.components[c - 1].collect_sources(involved);
  std::sort(involved.begin(), involved.end());
  involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
  double total = 0.0;
  enumerate_sources(params, involved, [&](double w, const std::vector<int>& values) {
    int prod = 1;
    for (auto c : comps) prod &= params.components[c - 1].eval(values);
    total += w * prod;
  });
  return total;
}

// Probability that a block-family component leaves the shared coin Z_0:
// 2^-l for BlockMu, gamma + delta - gamma delta for BlockNu.
double leave_probability(Kind kind, unsigned l) {
  if (kind == Kind::BlockMu) return pow2(-static_cast<int>(l));
  const auto gd = gamma_delta(l);
  return gd.gamma + gd.delta - gd.gamma * gd.delta;
}

double block_pair_moment(Kind kind, unsigned k, unsigned l) {
  if (kind == Kind::BlockMu) {
    if (k == l) return 0.5 - pow2(-static_cast<int>(k) - 2);
    const double a = pow2(-static_cast<int>(k)), b = pow2(-static_cast<int>(l));
    return 0.5 - (a + b - a * b) / 4.0;
  }
  const auto gk = gamma_delta(k);
  if (k == l) return 0.5 - (1.0 - gk.delta) * (2.0 * gk.gamma - gk.gamma * gk.gamma) / 4.0;
  const auto gl = gamma_delta(l);
  const double stay = (1.0 - gk.gamma) * (1.0 - gk.delta) * (1.0 - gl.gamma) * (1.0 - gl.delta);
  return 0.5 - (1.0 - stay) / 4.0;
}

// E[Z_0 X_j X_k] for distinct j, k in blocks lj, lk.
double block_anchor_moment(Kind kind, unsigned lj, unsigned lk) {
  if (lj != lk) {
    const double a = leave_probability(kind, lj), b = leave_probability(kind, lk);
    return 0.5 * (1 - a) * (1 - b) + 0.25 * (a * (1 - b) + b * (1 - a)) + 0.125 * a * b;
  }
  if (kind == Kind::BlockMu) return 0.5 - 0.375 * pow2(-static_cast<int>(lj));
  const auto gd = gamma_delta(lj);
  const double g = gd.gamma;
  return gd.delta / 4.0 + (1 - gd.delta) * ((1 - g) * (1 - g) / 2.0 + g * (1 - g) / 2.0 + g * g / 8.0);
}

double block_triple_same(Kind kind, unsigned l) {
  if (kind == Kind::BlockMu) return 0.5 - 0.375 * pow2(-static_cast<int>(l));
  const auto gd = gamma_delta(l);
  const double g = gd.gamma, h = 1 - g;
  return 0.5 * gd.delta + (1 - gd.delta) * (0.5 * h * h * h + 0.75 * g * h * h + 0.375 * g * g * h + 0.125 * g * g * g);
}

}  // namespace

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::Product: return "Product";
    case Kind::BlockMu: return "BlockMu";
    case Kind::BlockNu: return "BlockNu";
    case Kind::ThinChain: return "ThinChain";
    case Kind::WideTree: return "WideTree";
    case Kind::SqrtDecay: return "SqrtDecay";
    case Kind::BlockSqrt: return "BlockSqrt";
    case Kind::PnaXor: return "PnaXor";
    case Kind::Custom: return "Custom";
  }
  return "?";
}

Kind kind_from_string(const std::string& name) {
  for (Kind k : {Kind::Product, Kind::BlockMu, Kind::BlockNu, Kind::ThinChain, Kind::WideTree, Kind::SqrtDecay,
                 Kind::BlockSqrt, Kind::PnaXor, Kind::Custom}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown kind '" + name + "'");
}

double MeanRule::operator()(Component j) const {
  switch (form) {
    case Form::Power: return scale * std::pow(static_cast<double>(j) + 1.0, -exponent);
    case Form::Constant: return value;
    case Form::List:
      if (j == 0 || j > values.size()) throw Error(ErrorCode::IndexOutOfTruncation, std::to_string(j));
      return values[j - 1];
  }
  return 0.0;
}

std::optional<std::uint64_t> MeanRule::size() const {
  if (form == Form::List) return values.size();
  return std::nullopt;
}

int Expr::eval(const std::vector<int>& sources) const {
  switch (op) {
    case Op::Const: return value;
    case Op::Src: return sources[value];
    case Op::Not: return 1 - args[0].eval(sources);
    case Op::Xor: {
      int v = 0;
      for (const auto& a : args) v ^= a.eval(sources);
      return v;
    }
    case Op::And: {
      for (const auto& a : args) if (!a.eval(sources)) return 0;
      return 1;
    }
    case Op::Or: {
      for (const auto& a : args) if (a.eval(sources)) return 1;
      return 0;
    }
    case Op::If: return args[0].eval(sources) ? args[1].eval(sources) : args[2].eval(sources);
  }
  return 0;
}

void Expr::collect_sources(std::vector<int>& out) const {
  if (op == Op::Src) out.push_back(value);
  for (const auto& a : args) a.collect_sources(out);
}

ProcessSpec spec_from_json(const json& j) {
  reject_unknown(j, {"kind", "params", "truncation"}, "spec");
  ProcessSpec spec;
  spec.kind = kind_from_string(j.at("kind").get<std::string>());
  spec.truncation = j.value("truncation", std::uint64_t{0});
  const json params = j.value("params", json::object());
  switch (spec.kind) {
    case Kind::Product: {
      reject_unknown(params, {"means"}, "Product params");
      spec.params = ProductParams{mean_rule_from_json(params.at("means"))};
      break;
    }
    case Kind::BlockMu:
    case Kind::BlockNu: {
      reject_unknown(params, {"growth_exponent", "block_size_override"}, "block params");
      BlockFamilyParams p;
      p.growth_exponent = params.value("growth_exponent", 3u);
      if (params.contains("block_size_override") && !params.at("block_size_override").is_null()) {
        p.block_size_override = params.at("block_size_override").get<std::uint64_t>();
      }
      spec.params = p;
      break;
    }
    case Kind::ThinChain: {
      reject_unknown(params, {"levels", "counts"}, "ThinChain params");
      ChainParams p;
      p.sequence.levels = params.at("levels").get<LevelRule>();
      p.sequence.counts = params.at("counts").get<CountRule>();
      spec.params = p;
      break;
    }
    case Kind::WideTree: {
      reject_unknown(params, {"levels", "counts", "max_level", "split_budget"}, "WideTree params");
      TreeParams p;
      p.sequence.levels = params.at("levels").get<LevelRule>();
      p.sequence.counts = params.at("counts").get<CountRule>();
      p.max_level = params.value("max_level", std::size_t{0});
      p.split_budget = params.value("split_budget", std::uint64_t{0});
      spec.params = p;
      break;
    }
    case Kind::SqrtDecay:
    case Kind::BlockSqrt:
      reject_unknown(params, {}, "sqrt params");
      spec.params = SqrtParams{};
      break;
    case Kind::PnaXor:
      reject_unknown(params, {"bits"}, "PnaXor params");
      spec.params = XorParams{params.at("bits").get<unsigned>()};
      break;
    case Kind::Custom: {
      reject_unknown(params, {"sources", "components"}, "Custom params");
      CustomParams p;
      p.sources = params.at("sources").get<std::vector<double>>();
      for (const auto& c : params.at("components")) p.components.push_back(expr_from_json(c));
      spec.params = p;
      break;
    }
  }
  return spec;
}

json spec_to_json(const ProcessSpec& spec) {
  json params = json::object();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ProductParams>) {
          params["means"] = mean_rule_to_json(p.means);
        } else if constexpr (std::is_same_v<P, BlockFamilyParams>) {
          params["growth_exponent"] = p.growth_exponent;
          if (p.block_size_override) params["block_size_override"] = *p.block_size_override;
        } else if constexpr (std::is_same_v<P, ChainParams>) {
          params["levels"] = p.sequence.levels;
          params["counts"] = p.sequence.counts;
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          params["levels"] = p.sequence.levels;
          params["counts"] = p.sequence.counts;
          if (p.max_level) params["max_level"] = p.max_level;
          if (p.split_budget) params["split_budget"] = p.split_budget;
        } else if constexpr (std::is_same_v<P, XorParams>) {
          params["bits"] = p.bits;
        } else if constexpr (std::is_same_v<P, CustomParams>) {
          params["sources"] = p.sources;
          params["components"] = json::array();
          for (const auto& c : p.components) params["components"].push_back(expr_to_json(c));
        }
      },
      spec.params);
  json out = {{"kind", to_string(spec.kind)}, {"params", params}};
  if (spec.truncation) out["truncation"] = spec.truncation;
  return out;
}

ProcessSpec load_spec(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, path + ": " + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, path + ": " + e.what());
  }
}

GammaDelta gamma_delta(unsigned k) {
  if (k == 0) throw Error(ErrorCode::InvalidSpec, "block index must be >= 1");
  const double p = pow2(-static_cast<int>(k));
  const double a = 1.0 - 0.5 * p;
  const double c = p - p * p;
  // delta = a - sqrt(a^2 - c), rationalized to avoid cancellation for large k.
  const double delta = c / (a + std::sqrt(a * a - c));
  const double gamma = (p - delta) / (1.0 - delta);
  return {gamma, delta};
}

BlockParams block_params(const ProcessSpec& spec, unsigned k) {
  if (spec.kind != Kind::BlockMu && spec.kind != Kind::BlockNu) {
    throw Error(ErrorCode::UnsupportedKind, to_string(spec.kind));
  }
  const auto gd = gamma_delta(k);
  return {k, gd.gamma, gd.delta, std::get<BlockFamilyParams>(spec.params).block_size_override};
}

unsigned block_of(const ProcessSpec& spec, Component t) {
  if (t == 0) throw Error(ErrorCode::IndexOutOfTruncation, "components are 1-based");
  if (spec.kind == Kind::BlockSqrt) return static_cast<unsigned>(std::bit_width(t));
  if (spec.kind != Kind::BlockMu && spec.kind != Kind::BlockNu) {
    throw Error(ErrorCode::UnsupportedKind, to_string(spec.kind));
  }
  const auto& p = std::get<BlockFamilyParams>(spec.params);
  if (p.block_size_override) return static_cast<unsigned>((t - 1) / *p.block_size_override + 1);
  if (t <= 2) return 1;
  // smallest k with t <= 2^(k^g), i.e. bit_width(t-1) <= k^g
  const auto bits = static_cast<std::uint64_t>(std::bit_width(t - 1));
  for (unsigned k = 1;; ++k) {
    std::uint64_t power = 1;
    for (unsigned e = 0; e < p.growth_exponent; ++e) power *= k;
    if (bits <= power) return k;
  }
}

double log_block_size(const ProcessSpec& spec, unsigned k) {
  const auto& p = std::get<BlockFamilyParams>(spec.params);
  if (p.block_size_override) return std::log(static_cast<double>(*p.block_size_override));
  if (k == 1) return std::log(2.0);
  const double lo = std::pow(static_cast<double>(k - 1), p.growth_exponent);
  const double hi = std::pow(static_cast<double>(k), p.growth_exponent);
  return hi * std::log(2.0) + std::log1p(-std::exp2(lo - hi));
}

std::optional<std::pair<Component, Component>> block_range(const ProcessSpec& spec, unsigned k) {
  const auto& p = std::get<BlockFamilyParams>(spec.params);
  if (p.block_size_override) {
    const auto m = *p.block_size_override;
    return std::make_pair((k - 1) * m + 1, k * m);
  }
  if (k == 1) return std::make_pair(Component{1}, Component{2});
  std::uint64_t lo = 1, hi = 1;
  for (unsigned e = 0; e < p.growth_exponent; ++e) {
    lo *= k - 1;
    hi *= k;
  }
  if (hi > 63) return std::nullopt;
  return std::make_pair((Component{1} << lo) + 1, Component{1} << hi);
}

ProcessModel::ProcessModel(ProcessSpec spec) : spec_(std::move(spec)) {
  switch (spec_.kind) {
    case Kind::Product: {
      const auto& rule = std::get<ProductParams>(spec_.params).means;
      if (rule.size() && !spec_.truncation) spec_.truncation = *rule.size();
      if (rule.size() && *rule.size() < spec_.truncation) {
        throw Error(ErrorCode::IndexOutOfTruncation, "mean list shorter than truncation");
      }
      if (rule.form == MeanRule::Form::List) {
        for (double v : rule.values) {
          if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidSpec, "means must lie in [0,1]");
        }
      }
      break;
    }
    case Kind::BlockMu:
    case Kind::BlockNu: {
      const auto& p = std::get<BlockFamilyParams>(spec_.params);
      if (p.growth_exponent < 1) throw Error(ErrorCode::InvalidSpec, "growth exponent must be >= 1");
      if (p.block_size_override && *p.block_size_override == 0) {
        throw Error(ErrorCode::InvalidSpec, "block size override must be positive");
      }
      break;
    }
    case Kind::ThinChain: {
      chain_ = std::make_shared<ThinChain>(std::get<ChainParams>(spec_.params).sequence, spec_.truncation);
      if (!spec_.truncation && chain_->finite()) spec_.truncation = chain_->materialized_components();
      if (chain_->materialized_components() < spec_.truncation) {
        throw Error(ErrorCode::IndexOutOfTruncation, "chain has fewer components than the truncation");
      }
      break;
    }
    case Kind::WideTree: {
      const auto& p = std::get<TreeParams>(spec_.params);
      std::uint64_t budget = p.split_budget;
      if (budget == 0) {
        if (p.max_level == 0 && !p.sequence.discontinuities()) {
          throw Error(ErrorCode::InvalidSpec, "infinite tree needs max_level or split_budget");
        }
        budget = budget_through_level(p.sequence, p.max_level ? p.max_level : *p.sequence.discontinuities());
      }
      tree_ = std::make_shared<SkeletonTree>(build_skeleton(p.sequence.levels, p.sequence.counts, budget));
      if (!spec_.truncation) spec_.truncation = tree_->leaf_count();
      if (tree_->leaf_count() < spec_.truncation) {
        throw Error(ErrorCode::IndexOutOfTruncation, "tree has fewer leaves than the truncation");
      }
      break;
    }
    case Kind::SqrtDecay:
    case Kind::BlockSqrt:
      break;
    case Kind::PnaXor: {
      const auto bits = std::get<XorParams>(spec_.params).bits;
      if (bits < 1 || bits > 20) throw Error(ErrorCode::InvalidSpec, "PnaXor bits must lie in [1, 20]");
      custom_ = std::make_shared<CustomParams>(expand_xor(bits));
      if (!spec_.truncation) spec_.truncation = custom_->components.size();
      if (custom_->components.size() < spec_.truncation) {
        throw Error(ErrorCode::IndexOutOfTruncation, "PnaXor has 2^bits - 1 components");
      }
      break;
    }
    case Kind::Custom: {
      custom_ = std::make_shared<CustomParams>(std::get<CustomParams>(spec_.params));
      if (!spec_.truncation) spec_.truncation = custom_->components.size();
      if (custom_->components.size() < spec_.truncation) {
        throw Error(ErrorCode::IndexOutOfTruncation, "fewer components than the truncation");
      }
      for (const auto& c : custom_->components) {
        std::vector<int> used;
        c.collect_sources(used);
        for (int s : used) {
          if (s < 0 || static_cast<std::size_t>(s) >= custom_->sources.size()) {
            throw Error(ErrorCode::InvalidSpec, "expression references unknown source");
          }
        }
      }
      for (double p : custom_->sources) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidSpec, "source probabilities must lie in [0,1]");
      }
      break;
    }
  }
}

const SkeletonTree& ProcessModel::tree() const {
  if (!tree_) throw Error(ErrorCode::UnsupportedKind, "not a tree model");
  return *tree_;
}

const ThinChain& ProcessModel::chain() const {
  if (!chain_) throw Error(ErrorCode::UnsupportedKind, "not a chain model");
  return *chain_;
}

const BlockFamilyParams& ProcessModel::blocks() const {
  if (spec_.kind != Kind::BlockMu && spec_.kind != Kind::BlockNu) throw Error(ErrorCode::UnsupportedKind, "not a block model");
  return std::get<BlockFamilyParams>(spec_.params);
}

void ProcessModel::check_index(Component i) const {
  if (i == 0 || (spec_.truncation && i > spec_.truncation)) {
    throw Error(ErrorCode::IndexOutOfTruncation,
                "component " + std::to_string(i) + " outside [1, " + std::to_string(spec_.truncation) + "]");
  }
}

void enumerate_sources(const CustomParams& params, const std::vector<int>& involved,
                       const std::function<void(double, const std::vector<int>&)>& visit) {
  if (involved.size() > 20) throw Error(ErrorCode::EnumerationTooLarge, std::to_string(involved.size()) + " sources");
  std::vector<int> values(params.sources.size(), 0);
  const std::uint64_t states = std::uint64_t{1} << involved.size();
  for (std::uint64_t mask = 0; mask < states; ++mask) {
    double w = 1.0;
    for (std::size_t b = 0; b < involved.size(); ++b) {
      const int bit = static_cast<int>(mask >> b & 1);
      values[involved[b]] = bit;
      const double p = params.sources[involved[b]];
      w *= bit ? p : 1.0 - p;
    }
    visit(w, values);
  }
}

double mean(const ProcessModel& model, Component i) {
  model.check_index(i);
  switch (model.kind()) {
    case Kind::Product: return std::get<ProductParams>(model.spec().params).means(i);
    case Kind::PnaXor:
    case Kind::Custom: return custom_moment(model.custom(), {i});
    default: return 0.5;
  }
}

double cross_moment(const ProcessModel& model, Component i, Component j) {
  model.check_index(i);
  model.check_index(j);
  if (i == j) return mean(model, i);
  const auto& spec = model.spec();
  switch (model.kind()) {
    case Kind::Product: return mean(model, i) * mean(model, j);
    case Kind::BlockMu:
    case Kind::BlockNu: return block_pair_moment(model.kind(), block_of(spec, i), block_of(spec, j));
    case Kind::ThinChain: return 0.5 * (1.0 - model.chain().xi(i, j));
    case Kind::WideTree: return 0.5 * (1.0 - leaf_distance(model.tree(), i - 1, j - 1));
    case Kind::SqrtDecay: {
      const double a = 1.0 / std::sqrt(static_cast<double>(i)), b = 1.0 / std::sqrt(static_cast<double>(j));
      return 0.25 + 0.25 * (1.0 - a) * (1.0 - b);
    }
    case Kind::BlockSqrt: {
      const unsigned li = block_of(spec, i), lj = block_of(spec, j);
      const double stay_i = 1.0 - 1.0 / std::sqrt(static_cast<double>(i));
      const double stay_j = 1.0 - 1.0 / std::sqrt(static_cast<double>(j));
      const double block_i = 1.0 - 1.0 / std::sqrt(static_cast<double>(li));
      const double block_j = 1.0 - 1.0 / std::sqrt(static_cast<double>(lj));
      const double both = li == lj ? block_i * stay_i * stay_j : block_i * block_j * stay_i * stay_j;
      return 0.25 + 0.25 * both;
    }
    case Kind::PnaXor: return 0.25;
    case Kind::Custom: return custom_moment(model.custom(), {i, j});
  }
  throw Error(ErrorCode::NoClosedForm, to_string(model.kind()));
}

double third_moment(const ProcessModel& model, Component i, Component j, Component k) {
  if (model.kind() != Kind::BlockMu && model.kind() != Kind::BlockNu) {
    throw Error(ErrorCode::UnsupportedKind, std::string("third moments for ") + to_string(model.kind()));
  }
  model.check_index(i);
  model.check_index(j);
  model.check_index(k);
  if (i == j) return cross_moment(model, i, k);
  if (i == k || j == k) return cross_moment(model, i, j);
  const auto& spec = model.spec();
  const unsigned li = block_of(spec, i), lj = block_of(spec, j), lk = block_of(spec, k);
  return block_third_moment(model.kind(), li, lj, lk);
}

double block_cross_moment(Kind kind, unsigned k, unsigned l) {
  if (kind != Kind::BlockMu && kind != Kind::BlockNu) throw Error(ErrorCode::UnsupportedKind, to_string(kind));
  return block_pair_moment(kind, k, l);
}

double block_third_moment(Kind kind, unsigned li, unsigned lj, unsigned lk) {
  if (kind != Kind::BlockMu && kind != Kind::BlockNu) throw Error(ErrorCode::UnsupportedKind, to_string(kind));
  if (li == lj && lj == lk) return block_triple_same(kind, li);
  // Put the component whose block differs from both others first.
  unsigned lo = li, la = lj, lb = lk;
  if (li == lj) std::swap(lo, lb);       // k is the odd one
  else if (li == lk) std::swap(lo, la);  // j is the odd one
  const double leave = leave_probability(kind, lo);
  return (1.0 - leave) * block_anchor_moment(kind, la, lb) + leave * 0.5 * block_pair_moment(kind, la, lb);
}

double mean(const ProcessSpec& spec, Component i) { return mean(ProcessModel(spec), i); }
double cross_moment(const ProcessSpec& spec, Component i, Component j) { return cross_moment(ProcessModel(spec), i, j); }
double third_moment(const ProcessSpec& spec, Component i, Component j, Component k) {
  return third_moment(ProcessModel(spec), i, j, k);
}

}  // namespace corrbin
