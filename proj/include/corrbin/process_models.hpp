#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "corrbin/sequences.hpp"
#include "corrbin/trees.hpp"
#include "json.hpp"

namespace corrbin {

enum class Kind { Product, BlockMu, BlockNu, ThinChain, WideTree, SqrtDecay, BlockSqrt, PnaXor, Custom };

const char* to_string(Kind kind);
Kind kind_from_string(const std::string& name);

// Mean sequence p_j, j >= 1.
struct MeanRule {
  enum class Form { Power, Constant, List };
  Form form = Form::Constant;
  double scale = 1.0;     // Power: p_j = scale * (j+1)^(-exponent)
  double exponent = 1.0;
  double value = 0.5;     // Constant
  std::vector<double> values;  // List: p_1, p_2, ...

  double operator()(Component j) const;
  std::optional<std::uint64_t> size() const;
};

struct ProductParams {
  MeanRule means;
};

struct BlockFamilyParams {
  unsigned growth_exponent = 3;  // S_k = {2^((k-1)^g) < t <= 2^(k^g)}
  std::optional<std::uint64_t> block_size_override;
};

struct ChainParams {
  LevelCountSequence sequence;
};

struct TreeParams {
  LevelCountSequence sequence;
  std::uint64_t split_budget = 0;  // 0: derived from max_level
  std::size_t max_level = 0;
};

struct SqrtParams {};

struct XorParams {
  unsigned bits = 2;  // components: XOR over every nonempty subset of `bits` fair sources
};

// Boolean formula over shared Bernoulli sources.
struct Expr {
  enum class Op { Const, Src, Not, Xor, And, Or, If };
  Op op = Op::Const;
  int value = 0;  // Const: 0/1; Src: source index
  std::vector<Expr> args;  // If: condition, then, else

  int eval(const std::vector<int>& sources) const;
  void collect_sources(std::vector<int>& out) const;
};

struct CustomParams {
  std::vector<double> sources;    // P(source = 1)
  std::vector<Expr> components;   // component i is components[i-1]
};

using KindParams = std::variant<ProductParams, BlockFamilyParams, ChainParams, TreeParams, SqrtParams, XorParams,
                                CustomParams>;

struct ProcessSpec {
  Kind kind = Kind::Product;
  KindParams params = ProductParams{};
  std::uint64_t truncation = 0;  // 0: untruncated (finite families default to their size)
};

ProcessSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ProcessSpec& spec);
ProcessSpec load_spec(const std::string& path);

struct GammaDelta {
  double gamma = 0.0;
  double delta = 0.0;
};

// Solves (1-d)(2g-g^2) = 2^-k and g + d - g d = 2^-k.
GammaDelta gamma_delta(unsigned k);

struct BlockParams {
  unsigned k = 1;
  double gamma = 0.0;
  double delta = 0.0;
  std::optional<std::uint64_t> block_size_override;
};

BlockParams block_params(const ProcessSpec& spec, unsigned k);

// Block of component t (BlockMu/BlockNu: S_k with component 1 in block 1;
// BlockSqrt: I_l = [2^(l-1), 2^l)).
unsigned block_of(const ProcessSpec& spec, Component t);

// Natural log of the block size |S_k| (or of the override).
double log_block_size(const ProcessSpec& spec, unsigned k);

// [first, last] components of block k when both fit in 64 bits.
std::optional<std::pair<Component, Component>> block_range(const ProcessSpec& spec, unsigned k);

// Compiled, immutable view of a spec with derived structures (trees, chains).
class ProcessModel {
 public:
  explicit ProcessModel(ProcessSpec spec);

  const ProcessSpec& spec() const { return spec_; }
  Kind kind() const { return spec_.kind; }
  std::uint64_t truncation() const { return spec_.truncation; }
  const SkeletonTree& tree() const;
  const ThinChain& chain() const;
  const BlockFamilyParams& blocks() const;
  const CustomParams& custom() const { return *custom_; }

  void check_index(Component i) const;

 private:
  ProcessSpec spec_;
  std::shared_ptr<const SkeletonTree> tree_;
  std::shared_ptr<const ThinChain> chain_;
  std::shared_ptr<const CustomParams> custom_;  // also holds the PnaXor expansion
};

double mean(const ProcessModel& model, Component i);
double cross_moment(const ProcessModel& model, Component i, Component j);
double third_moment(const ProcessModel& model, Component i, Component j, Component k);

// Moments of distinct block-family components given only their block numbers.
double block_cross_moment(Kind kind, unsigned k, unsigned l);
double block_third_moment(Kind kind, unsigned li, unsigned lj, unsigned lk);

double mean(const ProcessSpec& spec, Component i);
double cross_moment(const ProcessSpec& spec, Component i, Component j);
double third_moment(const ProcessSpec& spec, Component i, Component j, Component k);

// Exact joint law of a Custom/PnaXor model over its sources: calls
// visit(weight, source values) for every assignment. Throws
// EnumerationTooLarge beyond 2^20 states.
void enumerate_sources(const CustomParams& params, const std::vector<int>& involved,
                       const std::function<void(double, const std::vector<int>&)>& visit);

}  // namespace corrbin
