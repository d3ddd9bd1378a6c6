#pragma once

#include <cstdint>

namespace corrbin {

// Master seed plus replicate id. Every random quantity in the library is a
// pure function of this pair and a (sample, tag, index) key.
struct SeedLineage {
  std::uint64_t master = 0;
  std::uint64_t replicate = 0;
};

// Source tags for keyed draws. Values are part of the artifact format: changing
// them changes every sampled number.
enum class Tag : std::uint64_t {
  Z = 1,          // fair coins Z_0, Z_t (BlockMu/BlockNu/ThinChain)
  B = 2,          // BlockMu switch B_k
  C = 3,          // BlockNu per-component switch C_t
  D = 4,          // BlockNu per-block switch D_k
  Y = 5,          // BlockNu block coin Y_k; sqrt families Y_i
  U = 6,          // ThinChain nested-event uniforms U_k
  A = 7,          // sqrt families A_i
  BSqrt = 8,      // BlockSqrt B_i
  Source = 9,     // Custom / PnaXor sources
  NodeU = 10,     // tree node switch uniforms
  NodeZ = 11,     // tree node fresh coins
  TailU = 12,     // tree leaf tail-collapse uniforms
  TailZ = 13,     // tree leaf tail fresh coins
  Sup = 14,       // sampled-max inverse CDF draw
  Product = 15,   // product-measure uniforms
  Witness = 16,   // auxiliary draws in witness verification
};

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class KeyedRng {
 public:
  explicit KeyedRng(SeedLineage lineage)
      : base_(mix64(mix64(lineage.master) ^ (lineage.replicate * 0xd1342543de82ef95ULL + 1))) {}

  std::uint64_t bits(std::uint64_t sample, Tag tag, std::uint64_t index) const {
    std::uint64_t h = mix64(base_ ^ (static_cast<std::uint64_t>(tag) * 0xa0761d6478bd642fULL));
    h = mix64(h ^ index);
    return mix64(h ^ (sample * 0xe7037ed1a0b428dbULL));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t sample, Tag tag, std::uint64_t index) const {
    return static_cast<double>(bits(sample, tag, index) >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p, std::uint64_t sample, Tag tag, std::uint64_t index) const {
    return uniform(sample, tag, index) < p;
  }

  int coin(std::uint64_t sample, Tag tag, std::uint64_t index) const {
    return static_cast<int>(bits(sample, tag, index) >> 63);
  }

 private:
  std::uint64_t base_;
};

}  // namespace corrbin
