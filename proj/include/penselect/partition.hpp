// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_PARTITION_HPP
#define PENSELECT_PARTITION_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace penselect {

struct Block {
  int lo = 1;  // 1-based, inclusive
  int hi = 1;

  int size() const { return hi - lo + 1; }
  friend bool operator==(const Block&, const Block&) = default;
};

// An ordered partition of {1,...,n} into consecutive integer intervals.
class Partition {
 public:
  Partition(int n, std::vector<Block> blocks) : n_(n), blocks_(std::move(blocks)) {
    if (n_ < 1) throw std::invalid_argument("partition of an empty range");
    if (blocks_.empty()) throw std::invalid_argument("partition needs at least one block");
    int expect = 1;
    for (const Block& b : blocks_) {
      if (b.lo != expect || b.hi < b.lo) {
        throw std::invalid_argument("blocks must be consecutive, ordered and cover {1,...,n}");
      }
      expect = b.hi + 1;
    }
    if (expect != n_ + 1) throw std::invalid_argument("blocks do not cover {1,...,n}");
  }

  static Partition trivial(int n) { return Partition(n, {Block{1, n}}); }

  // n must be divisible by num_blocks.
  static Partition equal_blocks(int n, int num_blocks) {
    if (num_blocks < 1 || n % num_blocks != 0) {
      throw std::invalid_argument("equal_blocks requires num_blocks dividing n");
    }
    std::vector<Block> blocks;
    blocks.reserve(static_cast<size_t>(num_blocks));
    const int w = n / num_blocks;
    for (int k = 0; k < num_blocks; ++k) blocks.push_back(Block{k * w + 1, (k + 1) * w});
    return Partition(n, std::move(blocks));
  }

  int n() const { return n_; }
  int size() const { return static_cast<int>(blocks_.size()); }  // |m|
  const std::vector<Block>& blocks() const { return blocks_; }

  int min_block() const {
    int best = blocks_.front().size();
    for (const Block& b : blocks_) best = std::min(best, b.size());
    return best;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  int n_;
  std::vector<Block> blocks_;
};

// Common refinement m v m' = { I n I' nonempty }.  For consecutive-block
// partitions this is the union of the two cut sets.
inline Partition refine(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw std::invalid_argument("refine of partitions with different n");
  std::vector<int> cuts;
  cuts.reserve(static_cast<size_t>(a.size() + b.size()));
  for (const Block& blk : a.blocks()) cuts.push_back(blk.hi);
  for (const Block& blk : b.blocks()) cuts.push_back(blk.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Block> blocks;
  blocks.reserve(cuts.size());
  int lo = 1;
  for (int hi : cuts) {
    blocks.push_back(Block{lo, hi});
    lo = hi + 1;
  }
  return Partition(a.n(), std::move(blocks));
}

namespace detail {

inline std::vector<std::vector<Block>> dyadic_block_partitions(int lo, int hi, int min_block) {
  std::vector<std::vector<Block>> out;
  out.push_back({Block{lo, hi}});
  const int size = hi - lo + 1;
  if (size / 2 >= min_block) {
    const int mid = (lo + hi) / 2;  // left half takes ceil(size/2)
    const auto lefts = dyadic_block_partitions(lo, mid, min_block);
    const auto rights = dyadic_block_partitions(mid + 1, hi, min_block);
    for (const auto& l : lefts) {
      for (const auto& r : rights) {
        std::vector<Block> joined;
        joined.reserve(l.size() + r.size());
        joined.insert(joined.end(), l.begin(), l.end());
        joined.insert(joined.end(), r.begin(), r.end());
        out.push_back(std::move(joined));
      }
    }
  }
  return out;
}

}  // namespace detail

// All partitions reachable by recursive midpoint splits of {1,...,n} whose
// blocks all have size >= min_block.  The trivial partition comes first and
// the finest one last.
inline std::vector<Partition> dyadic_partitions(int n, int min_block) {
  if (n < 2) throw std::invalid_argument("dyadic_partitions requires n >= 2");
  if (min_block < 1 || min_block > n) {
    throw std::invalid_argument("min_block must lie in [1, n]");
  }
  auto raw = detail::dyadic_block_partitions(1, n, min_block);
  std::vector<Partition> out;
  out.reserve(raw.size());
  for (auto& blocks : raw) out.emplace_back(n, std::move(blocks));
  return out;
}

}  // namespace penselect

#endif  // PENSELECT_PARTITION_HPP
