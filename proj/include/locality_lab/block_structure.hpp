#pragma once

#include <span>
#include <vector>

#include "locality_lab/types.hpp"

namespace locality_lab {

// Fixed decomposition of R^d into b contiguous blocks x = (x_1, ..., x_b).
// Block indices are 0-based; reports convert to 1-based at the boundary.
class BlockStructure {
 public:
  // Throws std::invalid_argument on an empty list or a zero size.
  static BlockStructure make(std::span<const Index> block_sizes);
  static BlockStructure uniform(Index num_blocks, Index block_size);

  Index num_blocks() const { return sizes_.size(); }
  Index total_dim() const { return total_dim_; }
  Index size(Index i) const { return sizes_.at(i); }
  Index offset(Index i) const { return offsets_.at(i); }
  const std::vector<Index>& sizes() const { return sizes_; }
  const std::vector<Index>& offsets() const { return offsets_; }
  Index max_block_size() const;
  bool all_scalar() const;
  // Block owning global coordinate c.
  Index block_of(Index c) const;

  Vector slice(const Vector& v, Index i) const;
  // Writes block i of v in place.
  void embed(Vector& v, Index i, const Vector& block) const;
  // Rows of block i / columns of block j.
  Matrix block(const Matrix& a, Index i, Index j) const;

  friend bool operator==(const BlockStructure&, const BlockStructure&) = default;

 private:
  BlockStructure() = default;
  void check_index(Index i) const;
  void check_length(const Vector& v) const;

  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_dim_ = 0;
};

inline BlockStructure make_blocks(std::span<const Index> block_sizes) {
  return BlockStructure::make(block_sizes);
}

inline Vector slice_block(const BlockStructure& blocks, const Vector& v, Index i) {
  return blocks.slice(v, i);
}

}  // namespace locality_lab
