#include "locality_lab/block_structure.hpp"

#include <algorithm>
#include <string>

namespace locality_lab {

BlockStructure BlockStructure::make(std::span<const Index> block_sizes) {
  if (block_sizes.empty()) throw std::invalid_argument("block_sizes must be nonempty");
  BlockStructure s;
  s.sizes_.assign(block_sizes.begin(), block_sizes.end());
  s.offsets_.reserve(s.sizes_.size());
  for (Index i = 0; i < s.sizes_.size(); ++i) {
    if (s.sizes_[i] == 0)
      throw std::invalid_argument("block " + std::to_string(i + 1) + " has size 0");
    s.offsets_.push_back(s.total_dim_);
    s.total_dim_ += s.sizes_[i];
  }
  return s;
}

BlockStructure BlockStructure::uniform(Index num_blocks, Index block_size) {
  std::vector<Index> sizes(num_blocks, block_size);
  return make(sizes);
}

Index BlockStructure::max_block_size() const {
  return *std::max_element(sizes_.begin(), sizes_.end());
}

bool BlockStructure::all_scalar() const {
  return std::all_of(sizes_.begin(), sizes_.end(), [](Index s) { return s == 1; });
}

Index BlockStructure::block_of(Index c) const {
  if (c >= total_dim_) throw std::out_of_range("coordinate out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), c);
  return static_cast<Index>(it - offsets_.begin()) - 1;
}

void BlockStructure::check_index(Index i) const {
  if (i >= sizes_.size())
    throw std::out_of_range("block index " + std::to_string(i) + " out of range for " +
                            std::to_string(sizes_.size()) + " blocks");
}

void BlockStructure::check_length(const Vector& v) const {
  if (static_cast<Index>(v.size()) != total_dim_)
    throw std::invalid_argument("vector length " + std::to_string(v.size()) +
                                " does not match dimension " + std::to_string(total_dim_));
}

Vector BlockStructure::slice(const Vector& v, Index i) const {
  check_index(i);
  check_length(v);
  return v.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(sizes_[i]));
}

void BlockStructure::embed(Vector& v, Index i, const Vector& block) const {
  check_index(i);
  check_length(v);
  if (static_cast<Index>(block.size()) != sizes_[i])
    throw std::invalid_argument("block length mismatch");
  v.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(sizes_[i])) = block;
}

Matrix BlockStructure::block(const Matrix& a, Index i, Index j) const {
  check_index(i);
  check_index(j);
  if (static_cast<Index>(a.rows()) != total_dim_ || static_cast<Index>(a.cols()) != total_dim_)
    throw std::invalid_argument("matrix shape does not match block structure");
  return a.block(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(offsets_[j]),
                 static_cast<Eigen::Index>(sizes_[i]), static_cast<Eigen::Index>(sizes_[j]));
}

}  // namespace locality_lab
