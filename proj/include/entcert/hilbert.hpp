#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "entcert/common.hpp"

namespace entcert {

// Tensor-product Hilbert space bookkeeping.  Party 0 is the most
// significant tensor factor, so a global basis index decomposes as
// i = i_0 * (d_1 * ... * d_{n-1}) + i_1 * (d_2 * ...) + ... + i_{n-1}.
class HilbertStructure {
 public:
  HilbertStructure() = default;

  explicit HilbertStructure(std::vector<int> local_dims)
      : local_dims_(std::move(local_dims)) {
    if (local_dims_.empty())
      throw structural_error("HilbertStructure needs at least one party");
    total_dim_ = 1;
    for (int d : local_dims_) {
      if (d < 2) throw structural_error("every local dimension must be >= 2");
      total_dim_ *= d;
    }
  }

  int num_parties() const { return static_cast<int>(local_dims_.size()); }
  int total_dim() const { return total_dim_; }
  const std::vector<int>& local_dims() const { return local_dims_; }
  int local_dim(int party) const { return local_dims_.at(party); }

  // Product of the local dimensions over a party subset.
  int dim_of(const std::vector<int>& parties) const {
    int d = 1;
    for (int p : parties) d *= local_dim(p);
    return d;
  }

  bool operator==(const HilbertStructure& o) const {
    return local_dims_ == o.local_dims_;
  }
  bool operator!=(const HilbertStructure& o) const { return !(*this == o); }

  // Decomposes every global index into (index within `parties`, index within
  // the complement).  Both sub-indices enumerate their parties in ascending
  // order, most significant first.
  struct SplitMaps {
    std::vector<int32_t> sub;   // size total_dim
    std::vector<int32_t> rest;  // size total_dim
    int sub_dim = 1;
    int rest_dim = 1;
  };

  SplitMaps split(const std::vector<int>& parties) const {
    std::vector<char> in(local_dims_.size(), 0);
    for (int p : parties) {
      if (p < 0 || p >= num_parties())
        throw structural_error("party index out of range");
      if (in[p]) throw structural_error("duplicate party index");
      in[p] = 1;
    }
    SplitMaps m;
    for (int p = 0; p < num_parties(); ++p)
      (in[p] ? m.sub_dim : m.rest_dim) *= local_dims_[p];
    m.sub.resize(total_dim_);
    m.rest.resize(total_dim_);
    for (int i = 0; i < total_dim_; ++i) {
      int r = i, sub = 0, rest = 0;
      for (int p = 0; p < num_parties(); ++p) {
        // digits extracted most-significant party first
        int stride = 1;
        for (int q = p + 1; q < num_parties(); ++q) stride *= local_dims_[q];
        int digit = (r / stride);
        r -= digit * stride;
        if (in[p])
          sub = sub * local_dims_[p] + digit;
        else
          rest = rest * local_dims_[p] + digit;
      }
      m.sub[i] = static_cast<int32_t>(sub);
      m.rest[i] = static_cast<int32_t>(rest);
    }
    return m;
  }

 private:
  std::vector<int> local_dims_;
  int total_dim_ = 1;
};

// A partition of the parties {0..n-1} into k disjoint nonempty blocks.
class PartitionStructure {
 public:
  PartitionStructure() = default;

  PartitionStructure(std::vector<std::vector<int>> blocks, int num_parties)
      : blocks_(std::move(blocks)) {
    std::vector<char> seen(num_parties, 0);
    if (blocks_.empty()) throw structural_error("partition has no blocks");
    for (auto& b : blocks_) {
      if (b.empty()) throw structural_error("partition block is empty");
      std::sort(b.begin(), b.end());
      for (int p : b) {
        if (p < 0 || p >= num_parties)
          throw structural_error("party index out of range in partition");
        if (seen[p]) throw structural_error("partition blocks overlap");
        seen[p] = 1;
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw structural_error("partition does not cover all parties");
    num_parties_ = num_parties;
  }

  static PartitionStructure finest(int num_parties) {
    std::vector<std::vector<int>> blocks;
    for (int p = 0; p < num_parties; ++p) blocks.push_back({p});
    return PartitionStructure(std::move(blocks), num_parties);
  }

  static PartitionStructure single_block(int num_parties) {
    std::vector<int> all(num_parties);
    std::iota(all.begin(), all.end(), 0);
    return PartitionStructure({all}, num_parties);
  }

  int k() const { return static_cast<int>(blocks_.size()); }
  int num_parties() const { return num_parties_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(int i) const { return blocks_.at(i); }

  bool operator==(const PartitionStructure& o) const {
    return num_parties_ == o.num_parties_ && blocks_ == o.blocks_;
  }

 private:
  std::vector<std::vector<int>> blocks_;
  int num_parties_ = 0;
};

// All set partitions of n parties into exactly k blocks, in restricted
// growth string order.  Blocks are labelled by first occurrence, which makes
// the enumeration (and hence tie-breaking on it) deterministic.
inline std::vector<PartitionStructure> partitions_into_k_blocks(int n, int k) {
  if (n < 1 || k < 1 || k > n)
    throw std::domain_error("partitions_into_k_blocks: need 1 <= k <= n");
  std::vector<PartitionStructure> out;
  std::vector<int> rgs(n, 0);
  auto emit = [&] {
    std::vector<std::vector<int>> blocks(k);
    for (int p = 0; p < n; ++p) blocks[rgs[p]].push_back(p);
    out.emplace_back(std::move(blocks), n);
  };
  // depth-first over restricted growth strings with exactly k classes
  std::function<void(int, int)> rec = [&](int pos, int max_used) {
    if (pos == n) {
      if (max_used + 1 == k) emit();
      return;
    }
    int limit = std::min(max_used + 1, k - 1);
    for (int c = 0; c <= limit; ++c) {
      // prune: remaining positions must be able to reach k classes
      int used_after = std::max(max_used, c) + 1;
      if (used_after + (n - pos - 1) < k) continue;
      rgs[pos] = c;
      rec(pos + 1, std::max(max_used, c));
    }
  };
  rec(0, -1);
  return out;
}

// Kronecker product, first argument most significant.
inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vec kron(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Embeds an operator acting on `parties` (joint space, ascending order) into
// the full space, identity elsewhere.
inline Mat embed_operator(const Mat& local, const HilbertStructure& hs,
                          const std::vector<int>& parties) {
  auto maps = hs.split(parties);
  if (local.rows() != maps.sub_dim || local.cols() != maps.sub_dim)
    throw structural_error("embed_operator: local operator dimension mismatch");
  const int d = hs.total_dim();
  // group global indices by rest index so the fill is a simple scatter
  Mat out = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (maps.rest[i] == maps.rest[j]) out(i, j) = local(maps.sub[i], maps.sub[j]);
  return out;
}

}  // namespace entcert
