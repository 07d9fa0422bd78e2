#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "entcert/hilbert.hpp"
#include "entcert/parallel.hpp"
#include "entcert/statespace.hpp"

namespace entcert {

// Pure k-partite product state, stored as one unit vector per block.
class ProductVertex {
 public:
  ProductVertex() = default;

  ProductVertex(HilbertStructure structure, PartitionStructure partition,
                std::vector<Vec> local_vectors)
      : structure_(std::move(structure)),
        partition_(std::move(partition)),
        local_vectors_(std::move(local_vectors)) {
    if (static_cast<int>(local_vectors_.size()) != partition_.k())
      throw structural_error("ProductVertex: one vector per block required");
    for (int b = 0; b < partition_.k(); ++b) {
      const int dim = structure_.dim_of(partition_.block(b));
      if (local_vectors_[b].size() != dim)
        throw structural_error("ProductVertex: block vector dimension mismatch");
      if (std::abs(local_vectors_[b].norm() - 1.0) > tol::unit_norm)
        throw structural_error("ProductVertex: block vector not unit norm");
    }
  }

  const HilbertStructure& structure() const { return structure_; }
  const PartitionStructure& partition() const { return partition_; }
  const std::vector<Vec>& local_vectors() const { return local_vectors_; }

  // Assembles the full state vector in the global basis.
  Vec full_vector() const {
    const int d = structure_.total_dim();
    std::vector<HilbertStructure::SplitMaps> maps;
    maps.reserve(partition_.k());
    for (int b = 0; b < partition_.k(); ++b) maps.push_back(structure_.split(partition_.block(b)));
    Vec v(d);
    for (int i = 0; i < d; ++i) {
      Complex amp = 1.0;
      for (int b = 0; b < partition_.k(); ++b) amp *= local_vectors_[b](maps[b].sub[i]);
      v(i) = amp;
    }
    return v;
  }

  Mat projector() const {
    Vec v = full_vector();
    return v * v.adjoint();
  }

 private:
  HilbertStructure structure_;
  PartitionStructure partition_;
  std::vector<Vec> local_vectors_;
};

struct LmoConfig {
  int restarts = 10;
  double sweep_tol = 1e-10;
  int max_sweeps = 200;
  uint64_t rng_seed = 0;

  void validate() const {
    if (restarts < 1) throw std::domain_error("LmoConfig: restarts >= 1 required");
    if (!(sweep_tol > 0)) throw std::domain_error("LmoConfig: sweep_tol > 0 required");
    if (max_sweeps < 1) throw std::domain_error("LmoConfig: max_sweeps >= 1 required");
  }
};

struct LmoResult {
  ProductVertex vertex;
  double value = std::numeric_limits<double>::infinity();
  int partition_index = 0;  // index in the enumeration order (kseparable_lmo)
  int sweeps = 0;
};

namespace detail {

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  // splitmix64 step over the combined word
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Vec haar_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(g(rng), g(rng));
  v.normalize();
  return v;
}

// Smallest eigenpair of a Hermitian matrix.  Dense solve below 64, Lanczos
// with full reorthogonalization above.
inline std::pair<double, Vec> smallest_eigpair(const Mat& m) {
  const int dim = static_cast<int>(m.rows());
  if (dim <= 64) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    return {es.eigenvalues()(0), es.eigenvectors().col(0)};
  }
  const double scale = m.norm() + 1.0;
  std::mt19937_64 rng(0x8f1bbcdcbfa53e0bULL);
  Vec v0 = haar_vector(dim, rng);
  for (int outer = 0; outer < 4; ++outer) {
    const int steps = std::min(dim, 120);
    Mat basis(dim, steps);
    RealVec alpha(steps), beta(steps);
    basis.col(0) = v0;
    int used = steps;
    for (int j = 0; j < steps; ++j) {
      Vec w = m * basis.col(j);
      alpha(j) = (basis.col(j).adjoint() * w).value().real();
      w -= alpha(j) * basis.col(j);
      if (j > 0) w -= beta(j - 1) * basis.col(j - 1);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass)
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
      double nb = w.norm();
      beta(j) = nb;
      if (j + 1 < steps) {
        if (nb < 1e-13 * scale) { used = j + 1; break; }
        basis.col(j + 1) = w / nb;
      }
    }
    RealMat tri = RealMat::Zero(used, used);
    for (int j = 0; j < used; ++j) {
      tri(j, j) = alpha(j);
      if (j + 1 < used) tri(j, j + 1) = tri(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<RealMat> small(tri);
    Vec x = basis.leftCols(used) * small.eigenvectors().col(0).cast<Complex>();
    x.normalize();
    double lambda = (x.adjoint() * (m * x)).value().real();
    double residual = (m * x - lambda * x).norm();
    if (residual <= 1e-10 * scale || used < steps) return {lambda, x};
    v0 = x;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);  // rare fallback
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

// Cached index maps for one (structure, partition) pair.
struct ContractionPlan {
  HilbertStructure structure;
  PartitionStructure partition;
  std::vector<HilbertStructure::SplitMaps> maps;  // one per block

  ContractionPlan(const HilbertStructure& hs, const PartitionStructure& part)
      : structure(hs), partition(part) {
    maps.reserve(part.k());
    for (int b = 0; b < part.k(); ++b) maps.push_back(hs.split(part.block(b)));
  }
};

// M_i on block `blk` such that <phi_i| M_i |phi_i> equals
// <psi| direction |psi> with all other blocks fixed.
inline Mat contract_block(const Mat& direction, const ContractionPlan& plan,
                          const std::vector<Vec>& vectors, int blk) {
  const auto& bm = plan.maps[blk];
  const int d = plan.structure.total_dim();
  const int k = plan.partition.k();
  // environment amplitude for each rest index
  Vec env = Vec::Zero(bm.rest_dim);
  for (int i = 0; i < d; ++i) {
    if (bm.sub[i] != 0) continue;
    Complex amp = 1.0;
    for (int b = 0; b < k; ++b)
      if (b != blk) amp *= vectors[b](plan.maps[b].sub[i]);
    env(bm.rest[i]) = amp;
  }
  Mat scatter = Mat::Zero(d, bm.sub_dim);
  for (int i = 0; i < d; ++i) scatter(i, bm.sub[i]) = env(bm.rest[i]);
  Mat contracted = scatter.adjoint() * (direction * scatter);
  return 0.5 * (contracted + contracted.adjoint());
}

struct RestartOutcome {
  std::vector<Vec> vectors;
  double value = std::numeric_limits<double>::infinity();
  int sweeps = 0;
};

inline RestartOutcome run_alternating_restart(const Mat& direction,
                                              const ContractionPlan& plan,
                                              const LmoConfig& cfg, uint64_t seed) {
  const int k = plan.partition.k();
  std::mt19937_64 rng(seed);
  RestartOutcome out;
  out.vectors.reserve(k);
  for (int b = 0; b < k; ++b)
    out.vectors.push_back(haar_vector(plan.maps[b].sub_dim, rng));

  const double slack = 1e-9 * (1.0 + direction.norm());
  double obj = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double prev_sweep = obj;
    for (int b = 0; b < k; ++b) {
      Mat mb = contract_block(direction, plan, out.vectors, b);
      auto [lambda, phi] = smallest_eigpair(mb);
      if (std::isfinite(obj) && lambda > obj + slack)
        throw std::logic_error("alternating LMO objective increased within a sweep");
      out.vectors[b] = phi;
      obj = lambda;
    }
    out.sweeps = sweep + 1;
    if (std::isfinite(prev_sweep) && prev_sweep - obj < cfg.sweep_tol) break;
  }
  out.value = obj;
  return out;
}

}  // namespace detail

// Public single-block contraction (spec operation).
inline Mat contract_direction(const Mat& direction, const ProductVertex& vertex,
                              int block_index) {
  if (block_index < 0 || block_index >= vertex.partition().k())
    throw std::out_of_range("contract_direction: block index out of range");
  if (direction.rows() != vertex.structure().total_dim())
    throw structural_error("contract_direction: direction dimension mismatch");
  detail::ContractionPlan plan(vertex.structure(), vertex.partition());
  return detail::contract_block(direction, plan, vertex.local_vectors(), block_index);
}

// Heuristic linear minimization oracle over product states of a fixed
// partition: alternating smallest-eigenvector updates with random restarts.
inline LmoResult alternating_lmo(const Mat& direction, const HilbertStructure& hs,
                                 const PartitionStructure& partition,
                                 const LmoConfig& cfg, uint64_t seed_salt = 0) {
  cfg.validate();
  require_hermitian(direction, 1e-9 * (1.0 + direction.norm()), "LMO direction");
  detail::ContractionPlan plan(hs, partition);
  std::vector<detail::RestartOutcome> outcomes(cfg.restarts);
  auto body = [&](std::size_t r) {
    outcomes[r] = detail::run_alternating_restart(
        direction, plan, cfg, detail::mix_seed(cfg.rng_seed, detail::mix_seed(seed_salt, r)));
  };
  // threads only pay off for large systems
  if (static_cast<double>(cfg.restarts) * hs.total_dim() * hs.total_dim() >= 1e6) {
    parallel_for(cfg.restarts, body);
  } else {
    for (int r = 0; r < cfg.restarts; ++r) body(r);
  }
  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (outcomes[r].value < outcomes[best].value) best = r;
  LmoResult res;
  res.vertex = ProductVertex(hs, partition, std::move(outcomes[best].vectors));
  res.value = outcomes[best].value;
  res.sweeps = outcomes[best].sweeps;
  return res;
}

// Minimizes over all partitions of the parties into exactly k blocks.
inline LmoResult kseparable_lmo(const Mat& direction, const HilbertStructure& hs, int k,
                                const LmoConfig& cfg) {
  cfg.validate();
  if (k < 1 || k > hs.num_parties())
    throw std::domain_error("kseparable_lmo: k out of range");
  require_hermitian(direction, 1e-9 * (1.0 + direction.norm()), "LMO direction");
  auto partitions = partitions_into_k_blocks(hs.num_parties(), k);
  std::vector<detail::ContractionPlan> plans;
  plans.reserve(partitions.size());
  for (const auto& part : partitions) plans.emplace_back(hs, part);

  const std::size_t jobs = partitions.size() * static_cast<std::size_t>(cfg.restarts);
  std::vector<detail::RestartOutcome> outcomes(jobs);
  auto body = [&](std::size_t j) {
    const std::size_t pi = j / cfg.restarts;
    const std::size_t r = j % cfg.restarts;
    outcomes[j] = detail::run_alternating_restart(
        direction, plans[pi], cfg,
        detail::mix_seed(cfg.rng_seed, detail::mix_seed(pi, r)));
  };
  if (static_cast<double>(jobs) * hs.total_dim() * hs.total_dim() >= 1e6) {
    parallel_for(jobs, body);
  } else {
    for (std::size_t j = 0; j < jobs; ++j) body(j);
  }
  // deterministic reduction: strict improvement, lowest partition index wins ties
  std::size_t best = 0;
  for (std::size_t j = 1; j < jobs; ++j)
    if (outcomes[j].value < outcomes[best].value) best = j;
  const std::size_t pi = best / cfg.restarts;
  LmoResult res;
  res.vertex = ProductVertex(hs, partitions[pi], std::move(outcomes[best].vectors));
  res.value = outcomes[best].value;
  res.partition_index = static_cast<int>(pi);
  res.sweeps = outcomes[best].sweeps;
  return res;
}

struct NetLmoResult {
  double value = std::numeric_limits<double>::infinity();
  uint64_t index = 0;  // block-major mixed-radix index into the product net
};

namespace detail {

// Contracts a fixed block vector out of `direction`: the result acts on the
// remaining parties (ascending order).
inline Mat contract_fixed(const Mat& direction, const HilbertStructure::SplitMaps& maps,
                          const Vec& phi) {
  const int d = static_cast<int>(direction.rows());
  Mat out = Mat::Zero(maps.rest_dim, maps.rest_dim);
  for (int i = 0; i < d; ++i) {
    const Complex ci = std::conj(phi(maps.sub[i]));
    for (int j = 0; j < d; ++j)
      out(maps.rest[i], maps.rest[j]) += ci * direction(i, j) * phi(maps.sub[j]);
  }
  return out;
}

struct NetPlan {
  // Per level: split maps of the level's block within the then-remaining space.
  std::vector<HilbertStructure::SplitMaps> level_maps;
  std::vector<uint64_t> radix;  // net sizes per block

  NetPlan(const HilbertStructure& hs, const PartitionStructure& part,
          const std::vector<std::size_t>& net_sizes) {
    std::vector<int> remaining(hs.num_parties());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> dims = hs.local_dims();
    for (int b = 0; b < part.k(); ++b) {
      HilbertStructure cur(dims);
      // positions of this block's parties within the remaining list
      std::vector<int> pos;
      for (int p : part.block(b)) {
        auto it = std::find(remaining.begin(), remaining.end(), p);
        pos.push_back(static_cast<int>(it - remaining.begin()));
      }
      level_maps.push_back(cur.split(pos));
      // drop the block's parties
      std::vector<int> next_remaining, next_dims;
      for (std::size_t q = 0; q < remaining.size(); ++q)
        if (std::find(pos.begin(), pos.end(), static_cast<int>(q)) == pos.end()) {
          next_remaining.push_back(remaining[q]);
          next_dims.push_back(dims[q]);
        }
      remaining = std::move(next_remaining);
      dims = std::move(next_dims);
      radix.push_back(net_sizes[b]);
    }
  }
};

inline void net_search_recurse(const Mat& direction, const NetPlan& plan,
                               const std::vector<const std::vector<Vec>*>& nets,
                               std::size_t level, uint64_t prefix, NetLmoResult& best) {
  const auto& candidates = *nets[level];
  if (level + 1 == nets.size()) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const Vec& v = candidates[i];
      const double val = (v.adjoint() * (direction * v)).value().real();
      const uint64_t idx = prefix * plan.radix[level] + i;
      if (val < best.value || (val == best.value && idx < best.index)) {
        best.value = val;
        best.index = idx;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Mat reduced = contract_fixed(direction, plan.level_maps[level], candidates[i]);
    net_search_recurse(reduced, plan, nets, level + 1,
                       prefix * plan.radix[level] + i, best);
  }
}

}  // namespace detail

// Exhaustive minimization of <psi|direction|psi> over the product net given
// by per-block candidate lists.  Deterministic: ties resolve to the lowest
// mixed-radix index.
inline NetLmoResult net_lmo_over_blocks(const Mat& direction, const HilbertStructure& hs,
                                        const PartitionStructure& partition,
                                        const std::vector<const std::vector<Vec>*>& nets) {
  if (nets.empty() || nets.size() != static_cast<std::size_t>(partition.k()))
    throw structural_error("net_lmo: one candidate list per block required");
  for (const auto* n : nets)
    if (n == nullptr || n->empty()) throw structural_error("net_lmo: empty net");
  std::vector<std::size_t> sizes;
  for (const auto* n : nets) sizes.push_back(n->size());
  detail::NetPlan plan(hs, partition, sizes);

  const std::size_t top = nets[0]->size();
  const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(top)));
  std::vector<NetLmoResult> partial(workers);
  const std::size_t chunk = (top + workers - 1) / workers;
  parallel_for(workers, [&](std::size_t w) {
    NetLmoResult local;
    const std::size_t lo = w * chunk, hi = std::min(top, lo + chunk);
    for (std::size_t i = lo; i < hi; ++i) {
      if (nets.size() == 1) {
        const Vec& v = (*nets[0])[i];
        const double val = (v.adjoint() * (direction * v)).value().real();
        if (val < local.value || (val == local.value && i < local.index)) {
          local.value = val;
          local.index = i;
        }
      } else {
        Mat reduced = detail::contract_fixed(direction, plan.level_maps[0], (*nets[0])[i]);
        detail::net_search_recurse(reduced, plan, nets, 1, i, local);
      }
    }
    partial[w] = local;
  });
  NetLmoResult best = partial[0];
  for (int w = 1; w < workers; ++w)
    if (partial[w].value < best.value ||
        (partial[w].value == best.value && partial[w].index < best.index))
      best = partial[w];
  return best;
}

// Reconstructs the ProductVertex for a mixed-radix net index.
inline ProductVertex net_vertex_at(const HilbertStructure& hs,
                                   const PartitionStructure& partition,
                                   const std::vector<const std::vector<Vec>*>& nets,
                                   uint64_t index) {
  std::vector<Vec> vectors(nets.size());
  for (int b = static_cast<int>(nets.size()) - 1; b >= 0; --b) {
    const uint64_t n = nets[b]->size();
    vectors[b] = (*nets[b])[index % n];
    index /= n;
  }
  return ProductVertex(hs, partition, std::move(vectors));
}

}  // namespace entcert
