#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "entcert/lmo.hpp"

namespace entcert {

// Finite subset of the unit sphere S^{dim_real-1} with a certified
// homothetic (shrinking) factor eta: the ball shrunk by eta lies inside the
// convex hull of the vertices.
struct SphereNet {
  int dim_real = 0;
  int subdiv_n = 1;
  std::vector<RealVec> vertices;
  double eta = 0.0;
  // diagnostics from the construction
  double max_subsimplex_diameter = 0.0;  // before radial projection
  bool circumcenters_inside = true;

  // Interleaved real/imaginary embedding: complex entry j <-> (2j, 2j+1).
  Vec complex_vertex(std::size_t i) const {
    const RealVec& v = vertices.at(i);
    Vec c(dim_real / 2);
    for (int j = 0; j < dim_real / 2; ++j) c(j) = Complex(v(2 * j), v(2 * j + 1));
    return c;
  }
};

// Closed-form shrinking factor of the subdivided cross-polytope net.
// n = 1 is the plain cross-polytope with eta = 1/sqrt(d).
inline double cross_polytope_eta(int dim_real, int n) {
  if (n == 1) return 1.0 / std::sqrt(double(dim_real));
  return n / std::sqrt(double(n) * n + 2.0 * (dim_real - 1));
}

// Number of integer points w with sum |w_i| = n in Z^d; this is the exact
// vertex count of the subdivided cross-polytope net after deduplication.
inline double cross_polytope_vertex_count(int dim_real, int n) {
  double total = 0.0;
  // j nonzero coordinates: C(d,j) placements, 2^j signs, C(n-1, j-1) magnitudes
  auto binom = [](int a, int b) {
    if (b < 0 || b > a) return 0.0;
    double r = 1.0;
    for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
    return r;
  };
  for (int j = 1; j <= std::min(dim_real, n); ++j)
    total += binom(dim_real, j) * std::pow(2.0, j) * binom(n - 1, j - 1);
  return total;
}

namespace detail {

// Lattice chain enumeration of the n-fold edgewise subdivision of the order
// simplex {n >= x_1 >= ... >= x_k >= 0}; each sub-simplex is a base point
// plus a permutation of unit-vector increments.
inline bool order_ok(const std::vector<int>& x, int n) {
  int prev = n;
  for (int v : x) {
    if (v > prev || v < 0) return false;
    prev = v;
  }
  return true;
}

}  // namespace detail

// Subdivides a (d-1)-simplex given by d affinely independent vertices into
// n^(d-1) simplices of equal volume.
inline std::vector<std::vector<RealVec>> edgewise_subdivision(
    const std::vector<RealVec>& simplex, int n) {
  if (simplex.size() < 2) throw std::domain_error("edgewise_subdivision: need >= 2 vertices");
  if (n < 1) throw std::domain_error("edgewise_subdivision: n >= 1 required");
  const int k = static_cast<int>(simplex.size()) - 1;
  const auto ambient = simplex[0].size();
  for (const auto& v : simplex)
    if (v.size() != ambient)
      throw structural_error("edgewise_subdivision: mixed ambient dimensions");
  // affine independence check
  {
    RealMat edges(ambient, k);
    for (int j = 0; j < k; ++j) edges.col(j) = simplex[j + 1] - simplex[0];
    Eigen::ColPivHouseholderQR<RealMat> qr(edges);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw std::domain_error("edgewise_subdivision: degenerate simplex");
  }
  if (k > 10 || std::pow(double(n), k) > 2e7)
    throw resource_error("edgewise_subdivision: subdivision too large");

  if (n == 1) return {simplex};

  auto lattice_to_point = [&](const std::vector<int>& x) {
    // barycentric weights from the order coordinates
    RealVec p = RealVec::Zero(ambient);
    double l0 = double(n - x[0]) / n;
    p += l0 * simplex[0];
    for (int j = 0; j < k; ++j) {
      double next = (j + 1 < k) ? x[j + 1] : 0;
      p += (double(x[j]) - next) / n * simplex[j + 1];
    }
    return p;
  };

  std::vector<std::vector<RealVec>> out;
  std::vector<int> base(k, 0), perm(k);
  std::vector<int> point(k);
  // iterate base points in the box [0, n-1]^k
  std::vector<int> counter(k, 0);
  for (;;) {
    // quick reject: base must satisfy the order constraints
    if (detail::order_ok(counter, n)) {
      for (int i = 0; i < k; ++i) perm[i] = i;
      do {
        bool valid = true;
        std::vector<std::vector<int>> chain;
        chain.reserve(k + 1);
        point = counter;
        chain.push_back(point);
        for (int s = 0; s < k && valid; ++s) {
          point[perm[s]] += 1;
          if (!detail::order_ok(point, n)) valid = false;
          else chain.push_back(point);
        }
        if (valid) {
          std::vector<RealVec> cell;
          cell.reserve(k + 1);
          for (const auto& x : chain) cell.push_back(lattice_to_point(x));
          out.push_back(std::move(cell));
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    int c = k - 1;
    while (c >= 0 && counter[c] == n - 1) counter[c--] = 0;
    if (c < 0) break;
    ++counter[c];
  }
  const double expected = std::pow(double(n), k);
  if (std::abs(double(out.size()) - expected) > 0.5)
    throw std::logic_error("edgewise_subdivision: wrong sub-simplex count");
  return out;
}

namespace detail {

inline double simplex_diameter(const std::vector<RealVec>& cell) {
  double d = 0.0;
  for (std::size_t i = 0; i < cell.size(); ++i)
    for (std::size_t j = i + 1; j < cell.size(); ++j)
      d = std::max(d, (cell[i] - cell[j]).norm());
  return d;
}

// Circumcenter of a simplex within its affine hull, in barycentric
// coordinates; returns true when it lies inside (all coordinates >= -tol).
inline bool circumcenter_inside(const std::vector<RealVec>& cell) {
  const int k = static_cast<int>(cell.size()) - 1;
  if (k == 0) return true;
  RealMat edges(cell[0].size(), k);
  for (int j = 0; j < k; ++j) edges.col(j) = cell[j + 1] - cell[0];
  RealMat gram = edges.transpose() * edges;
  RealVec rhs(k);
  for (int j = 0; j < k; ++j) rhs(j) = 0.5 * edges.col(j).squaredNorm();
  RealVec y = gram.ldlt().solve(rhs);  // coefficients of c - v0 in edge basis
  double sum = y.sum();
  if (sum > 1.0 + 1e-9) return false;
  for (int j = 0; j < k; ++j)
    if (y(j) < -1e-9) return false;
  return true;
}

struct VertexKey {
  std::vector<int64_t> q;
  bool operator<(const VertexKey& o) const { return q < o.q; }
};

inline VertexKey quantize(const RealVec& v) {
  VertexKey key;
  key.q.resize(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    key.q[i] = static_cast<int64_t>(std::llround(v(i) * 1e9));
  return key;
}

}  // namespace detail

// Subdivided cross-polytope net of the unit sphere in R^d: subdivide each of
// the 2^d facets, project the vertices radially, deduplicate shared faces.
inline SphereNet cross_polytope_net(int dim_real, int n, double cap = 1e7) {
  if (dim_real < 2) throw std::domain_error("cross_polytope_net: dim_real >= 2 required");
  if (n < 1) throw std::domain_error("cross_polytope_net: n >= 1 required");
  const double predicted = cross_polytope_vertex_count(dim_real, n);
  if (predicted > cap)
    throw resource_error("cross_polytope_net: predicted vertex count " +
                         std::to_string(predicted) + " exceeds cap " + std::to_string(cap));

  SphereNet net;
  net.dim_real = dim_real;
  net.subdiv_n = n;
  net.eta = cross_polytope_eta(dim_real, n);

  std::map<detail::VertexKey, int> seen;
  for (uint64_t signs = 0; signs < (uint64_t(1) << dim_real); ++signs) {
    std::vector<RealVec> facet;
    facet.reserve(dim_real);
    for (int i = 0; i < dim_real; ++i) {
      RealVec e = RealVec::Zero(dim_real);
      e(i) = (signs >> i) & 1 ? -1.0 : 1.0;
      facet.push_back(e);
    }
    auto cells = edgewise_subdivision(facet, n);
    for (const auto& cell : cells) {
      net.max_subsimplex_diameter =
          std::max(net.max_subsimplex_diameter, detail::simplex_diameter(cell));
      if (!detail::circumcenter_inside(cell)) net.circumcenters_inside = false;
      for (const auto& v : cell) {
        auto key = detail::quantize(v);
        if (seen.emplace(key, 1).second) net.vertices.push_back(v / v.norm());
      }
    }
  }
  return net;
}

// Empirical check of the shrinking factor: minimum over sampled directions
// of the support of the net hull.  Must never undercut the certified eta.
inline double certify_eta(const SphereNet& net, int samples, uint64_t rng_seed) {
  if (net.vertices.empty()) throw structural_error("certify_eta: empty net");
  const int workers = std::max(1, worker_count());
  std::vector<double> worker_min(workers, std::numeric_limits<double>::infinity());
  const int chunk = (samples + workers - 1) / workers;
  parallel_for(workers, [&](std::size_t w) {
    std::mt19937_64 rng(detail::mix_seed(rng_seed, w));
    std::normal_distribution<double> g(0.0, 1.0);
    double local = std::numeric_limits<double>::infinity();
    const int lo = static_cast<int>(w) * chunk;
    const int hi = std::min(samples, lo + chunk);
    for (int s = lo; s < hi; ++s) {
      RealVec x(net.dim_real);
      for (int i = 0; i < net.dim_real; ++i) x(i) = g(rng);
      x.normalize();
      double support = -std::numeric_limits<double>::infinity();
      for (const auto& v : net.vertices) support = std::max(support, v.dot(x));
      local = std::min(local, support);
    }
    worker_min[w] = local;
  });
  double result = std::numeric_limits<double>::infinity();
  for (double v : worker_min) result = std::min(result, v);
  return result;
}

// Product-state net across the blocks of a partition.  Per-block sphere nets
// live on S^{2 b - 1} (b = block complex dimension); the combined shrinking
// factor is the product of the local ones and epsilon is the induced
// covering radius sqrt(2 (1 - eta^2)) of the product-state manifold.
struct EpsNet {
  HilbertStructure structure;
  PartitionStructure partition;
  std::vector<SphereNet> local_nets;
  std::vector<std::vector<Vec>> local_complex;  // cached complex vectors
  double eta = 1.0;
  double epsilon = 0.0;

  uint64_t product_count() const {
    uint64_t c = 1;
    for (const auto& n : local_nets) c *= n.vertices.size();
    return c;
  }

  ProductVertex product_vertex(uint64_t index) const {
    std::vector<const std::vector<Vec>*> nets;
    for (const auto& v : local_complex) nets.push_back(&v);
    return net_vertex_at(structure, partition, nets, index);
  }

  std::vector<const std::vector<Vec>*> block_views() const {
    std::vector<const std::vector<Vec>*> nets;
    for (const auto& v : local_complex) nets.push_back(&v);
    return nets;
  }
};

inline EpsNet product_net(const HilbertStructure& hs, const PartitionStructure& partition,
                          int n, double cap = 1e7) {
  EpsNet net;
  net.structure = hs;
  net.partition = partition;
  double predicted = 1.0;
  for (int b = 0; b < partition.k(); ++b) {
    const int dim_real = 2 * hs.dim_of(partition.block(b));
    predicted *= cross_polytope_vertex_count(dim_real, n);
  }
  if (predicted > cap)
    throw resource_error("product_net: predicted product cardinality " +
                         std::to_string(predicted) + " exceeds cap " + std::to_string(cap));
  net.eta = 1.0;
  for (int b = 0; b < partition.k(); ++b) {
    const int dim_real = 2 * hs.dim_of(partition.block(b));
    SphereNet local = cross_polytope_net(dim_real, n, cap);
    net.eta *= local.eta;
    std::vector<Vec> complex_vectors;
    complex_vectors.reserve(local.vertices.size());
    for (std::size_t i = 0; i < local.vertices.size(); ++i) {
      Vec c = local.complex_vertex(i);
      c /= c.norm();  // exact renormalization against rounding
      complex_vectors.push_back(std::move(c));
    }
    net.local_nets.push_back(std::move(local));
    net.local_complex.push_back(std::move(complex_vectors));
  }
  net.epsilon = std::sqrt(std::max(0.0, 2.0 * (1.0 - net.eta * net.eta)));
  return net;
}

// Exhaustive LMO over the product net (spec operation): beta is the minimum
// of <psi|direction|psi>, deterministic vertex index on ties.
inline std::pair<ProductVertex, double> net_lmo(const Mat& direction, const EpsNet& net) {
  auto views = net.block_views();
  NetLmoResult r = net_lmo_over_blocks(direction, net.structure, net.partition, views);
  return {net.product_vertex(r.index), r.value};
}

inline NetLmoResult net_lmo_indexed(const Mat& direction, const EpsNet& net) {
  auto views = net.block_views();
  return net_lmo_over_blocks(direction, net.structure, net.partition, views);
}

}  // namespace entcert
