#pragma once

#include "tricluster/core.hpp"
#include "tricluster/lattice.hpp"
#include "tricluster/subspace.hpp"
#include "tricluster/tensor.hpp"

#include <array>
#include <map>
#include <optional>

namespace tricluster {

// |φ> = (|00> + |01> + |10> - |11>)/2
inline CVec singlet() {
  CVec v(4);
  v << 0.5, 0.5, 0.5, -0.5;
  return v;
}

enum class ProjectorKind { TRIC, CLUSTER_HEX, PRIME, DOUBLE_PRIME };

struct ProjectorEntry {
  int level;
  std::array<int, 3> virt;  // (left, right, up/down)
  cplx amplitude;
};

struct ProjectorSpec {
  std::string name;
  int phys_dim = 0;
  std::vector<ProjectorEntry> entries;

  // phys_dim x 8, virtual index = 4*left + 2*right + vertical
  CMat matrix() const {
    CMat m = CMat::Zero(phys_dim, 8);
    for (const auto& e : entries) m(e.level, 4 * e.virt[0] + 2 * e.virt[1] + e.virt[2]) += e.amplitude;
    return m;
  }
};

inline ProjectorSpec projector(ProjectorKind kind) {
  auto row = [](int l, int a, int b, int c) { return ProjectorEntry{l, {a, b, c}, cplx(1)}; };
  switch (kind) {
    case ProjectorKind::TRIC:
      return {"TRIC", 6,
              {row(0, 0, 0, 0), row(1, 1, 1, 1), row(2, 1, 0, 0), row(3, 0, 1, 1), row(4, 0, 1, 0), row(5, 1, 0, 1)}};
    case ProjectorKind::CLUSTER_HEX:
      return {"CLUSTER_HEX", 2, {row(0, 0, 0, 0), row(1, 1, 1, 1)}};
    case ProjectorKind::PRIME:
      return {"PRIME", 2, {row(0, 1, 0, 0), row(1, 0, 1, 1)}};
    case ProjectorKind::DOUBLE_PRIME:
      return {"DOUBLE_PRIME", 2, {row(0, 0, 1, 0), row(1, 1, 0, 1)}};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown projector kind");
}

using Qubit = std::array<cplx, 2>;

inline Qubit ket_plus() { return {cplx(M_SQRT1_2), cplx(M_SQRT1_2)}; }

// Every dangling leg of the lattice: nullopt = FREE, otherwise FIXED.
struct BoundaryAssignment {
  std::map<LegId, std::optional<Qubit>> legs;

  static BoundaryAssignment uniform(const HexLattice& L, std::optional<Qubit> q) {
    BoundaryAssignment b;
    for (LegId l : L.dangling()) b.legs[l] = q;
    return b;
  }
  static BoundaryAssignment all_plus(const HexLattice& L) { return uniform(L, ket_plus()); }
  static BoundaryAssignment all_free(const HexLattice& L) { return uniform(L, std::nullopt); }

  bool covers(const HexLattice& L) const {
    if (legs.size() != L.dangling().size()) return false;
    for (LegId l : L.dangling())
      if (!legs.count(l)) return false;
    return true;
  }
  std::vector<LegId> free_legs() const {
    std::vector<LegId> out;
    for (const auto& [l, q] : legs)
      if (!q) out.push_back(l);
    return out;
  }
};

// Amplitudes are row-major over `sites`, then over `open_legs` (dimension 2 each).
struct StateVector {
  std::vector<SiteId> sites;
  std::vector<int> dims;
  std::vector<LegId> open_legs;
  CVec amplitudes;
  double norm = 1.0;  // norm before the last normalisation

  Index size() const { return amplitudes.size(); }
};

// Contracts the PEPS restricted to `region`. Each region site gets a d_s x 8
// map (d_s = 1 for a measured site). Bonds inside the region carry |φ>, every
// other leg of a region site is either in `fixed` or listed in `open_legs`.
// Output index order: region sites (in the given order), then open_legs.
inline Tensor contract_peps(const HexLattice& L, const std::vector<SiteId>& region, const std::vector<CMat>& site_maps,
                            const std::map<LegId, Qubit>& fixed, const std::vector<LegId>& open_legs,
                            const Budget& budget = {}) {
  const int N = L.num_sites();
  std::vector<char> in(N, 0);
  for (SiteId s : region) in.at(s) = 1;
  std::vector<Tensor> ts;
  std::vector<int> output;
  for (std::size_t i = 0; i < region.size(); ++i) {
    SiteId s = region[i];
    const CMat& m = site_maps[i];
    if (m.cols() != 8) throw Error(ErrorKind::DimensionMismatch, "site map must have 8 columns");
    int phys = 3 * N + s;
    Tensor t({phys, 3 * s, 3 * s + 1, 3 * s + 2}, {m.rows(), 2, 2, 2});
    for (Index p = 0; p < m.rows(); ++p)
      for (int v = 0; v < 8; ++v) t.data[p * 8 + v] = m(p, v);
    ts.push_back(std::move(t));
    output.push_back(phys);
  }
  const CVec phi = singlet();
  for (const auto& b : L.bonds()) {
    bool ia = in[HexLattice::site_of(b.a)], ib = in[HexLattice::site_of(b.b)];
    if (ia && ib) {
      Tensor t({b.a, b.b}, {2, 2});
      for (int k = 0; k < 4; ++k) t.data[k] = phi(k);
      ts.push_back(std::move(t));
    }
  }
  std::vector<char> is_open(3 * N, 0);
  for (LegId l : open_legs) is_open.at(l) = 1;
  for (SiteId s : region)
    for (int r = 0; r < 3; ++r) {
      LegId l = HexLattice::leg(s, LegRole(r));
      auto p = L.partner(l);
      if (p && in[HexLattice::site_of(*p)]) continue;
      if (is_open[l]) continue;
      auto it = fixed.find(l);
      if (it == fixed.end())
        throw Error(ErrorKind::ContractBoundary, "leg " + std::to_string(l) + " is neither fixed nor open");
      Tensor t({l}, {2});
      t.data = {it->second[0], it->second[1]};
      ts.push_back(std::move(t));
    }
  output.insert(output.end(), open_legs.begin(), open_legs.end());
  return contract_network(std::move(ts), output, budget);
}

struct ContractOptions {
  int dense_max_sites = 8;
  Budget budget;
};

inline StateVector contract_state(const HexLattice& L, const ProjectorSpec& proj, const BoundaryAssignment& boundary,
                                  const ContractOptions& opt = {}) {
  if (!boundary.covers(L)) throw Error(ErrorKind::InvalidArgument, "boundary must cover exactly the dangling legs");
  std::map<LegId, Qubit> fixed;
  for (const auto& [l, q] : boundary.legs) {
    if (!q) throw Error(ErrorKind::ContractBoundary, "dangling leg " + std::to_string(l) + " is FREE");
    fixed[l] = *q;
  }
  StateVector sv;
  const int N = L.num_sites();
  if (N > opt.dense_max_sites)
    throw Error(ErrorKind::Resource, std::to_string(N) + " sites exceed the dense threshold " +
                                         std::to_string(opt.dense_max_sites) + "; use PepsAmplitudes");
  opt.budget.require(double(ipow(proj.phys_dim, N)) * sizeof(cplx) * 3, "state vector");
  if (N == 0) {
    sv.amplitudes = CVec::Ones(1);
    return sv;
  }
  std::vector<SiteId> region(N);
  std::iota(region.begin(), region.end(), 0);
  CMat P = proj.matrix();
  Tensor t = contract_peps(L, region, std::vector<CMat>(N, P), fixed, {}, opt.budget);
  sv.sites = region;
  sv.dims.assign(N, proj.phys_dim);
  sv.amplitudes = Eigen::Map<CVec>(t.data.data(), t.size());
  sv.norm = sv.amplitudes.norm();
  if (!(sv.norm > 0)) throw Error(ErrorKind::InvalidArgument, "boundary gives the zero state");
  sv.amplitudes /= sv.norm;
  return sv;
}

// On-the-fly amplitude evaluation for patches above the dense threshold.
class PepsAmplitudes {
 public:
  PepsAmplitudes(const HexLattice& L, const ProjectorSpec& proj, const BoundaryAssignment& boundary)
      : L_(L), P_(proj.matrix()) {
    for (const auto& [l, q] : boundary.legs) {
      if (!q) throw Error(ErrorKind::ContractBoundary, "dangling leg " + std::to_string(l) + " is FREE");
      fixed_[l] = *q;
    }
  }
  // Unnormalised amplitude of the level configuration (one level per site).
  cplx operator()(const std::vector<int>& levels) const {
    std::vector<SiteId> region(L_.num_sites());
    std::iota(region.begin(), region.end(), 0);
    std::vector<CMat> maps;
    for (int lv : levels) maps.push_back(P_.row(lv));
    return contract_peps(L_, region, maps, fixed_, {}).data.at(0);
  }

 private:
  const HexLattice& L_;
  CMat P_;
  std::map<LegId, Qubit> fixed_;
};

// Legs of region sites that are not bonded inside the region, ascending.
inline std::vector<LegId> region_boundary_legs(const HexLattice& L, const std::vector<SiteId>& region) {
  std::vector<LegId> out;
  for (SiteId s : region)
    for (int r = 0; r < 3; ++r) {
      LegId l = HexLattice::leg(s, LegRole(r));
      auto p = L.partner(l);
      if (p && std::find(region.begin(), region.end(), HexLattice::site_of(*p)) != region.end()) continue;
      out.push_back(l);
    }
  std::sort(out.begin(), out.end());
  return out;
}

// Boundary-to-physical map of a region: rows are region physical levels
// (row-major over the region in the given order), columns the region's
// boundary legs (ascending LegId, first leg slowest).
inline CMat support_map(const HexLattice& L, const ProjectorSpec& proj, const std::vector<SiteId>& region,
                        const Budget& budget = {}) {
  if (region.empty()) throw Error(ErrorKind::InvalidRegion, "empty region");
  if (!is_connected(L, region)) throw Error(ErrorKind::InvalidRegion, "region is not connected");
  auto legs = region_boundary_legs(L, region);
  Index rows = ipow(proj.phys_dim, int(region.size())), cols = ipow(2, int(legs.size()));
  budget.require(double(rows) * double(cols) * sizeof(cplx) * 2, "support map");
  Tensor t = contract_peps(L, region, std::vector<CMat>(region.size(), proj.matrix()), {}, legs, budget);
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<RowMat>(t.data.data(), rows, cols);
}

inline SupportSpace support_space(const HexLattice& L, const ProjectorSpec& proj, const std::vector<SiteId>& region,
                                  double tol = 1e-9, const Budget& budget = {}) {
  return orthonormal_image(support_map(L, proj, region, budget), tol, region,
                           std::vector<int>(region.size(), proj.phys_dim));
}

struct ProjectedState {
  StateVector state;
  double weight;  // squared norm of the kept component before renormalisation
};

inline ProjectedState project_subspace(const StateVector& sv, const std::vector<int>& levels) {
  if (levels.empty()) throw Error(ErrorKind::InvalidArgument, "empty level set");
  int n = int(sv.sites.size());
  std::vector<std::vector<char>> keep(n);
  for (int i = 0; i < n; ++i) {
    keep[i].assign(sv.dims[i], 0);
    for (int l : levels) {
      if (l < 0 || l >= sv.dims[i]) throw Error(ErrorKind::InvalidArgument, "level out of range");
      keep[i][l] = 1;
    }
  }
  Index tail = ipow(2, int(sv.open_legs.size()));
  ProjectedState out{sv, 0.0};
  std::vector<int> digit(n, 0);
  Index nconf = sv.size() / tail;
  for (Index k = 0; k < nconf; ++k) {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = keep[i][digit[i]];
    if (!ok) out.state.amplitudes.segment(k * tail, tail).setZero();
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < sv.dims[i]) break;
      digit[i] = 0;
    }
  }
  double nrm = out.state.amplitudes.norm();
  out.weight = nrm * nrm / std::max(1e-300, sv.amplitudes.squaredNorm());
  if (nrm > 0) out.state.amplitudes /= nrm;
  out.state.norm = nrm;
  return out;
}

// Keeps only the given levels at every site and relabels them 0..k-1.
inline StateVector compress_levels(const StateVector& sv, const std::vector<int>& levels) {
  int n = int(sv.sites.size());
  int k = int(levels.size());
  StateVector out;
  out.sites = sv.sites;
  out.dims.assign(n, k);
  out.open_legs = sv.open_legs;
  Index tail = ipow(2, int(sv.open_legs.size()));
  out.amplitudes = CVec::Zero(ipow(k, n) * tail);
  std::vector<int> digit(n, 0);
  for (Index c = 0; c < ipow(k, n); ++c) {
    Index src = 0;
    for (int i = 0; i < n; ++i) src = src * sv.dims[i] + levels[digit[i]];
    out.amplitudes.segment(c * tail, tail) = sv.amplitudes.segment(src * tail, tail);
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < k) break;
      digit[i] = 0;
    }
  }
  double nrm = out.amplitudes.norm();
  if (nrm > 0) out.amplitudes /= nrm;
  out.norm = nrm;
  return out;
}

}  // namespace tricluster
