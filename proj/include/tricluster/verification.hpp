#pragma once

#include "tricluster/core.hpp"
#include "tricluster/hamiltonian.hpp"
#include "tricluster/lanczos.hpp"
#include "tricluster/lattice.hpp"
#include "tricluster/peps.hpp"
#include "tricluster/subspace.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

namespace tricluster {

using nlohmann::json;

inline json coords_json(const HexLattice& L, const std::vector<SiteId>& region) {
  json out = json::array();
  for (SiteId s : region) out.push_back({L.coord(s).row, L.coord(s).col});
  return out;
}

struct InequalityReport {
  std::string name;
  std::string op;
  double min_eig = 0;
  double tol = 0;
  double scale = 1;
  bool passes = false;
  std::vector<double> witness;  // filled only on failure

  json to_json() const {
    json j = {{"name", name}, {"operator", op}, {"min_eig", min_eig}, {"tol", tol}, {"scale", scale}, {"pass", passes}};
    if (!passes) j["witness_head"] = std::vector<double>(witness.begin(), witness.begin() + std::min<std::size_t>(8, witness.size()));
    return j;
  }
};

struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  std::string method;
  int iterations = 0;
  double tol = 0;
  bool converged = false;

  json to_json() const {
    return {{"eigenvalues", eigenvalues}, {"residuals", residuals}, {"method", method},
            {"iterations", iterations},   {"tol", tol},               {"converged", converged}};
  }
};

// Kernel of sum_i (I - Π_i); eigenvectors with eigenvalue < tol are kept.
inline SupportSpace intersect_subspaces(const std::vector<SupportSpace>& spaces, double tol = 1e-8,
                                        const Budget& budget = {}) {
  if (spaces.empty()) throw Error(ErrorKind::InvalidArgument, "no spaces to intersect");
  for (const auto& s : spaces)
    if (s.sites != spaces[0].sites || s.dims != spaces[0].dims || s.basis.rows() != spaces[0].basis.rows())
      throw Error(ErrorKind::InvalidArgument, "spaces do not share an ambient space");
  const Index n = spaces[0].basis.rows();
  budget.require(double(n) * double(n) * 16 * 3, "intersection operator");
  bool real = std::all_of(spaces.begin(), spaces.end(), [](const SupportSpace& s) { return is_real(s.basis); });
  std::vector<Index> keep;
  SupportSpace out;
  out.sites = spaces[0].sites;
  out.dims = spaces[0].dims;
  out.tol = tol;
  if (real) {
    RMat A = double(spaces.size()) * RMat::Identity(n, n);
    for (const auto& s : spaces) {
      RMat Q = s.basis.real();
      A.noalias() -= Q * Q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(A);
    for (Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i) < tol) keep.push_back(i);
    out.basis = CMat(n, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) out.basis.col(c) = es.eigenvectors().col(keep[c]).cast<cplx>();
  } else {
    CMat A = double(spaces.size()) * CMat::Identity(n, n);
    for (const auto& s : spaces) A.noalias() -= s.basis * s.basis.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es(A);
    for (Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i) < tol) keep.push_back(i);
    out.basis = CMat(n, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) out.basis.col(c) = es.eigenvectors().col(keep[c]);
  }
  out.rank = Index(keep.size());
  return out;
}

struct UniquenessReport {
  std::vector<SiteId> region;
  json coords;
  Index rank_region = 0;
  Index rank_intersection = 0;
  double max_angle = M_PI / 2;
  bool pass = false;

  json to_json() const {
    return {{"region", coords},
            {"rank_region", rank_region},
            {"rank_intersection", rank_intersection},
            {"max_angle", max_angle},
            {"pass", pass}};
  }
};

inline std::vector<std::pair<SiteId, SiteId>> internal_bonds(const HexLattice& L, const std::vector<SiteId>& region) {
  std::vector<std::pair<SiteId, SiteId>> out;
  for (const auto& b : L.bonds()) {
    SiteId a = HexLattice::site_of(b.a), c = HexLattice::site_of(b.b);
    if (std::count(region.begin(), region.end(), a) && std::count(region.begin(), region.end(), c))
      out.push_back({std::min(a, c), std::max(a, c)});
  }
  return out;
}

// Compares S_R with the intersection of the given pair spaces embedded in R.
inline UniquenessReport check_uniqueness_with(const HexLattice& L, std::vector<SiteId> region,
                                              const std::vector<SupportSpace>& pair_spaces, double angle_tol = 1e-8) {
  std::sort(region.begin(), region.end());
  const ProjectorSpec P = projector(ProjectorKind::TRIC);
  SupportSpace SR = support_space(L, P, region);
  std::vector<int> dims(region.size(), 6);
  std::vector<SupportSpace> emb;
  for (const auto& s : pair_spaces) emb.push_back(embed(s, region, dims));
  SupportSpace I = intersect_subspaces(emb);
  UniquenessReport r;
  r.region = region;
  r.coords = coords_json(L, region);
  r.rank_region = SR.rank;
  r.rank_intersection = I.rank;
  r.max_angle = max_principal_angle(SR, I);
  r.pass = SR.rank == I.rank && r.max_angle < angle_tol;
  return r;
}

inline UniquenessReport check_uniqueness(const HexLattice& L, std::vector<SiteId> region, double angle_tol = 1e-8) {
  std::sort(region.begin(), region.end());
  auto bonds = internal_bonds(L, region);
  if (bonds.empty()) throw Error(ErrorKind::InvalidRegion, "region has no internal bond");
  const ProjectorSpec P = projector(ProjectorKind::TRIC);
  std::vector<SupportSpace> pairs;
  for (auto [a, b] : bonds) pairs.push_back(support_space(L, P, {a, b}));
  return check_uniqueness_with(L, region, pairs, angle_tol);
}

struct InjectivityReport {
  Index rank = 0;
  Index expected = 0;
  bool injective = false;
};

inline InjectivityReport check_injectivity(const HexLattice& L, std::vector<SiteId> region) {
  std::sort(region.begin(), region.end());
  auto legs = region_boundary_legs(L, region);
  InjectivityReport r;
  r.rank = support_space(L, projector(ProjectorKind::TRIC), region).rank;
  r.expected = ipow(2, int(legs.size()));
  r.injective = r.rank == r.expected;
  return r;
}

struct SpectrumOptions {
  Index dense_max_dim = 1296;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  Budget budget;
};

inline SpectrumReport lowest_spectrum(const HamiltonianOperator& H, int k, const SpectrumOptions& opt = {}) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  SpectrumReport r;
  r.tol = opt.tol;
  const Index n = H.dim();
  if (n <= opt.dense_max_dim) {
    RMat D = H.dense(opt.budget);
    Eigen::SelfAdjointEigenSolver<RMat> es(D);
    for (int i = 0; i < std::min<Index>(k, n); ++i) {
      r.eigenvalues.push_back(es.eigenvalues()(i));
      r.residuals.push_back((D * es.eigenvectors().col(i) - es.eigenvalues()(i) * es.eigenvectors().col(i)).norm());
    }
    r.method = "dense";
    r.converged = true;
    return r;
  }
  opt.budget.require(double(n) * 8 * (48 + 4), "Lanczos basis");
  LanczosOptions lo;
  lo.nev = k;
  lo.tol = opt.tol;
  lo.seed = opt.seed;
  lo.max_basis = std::max(40, 3 * k + 20);
  auto res = lanczos_smallest<double>(n, [&](const RVec& x, RVec& y) { H.apply(x, y); }, lo);
  r.eigenvalues = res.values;
  r.residuals = res.residuals;
  r.method = "lanczos";
  r.iterations = res.matvecs;
  r.converged = res.converged;
  return r;
}

struct GapReport {
  Index dim = 0;
  Index kernel_dim = 0;         // rank of the whole-patch support map
  Index zero_modes = 0;         // eigenvalues below the kernel threshold (dense) or kernel_dim (iterative)
  double kernel_residual = 0;   // max ||H k|| over the kernel basis
  double ground_energy = 0;
  double gap = 0;               // smallest eigenvalue above the kernel threshold
  double gap_residual = 0;
  std::string method;
  bool converged = false;

  json to_json() const {
    return {{"dim", dim},
            {"kernel_dim", kernel_dim},
            {"zero_modes", zero_modes},
            {"kernel_residual", kernel_residual},
            {"ground_energy", ground_energy},
            {"gap", gap},
            {"gap_residual", gap_residual},
            {"method", method},
            {"converged", converged}};
  }
};

// Gap of a frustration-free sum whose exact kernel is `kernel`; the kernel is
// checked to be annihilated and then deflated.
inline GapReport spectral_gap_with_kernel(const HamiltonianOperator& H, const RMat& kernel, const SpectrumOptions& opt = {},
                                          double zero_tol = 1e-7) {
  GapReport r;
  r.dim = H.dim();
  r.kernel_dim = kernel.cols();
  RVec y;
  for (Index c = 0; c < kernel.cols(); ++c) {
    H.apply(RVec(kernel.col(c)), y);
    r.kernel_residual = std::max(r.kernel_residual, y.norm());
  }
  if (r.dim <= opt.dense_max_dim) {
    RMat D = H.dense(opt.budget);
    Eigen::SelfAdjointEigenSolver<RMat> es(D);
    const RVec& ev = es.eigenvalues();
    r.ground_energy = ev(0);
    Index i = 0;
    while (i < ev.size() && ev(i) < zero_tol) ++i;
    r.zero_modes = i;
    r.gap = i < ev.size() ? ev(i) : 0.0;
    r.method = "dense";
    r.converged = true;
    return r;
  }
  opt.budget.require(double(r.dim) * 8 * (48 + kernel.cols() + 4), "deflated Lanczos");
  LanczosOptions lo;
  lo.nev = 1;
  lo.tol = opt.tol;
  lo.seed = opt.seed;
  auto res = lanczos_smallest<double>(r.dim, [&](const RVec& x, RVec& out) { H.apply(x, out); }, lo, &kernel);
  r.gap = res.values.empty() ? 0.0 : res.values[0];
  r.gap_residual = res.residuals.empty() ? 0.0 : res.residuals[0];
  r.zero_modes = r.gap > zero_tol ? r.kernel_dim : -1;
  r.ground_energy = 0.0;
  r.method = "deflated-lanczos";
  r.converged = res.converged;
  return r;
}

inline GapReport spectral_gap(const HexLattice& L, const HamiltonianOperator& H, const SpectrumOptions& opt = {}) {
  std::vector<SiteId> all(L.num_sites());
  std::iota(all.begin(), all.end(), 0);
  SupportSpace K = support_space(L, projector(ProjectorKind::TRIC), all, 1e-9, opt.budget);
  return spectral_gap_with_kernel(H, K.basis.real(), opt);
}

// Re-expresses a term on a sub-list of sites (local indices = positions in `sites`).
inline OperatorTerm localize(OperatorTerm t, const std::vector<SiteId>& sites) {
  for (auto& s : t.sites) s = SiteId(std::find(sites.begin(), sites.end(), s) - sites.begin());
  return t;
}

struct MuReport {
  InequalityReport inequality;
  double mu = 0.5;
  double mu_star = 0;
  Index kernel_dim_h = 0;
  Index kernel_dim_k = 0;
  double kernel_angle = M_PI / 2;

  json to_json() const {
    json j = inequality.to_json();
    j["mu"] = mu;
    j["mu_star"] = mu_star;
    j["kernel_dim_hsum"] = kernel_dim_h;
    j["kernel_dim_k"] = kernel_dim_k;
    j["kernel_angle"] = kernel_angle;
    return j;
  }
};

// h_{m_l m_r} + h_{m_r n_l} + h_{n_l n_r} - mu k_mn on the four block sites.
inline MuReport check_mu(const HexLattice& L, const BlockPartition& P, int m, int n, double mu = 0.5,
                         double tol = 1e-9) {
  OperatorTerm k = build_k_term(L, P, m, n);
  std::vector<SiteId> sites = k.sites;
  std::vector<OperatorTerm> hs;
  for (auto [a, b] : internal_bonds(L, sites)) {
    SiteId A = L.sublattice(a) == Sublattice::A ? a : b, B = A == a ? b : a;
    OperatorTerm h = h_projector(classify_bond(L, A, B));
    h.sites = {A, B};
    hs.push_back(localize(h, sites));
  }
  RMat Hs = HamiltonianOperator(4, hs).dense();
  RMat Kd = localize(k, sites).dense();
  MuReport r;
  r.mu = mu;
  Eigen::SelfAdjointEigenSolver<RMat> es(Hs - mu * Kd);
  r.inequality.name = "mu";
  r.inequality.op = "hsum - mu*k_mn";
  r.inequality.min_eig = es.eigenvalues()(0);
  r.inequality.tol = tol;
  r.inequality.scale = 1.0;
  r.inequality.passes = r.inequality.min_eig >= -tol;
  if (!r.inequality.passes) {
    RVec w = es.eigenvectors().col(0);
    r.inequality.witness.assign(w.data(), w.data() + w.size());
  }
  Eigen::SelfAdjointEigenSolver<RMat> eh(Hs);
  std::vector<Index> ker;
  for (Index i = 0; i < eh.eigenvalues().size(); ++i) {
    if (eh.eigenvalues()(i) < 1e-7)
      ker.push_back(i);
    else if (r.mu_star == 0)
      r.mu_star = eh.eigenvalues()(i);
  }
  r.kernel_dim_h = Index(ker.size());
  r.kernel_dim_k = k.kernel.cols();
  if (r.kernel_dim_h == r.kernel_dim_k) {
    CMat Kh(Hs.rows(), ker.size());
    for (std::size_t i = 0; i < ker.size(); ++i) Kh.col(i) = eh.eigenvectors().col(ker[i]).cast<cplx>();
    auto ang = principal_angles(Kh, k.kernel.cast<cplx>());
    r.kernel_angle = ang.empty() ? 0.0 : ang.back();
  }
  return r;
}

struct AnticommutatorPair {
  int slot_i, slot_j;
  int block_i, block_j;
  double min_anticommutator = 0;
  double min_third = 0;
  double residual_anticommutator = 0, residual_third = 0;
  PairClass measured = PairClass::PSD_CLASS;
  bool satisfies_third = false;
  PairClass geometric = PairClass::PSD_CLASS;

  json to_json() const {
    return {{"slots", {slot_i, slot_j}},
            {"blocks", {block_i, block_j}},
            {"min_anticommutator", min_anticommutator},
            {"min_with_third", min_third},
            {"residuals", {residual_anticommutator, residual_third}},
            {"class", to_string(measured)},
            {"satisfies_third_bound", satisfies_third},
            {"geometric_class", to_string(geometric)},
            {"agrees", measured == geometric}};
  }
};

struct AnticommutatorReport {
  bool conclusive = false;
  int block = -1;
  std::vector<AnticommutatorPair> pairs;
  int psd_count = 0;
  int third_count = 0;
  int violations = 0;
  double tol = 1e-7;

  bool pass() const { return conclusive && psd_count == 4 && third_count == 2 && violations == 0; }
  json to_json() const {
    json ps = json::array();
    for (const auto& p : pairs) ps.push_back(p.to_json());
    return {{"name", "anticommutators"}, {"conclusive", conclusive}, {"block", block},  {"pairs", ps},
            {"psd_count", psd_count},    {"third_count", third_count}, {"violations", violations},
            {"tol", tol},                {"pass", pass()}};
  }
};

// For every unordered pair of neighbours around the first interior block:
// min eig of {k_i,k_j} and of {k_i,k_j} + (k_i+k_j)/3 on the six sites involved.
inline AnticommutatorReport check_anticommutators(const HexLattice& L, double tol = 1e-7, std::uint64_t seed = 0) {
  AnticommutatorReport rep;
  rep.tol = tol;
  BlockPartition P = block_partition(L);
  auto interior = P.interior_blocks();
  if (interior.empty()) return rep;
  rep.conclusive = true;
  const int m = interior.front();
  rep.block = m;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      AnticommutatorPair pr;
      pr.slot_i = i;
      pr.slot_j = j;
      pr.block_i = P.attach[m][i];
      pr.block_j = P.attach[m][j];
      OperatorTerm ki = build_k_term(L, P, m, pr.block_i), kj = build_k_term(L, P, m, pr.block_j);
      std::vector<SiteId> sites = ki.sites;
      for (SiteId s : kj.sites)
        if (!std::count(sites.begin(), sites.end(), s)) sites.push_back(s);
      std::sort(sites.begin(), sites.end());
      HamiltonianOperator Ki(int(sites.size()), {localize(ki, sites)});
      HamiltonianOperator Kj(int(sites.size()), {localize(kj, sites)});
      const Index n = Ki.dim();
      auto anti = [&](double third) {
        return [&, third](const RVec& x, RVec& y) {
          RVec a, b, ab, ba;
          Ki.apply(x, a);
          Kj.apply(x, b);
          Kj.apply(a, ba);
          Ki.apply(b, ab);
          y = ab + ba + third * (a + b);
        };
      };
      LanczosOptions lo;
      lo.tol = 1e-9;
      lo.seed = seed;
      auto r0 = lanczos_smallest<double>(n, anti(0.0), lo);
      auto r1 = lanczos_smallest<double>(n, anti(1.0 / 3.0), lo);
      pr.min_anticommutator = r0.values.at(0);
      pr.residual_anticommutator = r0.residuals.at(0);
      pr.min_third = r1.values.at(0);
      pr.residual_third = r1.residuals.at(0);
      pr.satisfies_third = pr.min_third >= -tol;
      pr.measured = pr.min_anticommutator >= -tol ? PairClass::PSD_CLASS : PairClass::THIRD_CLASS;
      pr.geometric = geometric_pair_class(i, j);
      if (pr.measured == PairClass::PSD_CLASS)
        ++rep.psd_count;
      else if (pr.satisfies_third)
        ++rep.third_count;
      else
        ++rep.violations;
      rep.pairs.push_back(pr);
    }
  return rep;
}

// Applies a single-site 2x2 operator to site `pos` of a qubit-level state (no open legs).
inline CVec apply_site_op(const CVec& v, int n, int pos, const Eigen::Matrix2cd& op) {
  CVec out = CVec::Zero(v.size());
  const Index stride = Index(1) << (n - 1 - pos);
  for (Index i = 0; i < v.size(); ++i) {
    int b = int((i / stride) & 1);
    Index base = i - b * stride;
    out(base) += op(0, b) * v(i);
    out(base + stride) += op(1, b) * v(i);
  }
  return out;
}

struct PauliTensorMatch {
  std::vector<int> paulis;  // per site: 0 I, 1 X, 2 Y, 3 Z
  double fidelity = 0;
  bool found = false;
  json to_json() const {
    std::string s;
    for (int k : paulis) s += "IXYZ"[k];
    return {{"paulis", s}, {"fidelity", fidelity}, {"found", found}};
  }
};

// Exhaustive search for ⊗ sigma_k with |<target| ⊗sigma |source>|^2 >= 1 - tol.
inline PauliTensorMatch find_pauli_tensor(const StateVector& source, const StateVector& target, double tol = 1e-10) {
  const int n = int(source.sites.size());
  if (!source.open_legs.empty() || source.size() != target.size() || source.size() != (Index(1) << n))
    throw Error(ErrorKind::DimensionMismatch, "pauli search needs qubit-level states without open legs");
  std::array<Eigen::Matrix2cd, 4> sig;
  sig[0] << 1, 0, 0, 1;
  sig[1] << 0, 1, 1, 0;
  sig[2] << 0, cplx(0, -1), cplx(0, 1), 0;
  sig[3] << 1, 0, 0, -1;
  PauliTensorMatch best;
  best.paulis.assign(n, 0);
  std::vector<int> ks(n, 0);
  for (Index code = 0; code < ipow(4, n); ++code) {
    Index c = code;
    for (int i = n - 1; i >= 0; --i) {
      ks[i] = int(c % 4);
      c /= 4;
    }
    CVec v = source.amplitudes;
    for (int i = 0; i < n; ++i)
      if (ks[i]) v = apply_site_op(v, n, i, sig[ks[i]]);
    double f = std::norm(target.amplitudes.dot(v)) / (v.squaredNorm() * target.amplitudes.squaredNorm());
    if (f > best.fidelity) {
      best.fidelity = f;
      best.paulis = ks;
    }
    if (f >= 1 - tol) break;
  }
  best.found = best.fidelity >= 1 - tol;
  return best;
}

// Smallest patch with an interior block: A(1,1)-B(2,1) and its four neighbour blocks.
inline HexLattice interior_block_patch() {
  return HexLattice::from_coords({{0, 0}, {1, 0}, {0, 2}, {1, 2}, {1, 1}, {2, 1}, {2, 0}, {3, 0}, {2, 2}, {3, 2}});
}

// The patch itself when it has an interior block, otherwise interior_block_patch().
inline std::pair<HexLattice, bool> gap_lemma_patch(const HexLattice& L) {
  if (!block_partition(L).interior_blocks().empty()) return {L, false};
  return {interior_block_patch(), true};
}

struct KBoundReport {
  GapReport gap;
  int blocks = 0;
  int adjacencies = 0;
  double state_residual = 0;
  bool pass(double bound = 1.0 / 3.0, double slack = 1e-6) const { return gap.gap >= bound - slack; }

  json to_json() const {
    json j = gap.to_json();
    j["name"] = "K_bound";
    j["blocks"] = blocks;
    j["adjacencies"] = adjacencies;
    j["state_residual"] = state_residual;
    j["bound"] = 1.0 / 3.0;
    j["pass"] = pass();
    return j;
  }
};

// K = sum over adjacent blocks of k_mn, on the sites covered by blocks.
inline KBoundReport check_K_bound(const HexLattice& L, const SpectrumOptions& opt = {}) {
  BlockPartition P = block_partition(L);
  if (P.blocks.size() < 2) throw Error(ErrorKind::InvalidArgument, "K bound needs at least two blocks");
  std::vector<Coord> cs;
  for (const auto& b : P.blocks) {
    cs.push_back(L.coord(b.lower));
    cs.push_back(L.coord(b.upper));
  }
  HexLattice Lb = HexLattice::from_coords(cs);
  HamiltonianOperator K = assemble(Lb, Flavor::BLOCK_K);
  KBoundReport r;
  r.blocks = int(P.blocks.size());
  r.adjacencies = int(K.terms().size());
  r.gap = spectral_gap(Lb, K, opt);
  StateVector psi = contract_state(Lb, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(Lb));
  CVec y;
  K.apply(psi.amplitudes, y);
  r.state_residual = y.norm();
  return r;
}

}  // namespace tricluster
