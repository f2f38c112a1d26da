#pragma once

#include "tricluster/core.hpp"
#include "tricluster/lattice.hpp"
#include "tricluster/peps.hpp"
#include "tricluster/subspace.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <optional>

namespace tricluster {

enum class Flavor { PROJECTOR, SPIN_EXPLICIT, BLOCK_K };

inline const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::PROJECTOR: return "projector";
    case Flavor::SPIN_EXPLICIT: return "spin";
    case Flavor::BLOCK_K: return "block-k";
  }
  return "?";
}

inline Flavor parse_flavor(const std::string& s) {
  if (s == "projector") return Flavor::PROJECTOR;
  if (s == "spin") return Flavor::SPIN_EXPLICIT;
  if (s == "block-k") return Flavor::BLOCK_K;
  throw Error(ErrorKind::InvalidArgument, "unknown flavor '" + s + "'");
}

// Local Hermitian term. Either `matrix` is set, or the term is I - kernel kernel^T
// with orthonormal `kernel` columns (large projectors stay factored).
struct OperatorTerm {
  std::vector<SiteId> sites;
  RMat matrix;
  RMat kernel;
  bool factored = false;
  Flavor flavor = Flavor::PROJECTOR;
  std::optional<Orientation> orientation;

  Index dim() const { return ipow(6, int(sites.size())); }
  RMat dense() const {
    if (!factored) return matrix;
    return RMat::Identity(dim(), dim()) - kernel * kernel.transpose();
  }
};

// Free-leg order on each site for a bond of the given orientation, plus the bonded roles.
inline std::pair<int, int> bonded_roles(Orientation o) {
  switch (o) {
    case Orientation::A_LEFT_OF_B: return {1, 0};
    case Orientation::A_RIGHT_OF_B: return {0, 1};
    case Orientation::A_BELOW_B: return {2, 2};
  }
  return {0, 0};
}

// S_ab on (A site, B site), spanned by (P⊗P)|±>|±>|φ>|±>|±>. Built directly from
// the 64-dim virtual vectors, independently of the network contraction.
inline SupportSpace pair_support(Orientation o, double tol = 1e-9) {
  const CMat P = projector(ProjectorKind::TRIC).matrix();
  const CVec phi = singlet();
  auto [ra, rb] = bonded_roles(o);
  std::vector<int> fa, fb;
  for (int r = 0; r < 3; ++r) {
    if (r != ra) fa.push_back(r);
    if (r != rb) fb.push_back(r);
  }
  const double s = M_SQRT1_2;
  CMat vecs(64, 16);
  for (int signs = 0; signs < 16; ++signs) {
    int sg[4] = {(signs >> 3) & 1, (signs >> 2) & 1, (signs >> 1) & 1, signs & 1};
    CVec v = CVec::Zero(64);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        int abit[3] = {(a >> 2) & 1, (a >> 1) & 1, a & 1};
        int bbit[3] = {(b >> 2) & 1, (b >> 1) & 1, b & 1};
        cplx amp = phi(2 * abit[ra] + bbit[rb]);
        int free_bits[4] = {abit[fa[0]], abit[fa[1]], bbit[fb[0]], bbit[fb[1]]};
        for (int q = 0; q < 4; ++q) amp *= (sg[q] && free_bits[q]) ? -s : s;
        v(8 * a + b) = amp;
      }
    vecs.col(signs) = v;
  }
  CMat PP(36, 64);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) PP(6 * i + j, 8 * a + b) = P(i, a) * P(j, b);
  return orthonormal_image(PP * vecs, tol, {0, 1}, {6, 6});
}

inline OperatorTerm h_projector(Orientation o) {
  SupportSpace S = pair_support(o);
  OperatorTerm t;
  t.sites = {0, 1};
  t.kernel = S.basis.real();
  t.matrix = RMat::Identity(36, 36) - t.kernel * t.kernel.transpose();
  t.flavor = Flavor::PROJECTOR;
  t.orientation = o;
  return t;
}

using LevelMap = std::array<int, 6>;

inline LevelMap identity_level_map() { return {0, 1, 2, 3, 4, 5}; }

struct SpinMatrices {
  CMat Sz, Sp, Sm, Sx, Sy;
  LevelMap level_map;
};

// Level |n~> has S_z = 5/2 - level_map[n].
inline SpinMatrices spin_matrices(const LevelMap& level_map) {
  LevelMap sorted = level_map;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != identity_level_map()) throw Error(ErrorKind::InvalidArgument, "level map is not a permutation of 0..5");
  const double s = 2.5;
  SpinMatrices S;
  S.level_map = level_map;
  S.Sz = CMat::Zero(6, 6);
  S.Sp = CMat::Zero(6, 6);
  std::array<int, 6> level_of_k{};
  for (int n = 0; n < 6; ++n) level_of_k[level_map[n]] = n;
  for (int n = 0; n < 6; ++n) {
    double m = s - level_map[n];
    S.Sz(n, n) = m;
    if (level_map[n] > 0) S.Sp(level_of_k[level_map[n] - 1], n) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  S.Sm = S.Sp.adjoint();
  S.Sx = (S.Sp + S.Sm) * 0.5;
  S.Sy = (S.Sp - S.Sm) * cplx(0, -0.5);
  return S;
}

namespace detail {

inline RMat kron(const RMat& a, const RMat& b) {
  RMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline RMat swap_sites(const RMat& h) {
  RMat out(36, 36);
  for (int i = 0; i < 36; ++i)
    for (int j = 0; j < 36; ++j) out((i % 6) * 6 + i / 6, (j % 6) * 6 + j / 6) = h(i, j);
  return out;
}

// Product of linear factors (c1*Sz + c0) over the list.
inline RMat linear_product(const RMat& Sz, std::initializer_list<std::pair<double, double>> factors) {
  RMat out = RMat::Identity(6, 6);
  for (auto [c1, c0] : factors) out = out * (c1 * Sz + c0 * RMat::Identity(6, 6));
  return out;
}

// Polynomial with coefficients listed from the highest power down to the constant.
inline RMat polynomial(const RMat& Sz, std::initializer_list<double> coeffs) {
  RMat out = RMat::Zero(6, 6);
  for (double c : coeffs) out = out * Sz + c * RMat::Identity(6, 6);
  return out;
}

// Horizontal term on (left site) ⊗ (right site).
inline RMat h_pair_horizontal(const SpinMatrices& S) {
  const RMat Sz = S.Sz.real(), Sp = S.Sp.real();
  const RMat Sp3 = Sp * Sp * Sp;
  const double r2 = std::sqrt(2.0), r10 = std::sqrt(10.0);
  RMat f = linear_product(Sz, {{2, -5}, {2, -3}, {2, -1}, {2, 1}, {4, 11}});
  RMat g = linear_product(Sz, {{2, 5}, {2, 3}, {2, -1}, {2, 1}, {4, -11}});
  RMat X = 2.0 * kron(f, g);
  X -= 75 * r2 * kron(Sp * linear_product(Sz, {{2, -5}, {2, 3}, {2, -1}, {2, 1}}),
                      polynomial(Sz, {48, 64, -280, -272, 67}));
  X += 75 * r2 * kron(polynomial(Sz, {48, -64, -280, 272, 67}),
                      Sp * linear_product(Sz, {{2, -5}, {2, -3}, {2, -1}, {2, 3}}));
  X += 4 * r10 * kron(Sp3 * linear_product(Sz, {{2, -1}, {2, -3}}),
                      polynomial(Sz, {128, 560, 0, -2840, -3848, 675}));
  X += 4 * r10 * kron(polynomial(Sz, {128, -560, 0, 2840, -3848, -675}),
                      Sp3 * linear_product(Sz, {{2, -5}, {2, -3}}));
  return X + X.transpose();
}

// Vertical term on (lower A site) ⊗ (upper B site).
inline RMat h_pair_vertical(const SpinMatrices& S) {
  const RMat Sz = S.Sz.real(), Sp = S.Sp.real();
  const RMat Sp3 = Sp * Sp * Sp, Sp5 = Sp3 * Sp * Sp;
  const RMat I = RMat::Identity(6, 6);
  RMat X = -25.0 * kron(linear_product(Sz, {{2, -5}, {2, -3}, {2, 3}, {2, 5}}), I);
  X += 25.0 * kron(Sp3 * linear_product(Sz, {{2, -5}, {2, -1}}),
                   polynomial(Sz, {224, -16, -1968, 40, 3550, -9}));
  X -= 12.0 * kron(Sp5, polynomial(Sz, {416, -80, -3600, 520, 5994, -125}));
  RMat Y = X + X.transpose();
  return Y + swap_sites(Y);
}

}  // namespace detail

// Transcription of the explicit spin-operator terms, on (A site, B site).
inline OperatorTerm h_spin(Orientation o, const SpinMatrices& S) {
  OperatorTerm t;
  t.sites = {0, 1};
  t.flavor = Flavor::SPIN_EXPLICIT;
  t.orientation = o;
  switch (o) {
    case Orientation::A_LEFT_OF_B: t.matrix = detail::h_pair_horizontal(S); break;
    case Orientation::A_RIGHT_OF_B: t.matrix = detail::swap_sites(detail::h_pair_horizontal(S)); break;
    case Orientation::A_BELOW_B: t.matrix = detail::h_pair_vertical(S); break;
  }
  return t;
}

struct TermSpectrum {
  double min_eig = 0, max_eig = 0;
  int kernel_dim = 0;
  bool psd = false;
  bool kernel_matches = false;
  double kernel_angle = M_PI / 2;
};

// PSD: min >= -tol*max|λ|; kernel: |λ| <= tol*max|λ|; kernel compared with pair_support.
inline TermSpectrum analyze_spin_term(const RMat& h, const SupportSpace& target, double tol = 1e-8) {
  Eigen::SelfAdjointEigenSolver<RMat> es(h);
  const RVec& ev = es.eigenvalues();
  TermSpectrum r;
  r.min_eig = ev(0);
  r.max_eig = ev(ev.size() - 1);
  double scale = std::max(std::abs(r.min_eig), std::abs(r.max_eig));
  r.psd = r.min_eig >= -tol * scale;
  std::vector<Index> ker;
  for (Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) <= tol * scale) ker.push_back(i);
  r.kernel_dim = int(ker.size());
  if (r.kernel_dim == target.rank) {
    CMat K(36, ker.size());
    for (std::size_t i = 0; i < ker.size(); ++i) K.col(i) = es.eigenvectors().col(ker[i]).cast<cplx>();
    auto ang = principal_angles(K, target.basis);
    r.kernel_angle = ang.empty() ? 0.0 : ang.back();
    r.kernel_matches = r.kernel_angle < tol;
  }
  return r;
}

struct LevelMapSearch {
  std::vector<LevelMap> passing;
  nlohmann::json report;
};

// Exhaustive search over the 720 level maps.
inline LevelMapSearch find_level_map(double tol = 1e-8) {
  std::array<SupportSpace, 3> targets;
  for (int k = 0; k < 3; ++k) targets[k] = pair_support(kOrientations[k]);
  LevelMapSearch out;
  nlohmann::json perms = nlohmann::json::array();
  LevelMap p = identity_level_map();
  double best_neg = -1e300;
  LevelMap best = p;
  do {
    SpinMatrices S = spin_matrices(p);
    nlohmann::json e;
    e["level_map"] = p;
    bool pass = true;
    double worst = 0;
    for (int k = 0; k < 3; ++k) {
      auto r = analyze_spin_term(h_spin(kOrientations[k], S).matrix, targets[k], tol);
      e["kernel_dims"].push_back(r.kernel_dim);
      e["min_eig"].push_back(r.min_eig);
      e["psd"].push_back(r.psd);
      e["kernel_matches"].push_back(r.kernel_matches);
      pass = pass && r.psd && r.kernel_matches;
      double scale = std::max(std::abs(r.min_eig), std::abs(r.max_eig));
      worst = std::min(worst, r.min_eig / std::max(scale, 1e-300));
    }
    e["pass"] = pass;
    if (pass) out.passing.push_back(p);
    if (worst > best_neg) {
      best_neg = worst;
      best = p;
    }
    perms.push_back(e);
  } while (std::next_permutation(p.begin(), p.end()));

  nlohmann::json diag = nlohmann::json::array();
  SpinMatrices S0 = spin_matrices(identity_level_map());
  for (int k = 0; k < 3; ++k) {
    RMat h = h_spin(kOrientations[k], S0).matrix;
    RVec d = h.diagonal();
    int neg = 0, zero = 0, pos = 0;
    for (Index i = 0; i < d.size(); ++i) {
      if (d(i) < -1e-9) ++neg;
      else if (d(i) > 1e-9) ++pos;
      else ++zero;
    }
    diag.push_back({{"orientation", to_string(kOrientations[k])},
                    {"trace", h.trace()},
                    {"diag_min", d.minCoeff()},
                    {"diag_max", d.maxCoeff()},
                    {"diag_negative", neg},
                    {"diag_zero", zero},
                    {"diag_positive", pos}});
  }
  out.report["name"] = "find_level_map";
  out.report["candidates"] = 720;
  out.report["passing"] = out.passing;
  out.report["status"] = out.passing.empty() ? "no-consistent-mapping" : "ok";
  out.report["least_negative_map"] = best;
  out.report["least_negative_relative_min_eig"] = best_neg;
  // A permutation of levels only permutes the diagonal, so trace and diagonal
  // signs are the same for all 720 maps.
  out.report["diagonal_analysis"] = diag;
  out.report["permutations"] = perms;
  return out;
}

inline OperatorTerm build_k_term(const HexLattice& L, const BlockPartition& P, int m, int n, double tol = 1e-9) {
  if (m == n || m < 0 || n < 0 || m >= int(P.blocks.size()) || n >= int(P.blocks.size()))
    throw Error(ErrorKind::InvalidPair, "bad block indices");
  std::pair<int, int> key{std::min(m, n), std::max(m, n)};
  if (std::find(P.adjacency.begin(), P.adjacency.end(), key) == P.adjacency.end())
    throw Error(ErrorKind::InvalidPair, "blocks " + std::to_string(m) + " and " + std::to_string(n) + " are not adjacent");
  std::vector<SiteId> sites = {P.blocks[m].lower, P.blocks[m].upper, P.blocks[n].lower, P.blocks[n].upper};
  std::sort(sites.begin(), sites.end());
  SupportSpace S = support_space(L, projector(ProjectorKind::TRIC), sites, tol);
  OperatorTerm t;
  t.sites = sites;
  t.kernel = S.basis.real();
  t.factored = true;
  t.flavor = Flavor::BLOCK_K;
  return t;
}

// Sum of local terms on a tensor product of 6-level sites (row-major over `sites`).
class HamiltonianOperator {
 public:
  HamiltonianOperator() = default;
  HamiltonianOperator(int num_sites, std::vector<OperatorTerm> terms) : n_(num_sites), terms_(std::move(terms)) {
    for (const auto& t : terms_)
      for (SiteId s : t.sites)
        if (s < 0 || s >= n_) throw Error(ErrorKind::InvalidArgument, "term site out of range");
  }

  int num_sites() const { return n_; }
  Index dim() const { return ipow(6, n_); }
  const std::vector<OperatorTerm>& terms() const { return terms_; }

  // y = sum_t (term_t ⊗ I) x, terms accumulated in declaration order.
  template <class S>
  void apply(const Eigen::Matrix<S, Eigen::Dynamic, 1>& x, Eigen::Matrix<S, Eigen::Dynamic, 1>& y) const {
    y = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(x.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) apply_term(t, x, y);
  }

  template <class S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<S, Eigen::Dynamic, 1>& x) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> y;
    apply(x, y);
    return y;
  }

  // y += scale * (term ⊗ I) x
  template <class S>
  void apply_term(std::size_t t, const Eigen::Matrix<S, Eigen::Dynamic, 1>& x, Eigen::Matrix<S, Eigen::Dynamic, 1>& y,
                  double scale = 1.0) const {
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    const OperatorTerm& term = terms_[t];
    if (x.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "apply: vector length");
    auto plan = make_plan(term);
    const Index dloc = Index(plan.offsets.size());
    Mat M, K;
    if (term.factored)
      K = term.kernel.template cast<S>();
    else
      M = term.matrix.template cast<S>();
    const Index nb = Index(plan.bases.size());
    const Index chunk = 64;
    parallel_for((nb + chunk - 1) / chunk, [&](Index c) {
      Vec xl(dloc), yl(dloc);
      for (Index r = c * chunk; r < std::min(nb, (c + 1) * chunk); ++r) {
        const Index base = plan.bases[r];
        for (Index a = 0; a < dloc; ++a) xl(a) = x(base + plan.offsets[a]);
        if (term.factored)
          yl.noalias() = xl - K * (K.adjoint() * xl);
        else
          yl.noalias() = M * xl;
        for (Index a = 0; a < dloc; ++a) y(base + plan.offsets[a]) += scale * yl(a);
      }
    }, 1);
  }

  RMat dense(const Budget& budget = {}) const {
    budget.require(double(dim()) * double(dim()) * sizeof(double), "dense Hamiltonian");
    RMat H = RMat::Zero(dim(), dim());
    for (const auto& term : terms_) {
      auto plan = make_plan(term);
      RMat M = term.dense();
      for (Index base : plan.bases)
        for (std::size_t a = 0; a < plan.offsets.size(); ++a)
          for (std::size_t b = 0; b < plan.offsets.size(); ++b)
            H(base + plan.offsets[a], base + plan.offsets[b]) += M(a, b);
    }
    return H;
  }

 private:
  struct Plan {
    std::vector<Index> offsets;  // local index -> global offset
    std::vector<Index> bases;    // global offsets with all term digits zero
  };

  Plan make_plan(const OperatorTerm& term) const {
    std::vector<Index> stride(n_, 1);
    for (int i = n_ - 2; i >= 0; --i) stride[i] = stride[i + 1] * 6;
    Plan p;
    int k = int(term.sites.size());
    Index dloc = ipow(6, k);
    p.offsets.resize(dloc);
    for (Index a = 0; a < dloc; ++a) {
      Index rem = a, off = 0;
      for (int i = k - 1; i >= 0; --i) {
        off += (rem % 6) * stride[term.sites[i]];
        rem /= 6;
      }
      p.offsets[a] = off;
    }
    std::vector<int> others;
    for (int s = 0; s < n_; ++s)
      if (std::find(term.sites.begin(), term.sites.end(), s) == term.sites.end()) others.push_back(s);
    Index nb = ipow(6, int(others.size()));
    p.bases.resize(nb);
    for (Index r = 0; r < nb; ++r) {
      Index rem = r, off = 0;
      for (int i = int(others.size()) - 1; i >= 0; --i) {
        off += (rem % 6) * stride[others[i]];
        rem /= 6;
      }
      p.bases[r] = off;
    }
    return p;
  }

  int n_ = 0;
  std::vector<OperatorTerm> terms_;
};

struct AssembleOptions {
  LevelMap level_map = identity_level_map();
  Budget budget;
};

inline HamiltonianOperator assemble(const HexLattice& L, Flavor flavor, const AssembleOptions& opt = {}) {
  std::vector<OperatorTerm> terms;
  if (flavor == Flavor::BLOCK_K) {
    BlockPartition P = block_partition(L);
    for (auto [m, n] : P.adjacency) terms.push_back(build_k_term(L, P, m, n));
    return HamiltonianOperator(L.num_sites(), std::move(terms));
  }
  std::array<std::optional<OperatorTerm>, 3> cache;
  std::optional<SpinMatrices> spins;
  if (flavor == Flavor::SPIN_EXPLICIT) spins = spin_matrices(opt.level_map);
  for (const auto& b : L.bonds()) {
    auto& c = cache[int(b.orientation)];
    if (!c) c = flavor == Flavor::PROJECTOR ? h_projector(b.orientation) : h_spin(b.orientation, *spins);
    OperatorTerm t = *c;
    t.sites = {HexLattice::site_of(b.a), HexLattice::site_of(b.b)};
    terms.push_back(std::move(t));
  }
  return HamiltonianOperator(L.num_sites(), std::move(terms));
}

}  // namespace tricluster
