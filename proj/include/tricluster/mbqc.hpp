#pragma once

#include "tricluster/core.hpp"
#include "tricluster/lattice.hpp"
#include "tricluster/peps.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace tricluster {

// ---------------------------------------------------------------------------
// Gates

namespace gates {

inline CMat I2() { return CMat::Identity(2, 2); }
inline CMat X() {
  CMat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline CMat Y() {
  CMat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline CMat Z() {
  CMat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline CMat H() {
  CMat m(2, 2);
  m << 1, 1, 1, -1;
  return m * M_SQRT1_2;
}
// diag(1, e^{iθ})
inline CMat Zt(double theta) {
  CMat m = CMat::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = std::polar(1.0, theta);
  return m;
}
inline CMat CZ() {
  CMat m = CMat::Identity(4, 4);
  m(3, 3) = -1;
  return m;
}
inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}
inline CMat pow(const CMat& m, int e) { return (e % 2) ? m : CMat::Identity(m.rows(), m.cols()); }

// Pauli index: 0 I, 1 X, 2 Y, 3 Z.
inline CMat pauli(int k) {
  switch (k) {
    case 0: return I2();
    case 1: return X();
    case 2: return Y();
    default: return Z();
  }
}
inline CMat pauli_string(const std::vector<int>& ks) {
  CMat out = CMat::Identity(1, 1);
  for (int k : ks) out = kron(out, pauli(k));
  return out;
}
inline char pauli_char(int k) { return "IXYZ"[k & 3]; }

}  // namespace gates

// |tr(A^H B)|^2 / (|A|^2 |B|^2): 1 iff A and B agree up to a global phase.
inline double operator_fidelity(const CMat& A, const CMat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw Error(ErrorKind::DimensionMismatch, "operator shapes differ");
  double na = A.squaredNorm(), nb = B.squaredNorm();
  if (!(na > 0) || !(nb > 0)) return 0.0;
  cplx ov = (A.adjoint() * B).trace();
  return std::norm(ov) / (na * nb);
}

// Pauli string P (one index per wire) with M ≍ P, if any.
inline std::optional<std::vector<int>> pauli_factor(const CMat& M, double tol = 1e-10) {
  int n = 0;
  while ((Index(1) << n) < M.rows()) ++n;
  if ((Index(1) << n) != M.rows() || M.rows() != M.cols()) return std::nullopt;
  std::vector<int> ks(n, 0);
  for (Index code = 0; code < ipow(4, n); ++code) {
    Index c = code;
    for (int w = n - 1; w >= 0; --w) {
      ks[w] = int(c % 4);
      c /= 4;
    }
    if (operator_fidelity(M, gates::pauli_string(ks)) > 1 - tol) return ks;
  }
  return std::nullopt;
}

// Pauli strings P with actual ≍ P · expected (exhaustive over 4^wires).
inline std::optional<std::vector<int>> identify_pauli(const CMat& actual, const CMat& expected, double tol = 1e-10) {
  int n = 0;
  while ((Index(1) << n) < actual.rows()) ++n;
  std::vector<int> ks(n, 0);
  for (Index code = 0; code < ipow(4, n); ++code) {
    Index c = code;
    for (int w = n - 1; w >= 0; --w) {
      ks[w] = int(c % 4);
      c /= 4;
    }
    if (operator_fidelity(actual, gates::pauli_string(ks) * expected) > 1 - tol) return ks;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Bases

enum class BasisKind { COMPUTATIONAL6, ROTATED, HAT };

struct MeasBasis {
  BasisKind kind = BasisKind::HAT;
  double theta = 0.0;

  static MeasBasis comp6() { return {BasisKind::COMPUTATIONAL6, 0.0}; }
  static MeasBasis hat() { return {BasisKind::HAT, 0.0}; }
  static MeasBasis rotated(double t) { return {BasisKind::ROTATED, t}; }

  nlohmann::json to_json() const {
    switch (kind) {
      case BasisKind::COMPUTATIONAL6: return "comp6";
      case BasisKind::HAT: return "hat";
      default: return nlohmann::json{{"rot", theta}};
    }
  }
  static MeasBasis from_json(const nlohmann::json& j) {
    if (j.is_string()) {
      if (j == "comp6") return comp6();
      if (j == "hat") return hat();
    } else if (j.is_object() && j.contains("rot")) {
      return rotated(j.at("rot").get<double>());
    }
    throw Error(ErrorKind::InvalidArgument, "unknown basis " + j.dump());
  }
};

// Column k is the outcome-k vector.
inline CMat basis_vectors(const MeasBasis& b) {
  if (b.kind == BasisKind::COMPUTATIONAL6) return CMat::Identity(6, 6);
  double t = b.kind == BasisKind::HAT ? 0.0 : b.theta;
  const cplx ph[3] = {std::polar(1.0, t), std::polar(1.0, t), std::polar(1.0, -t)};
  CMat V = CMat::Zero(6, 6);
  for (int p = 0; p < 3; ++p)
    for (int s = 0; s < 2; ++s) {
      V(2 * p, 2 * p + s) = M_SQRT1_2;
      V(2 * p + 1, 2 * p + s) = (s == 0 ? 1.0 : -1.0) * ph[p] * M_SQRT1_2;
    }
  return V;
}

// 1x8 map of a site measured with `outcome`: <v_k| P.
inline CMat measured_site_map(const ProjectorSpec& P, const MeasBasis& b, int outcome) {
  return basis_vectors(b).col(outcome).adjoint() * P.matrix();
}

// ---------------------------------------------------------------------------
// Records and states

struct PauliFrame {
  std::vector<std::array<int, 2>> bits;  // per wire: x, z
  std::vector<nlohmann::json> history;

  explicit PauliFrame(int wires = 0) : bits(wires, {0, 0}) {}

  void add(int wire, int x, int z, const std::string& source) {
    bits.at(wire)[0] ^= (x & 1);
    bits.at(wire)[1] ^= (z & 1);
    history.push_back({{"wire", wire}, {"x", x & 1}, {"z", z & 1}, {"source", source}});
  }
  // Adds a Pauli string (I,X,Y,Z indices); Y counts as X and Z.
  void add_string(const std::vector<int>& ks, const std::string& source) {
    for (int w = 0; w < int(ks.size()); ++w)
      if (ks[w]) add(w, ks[w] == 1 || ks[w] == 2, ks[w] == 2 || ks[w] == 3, source);
  }
  // ⊗_w X^x Z^z
  CMat op() const {
    CMat out = CMat::Identity(1, 1);
    for (auto [x, z] : bits) out = gates::kron(out, gates::pow(gates::X(), x) * gates::pow(gates::Z(), z));
    return out;
  }
  nlohmann::json to_json() const {
    nlohmann::json w = nlohmann::json::array();
    for (auto [x, z] : bits) w.push_back({{"x", x}, {"z", z}});
    return {{"wires", w}, {"history", history}};
  }
};

struct MeasurementRecord {
  SiteId site = -1;
  Coord coord;
  MeasBasis basis;
  int outcome = -1;
  double probability = 0.0;
  bool postselected = false;
  std::array<double, 6> distribution{};

  nlohmann::json to_json() const {
    return {{"site", {coord.row, coord.col}}, {"basis", basis.to_json()},  {"outcome", outcome},
            {"probability", probability},     {"postselected", postselected}};
  }
};

struct LogicalState {
  std::vector<std::string> wires;
  CVec amplitudes;
  double norm = 1.0;

  static LogicalState basis(const std::vector<std::string>& wires, Index k) {
    LogicalState s{wires, CVec::Zero(Index(1) << wires.size()), 1.0};
    s.amplitudes(k) = 1;
    return s;
  }
};

inline double compare_up_to_phase(const LogicalState& x, const LogicalState& y) {
  if (x.amplitudes.size() != y.amplitudes.size())
    throw Error(ErrorKind::DimensionMismatch, "logical states have different wire counts");
  double nx = x.amplitudes.squaredNorm(), ny = y.amplitudes.squaredNorm();
  if (!(nx > 0) || !(ny > 0)) return 0.0;
  return std::norm(x.amplitudes.dot(y.amplitudes)) / (nx * ny);
}

// ---------------------------------------------------------------------------
// Reference circuit simulator

struct Gate {
  std::string name;  // H, X, Y, Z, Zt (angle), CZ
  std::vector<std::string> wires;
  double angle = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"gate", name}, {"wires", wires}};
    if (name == "Zt") j["angle"] = angle;
    return j;
  }
  static Gate from_json(const nlohmann::json& j) {
    Gate g;
    g.name = j.at("gate").get<std::string>();
    g.wires = j.at("wires").get<std::vector<std::string>>();
    g.angle = j.value("angle", 0.0);
    return g;
  }
};

inline CMat gate_matrix(const Gate& g) {
  if (g.name == "H") return gates::H();
  if (g.name == "X") return gates::X();
  if (g.name == "Y") return gates::Y();
  if (g.name == "Z") return gates::Z();
  if (g.name == "Zt") return gates::Zt(g.angle);
  if (g.name == "CZ") return gates::CZ();
  throw Error(ErrorKind::UnknownGate, "unknown gate " + g.name);
}

// Applies an operator on the listed wire positions (first listed = most significant).
inline CVec apply_on(const CVec& psi, int nwires, const CMat& op, const std::vector<int>& pos) {
  const int k = int(pos.size());
  const Index dim = Index(1) << nwires;
  CVec out = CVec::Zero(dim);
  for (Index i = 0; i < dim; ++i) {
    Index sub = 0;
    for (int a = 0; a < k; ++a) sub = (sub << 1) | ((i >> (nwires - 1 - pos[a])) & 1);
    Index base = i;
    for (int a = 0; a < k; ++a) base &= ~(Index(1) << (nwires - 1 - pos[a]));
    for (Index r = 0; r < (Index(1) << k); ++r) {
      cplx m = op(r, sub);
      if (m == cplx(0)) continue;
      Index j = base;
      for (int a = 0; a < k; ++a)
        if ((r >> (k - 1 - a)) & 1) j |= Index(1) << (nwires - 1 - pos[a]);
      out(j) += m * psi(i);
    }
  }
  return out;
}

inline LogicalState reference_apply(const std::vector<Gate>& circuit, const LogicalState& input) {
  LogicalState s = input;
  const int n = int(s.wires.size());
  for (const Gate& g : circuit) {
    CMat m = gate_matrix(g);
    if (m.rows() != (Index(1) << g.wires.size()))
      throw Error(ErrorKind::DimensionMismatch, "gate " + g.name + " acts on the wrong number of wires");
    std::vector<int> pos;
    for (const auto& w : g.wires) {
      auto it = std::find(s.wires.begin(), s.wires.end(), w);
      if (it == s.wires.end()) throw Error(ErrorKind::InvalidArgument, "unknown wire " + w);
      pos.push_back(int(it - s.wires.begin()));
    }
    s.amplitudes = apply_on(s.amplitudes, n, m, pos);
  }
  return s;
}

inline CMat circuit_matrix(const std::vector<Gate>& circuit, const std::vector<std::string>& wires) {
  const Index d = Index(1) << wires.size();
  CMat U(d, d);
  for (Index k = 0; k < d; ++k) U.col(k) = reference_apply(circuit, LogicalState::basis(wires, k)).amplitudes;
  return U;
}

// ---------------------------------------------------------------------------
// Correction tables

struct InitReadout {
  int init_sign;  // +1 for |+>, -1 for |->
  int readout_bit;
};

inline InitReadout init_readout_map(int outcome) {
  if (outcome < 0 || outcome > 5) throw Error(ErrorKind::InvalidArgument, "outcome out of range");
  bool plus = outcome == 0 || outcome == 3 || outcome == 4;
  bool one = outcome == 1 || outcome == 3 || outcome == 4;
  return {plus ? 1 : -1, one ? 1 : 0};
}

inline CMat one_qubit_table(int outcome, double theta) {
  static const int prefix[6] = {0, 1, 3, 2, 3, 2};  // I, X, Z, Y, Z, Y
  if (outcome < 0 || outcome > 5) throw Error(ErrorKind::InvalidArgument, "outcome out of range");
  return gates::pauli(prefix[outcome]) * gates::H() * gates::Zt(theta);
}

struct CzExponents {
  std::array<int, 2> u{}, v{}, w{};
};

inline CzExponents cz_exponents(int oa, int ob) {
  CzExponents e;
  int o[2] = {oa, ob};
  for (int i = 0; i < 2; ++i) {
    e.u[i] = o[i] == 1 || o[i] == 3 || o[i] == 5;
    e.v[i] = o[i] >= 2;
    e.w[i] = o[i] >= 4;
  }
  return e;
}

inline CMat cz_correction(int oa, int ob) {
  using namespace gates;
  auto e = cz_exponents(oa, ob);
  CMat A = pow(X(), e.u[0]) * pow(Z(), e.v[0]) * H();
  CMat B = pow(X(), e.u[1]) * pow(Z(), e.v[1]) * H();
  CMat W = kron(pow(X(), e.w[0]), pow(X(), e.w[1]));
  return kron(A, B) * W * CZ() * W;
}

struct AppendixBOutcomes {
  int ia = 0, ib = 0, ic = 0, id = 0;  // HAT
  int je = 0, jf = 0;                  // COMPUTATIONAL6
};

struct AppendixBExponents {
  int ua, ub, va, vb, wa, wb, ue, uf, uc, ud, vc, vd;
  int za() const { return (uc + ue + vd) & 1; }
  int zb() const { return (ud + uf + vc) & 1; }
  nlohmann::json to_json() const {
    return {{"u_a", ua}, {"u_b", ub}, {"v_a", va}, {"v_b", vb}, {"w_a", wa}, {"w_b", wb},
            {"u_e", ue}, {"u_f", uf}, {"u_c", uc}, {"u_d", ud}, {"v_c", vc}, {"v_d", vd}};
  }
};

inline AppendixBExponents appendixB_exponents(const AppendixBOutcomes& o) {
  auto in = [](int x, std::initializer_list<int> s) { return int(std::find(s.begin(), s.end(), x) != s.end()); };
  AppendixBExponents e{};
  e.ua = e.va = in(o.ia, {4, 5});
  e.ub = e.vb = in(o.ib, {4, 5});
  e.wa = in(o.ia, {1, 3, 5});
  e.wb = in(o.ib, {1, 3, 5});
  e.ue = in(o.je, {0, 3, 4});
  e.uf = in(o.jf, {1, 2, 5});
  e.uc = in(o.ic, {2, 3});
  e.ud = in(o.id, {4, 5});
  e.vc = in(o.ic, {1, 3, 5});
  e.vd = in(o.id, {1, 3, 5});
  return e;
}

inline CMat appendixB_correction(const AppendixBOutcomes& o) {
  using namespace gates;
  auto e = appendixB_exponents(o);
  CMat left = kron(H() * pow(Z(), e.za()), H() * pow(Z(), e.zb()));
  CMat xs = kron(pow(X(), e.ua), pow(X(), e.ub));
  CMat right = kron(pow(X(), e.va) * pow(Z(), e.wa), pow(X(), e.vb) * pow(Z(), e.wb));
  return left * xs * CZ() * right;
}

// ---------------------------------------------------------------------------
// Measurement on a state vector

struct MeasureMode {
  enum Kind { SAMPLE, POSTSELECT } kind = SAMPLE;
  std::uint64_t seed = 0;
  int outcome = 0;

  static MeasureMode sample(std::uint64_t seed) { return {SAMPLE, seed, 0}; }
  static MeasureMode post(int k) { return {POSTSELECT, 0, k}; }
};

// Born-rule measurement of `site`. `rng`, when given, supplies the draw
// (so one generator can serve a whole pattern); otherwise mode.seed seeds one.
inline std::pair<MeasurementRecord, StateVector> measure_site(const StateVector& sv, SiteId site, const MeasBasis& basis,
                                                              const MeasureMode& mode, CounterRng* rng = nullptr) {
  auto it = std::find(sv.sites.begin(), sv.sites.end(), site);
  if (it == sv.sites.end())
    throw Error(ErrorKind::AlreadyMeasured, "site " + std::to_string(site) + " is not an unmeasured site of this state");
  const int pos = int(it - sv.sites.begin());
  const int d = sv.dims[pos];
  if (d != 6) throw Error(ErrorKind::DimensionMismatch, "measurement bases are 6-dimensional");
  Index outer = 1, inner = Index(1) << sv.open_legs.size();
  for (int i = 0; i < pos; ++i) outer *= sv.dims[i];
  for (int i = pos + 1; i < int(sv.dims.size()); ++i) inner *= sv.dims[i];
  const CMat V = basis_vectors(basis);

  std::array<CVec, 6> branch;
  std::array<double, 6> p{};
  double total = 0;
  for (int k = 0; k < 6; ++k) {
    branch[k] = CVec::Zero(outer * inner);
    for (Index o = 0; o < outer; ++o)
      for (int q = 0; q < d; ++q) {
        cplx c = std::conj(V(q, k));
        if (c == cplx(0)) continue;
        branch[k].segment(o * inner, inner) += c * sv.amplitudes.segment((o * d + q) * inner, inner);
      }
    p[k] = branch[k].squaredNorm();
    total += p[k];
  }
  if (!(total > 0)) throw Error(ErrorKind::ZeroProbability, "state has zero norm");
  for (auto& x : p) x /= total;

  MeasurementRecord rec;
  rec.site = site;
  rec.basis = basis;
  rec.distribution = p;
  if (mode.kind == MeasureMode::POSTSELECT) {
    if (mode.outcome < 0 || mode.outcome > 5) throw Error(ErrorKind::InvalidArgument, "outcome out of range");
    if (p[mode.outcome] < 1e-14)
      throw Error(ErrorKind::ZeroProbability,
                  "outcome " + std::to_string(mode.outcome) + " at site " + std::to_string(site) + " has probability 0");
    rec.outcome = mode.outcome;
    rec.postselected = true;
  } else {
    CounterRng local(mode.seed);
    double u = (rng ? rng : &local)->uniform();
    double cum = 0;
    int last = 0;
    rec.outcome = -1;
    for (int k = 0; k < 6; ++k) {
      if (p[k] > 0) last = k;
      cum += p[k];
      if (u < cum) {
        rec.outcome = k;
        break;
      }
    }
    if (rec.outcome < 0) rec.outcome = last;
  }
  rec.probability = p[rec.outcome];

  StateVector out;
  out.sites = sv.sites;
  out.sites.erase(out.sites.begin() + pos);
  out.dims = sv.dims;
  out.dims.erase(out.dims.begin() + pos);
  out.open_legs = sv.open_legs;
  out.norm = branch[rec.outcome].norm();
  out.amplitudes = branch[rec.outcome] / out.norm;
  return {rec, out};
}

// Output legs must be open indices of a state with no physical site left.
inline LogicalState extract_logical(const StateVector& sv, const std::vector<LegId>& output_legs,
                                    std::vector<std::string> wires = {}) {
  if (!sv.sites.empty())
    throw Error(ErrorKind::IncompletePattern, std::to_string(sv.sites.size()) + " physical sites are unmeasured");
  if (output_legs.size() != sv.open_legs.size())
    throw Error(ErrorKind::InvalidArgument, "output legs must be exactly the open legs");
  const int n = int(output_legs.size());
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) {
    auto it = std::find(sv.open_legs.begin(), sv.open_legs.end(), output_legs[i]);
    if (it == sv.open_legs.end()) throw Error(ErrorKind::InvalidArgument, "leg is not open");
    pos[i] = int(it - sv.open_legs.begin());
  }
  if (wires.empty())
    for (int i = 0; i < n; ++i) wires.push_back("w" + std::to_string(i));
  LogicalState s{wires, CVec::Zero(Index(1) << n), 1.0};
  for (Index j = 0; j < s.amplitudes.size(); ++j) {
    Index src = 0;
    for (int i = 0; i < n; ++i)
      if ((j >> (n - 1 - i)) & 1) src |= Index(1) << (n - 1 - pos[i]);
    s.amplitudes(j) = sv.amplitudes(src);
  }
  s.norm = s.amplitudes.norm();
  if (!(s.norm > 1e-300)) throw Error(ErrorKind::ZeroProbability, "logical state vanished");
  s.amplitudes /= s.norm;
  return s;
}

inline BoundaryAssignment inject_inputs(const HexLattice& L, BoundaryAssignment boundary,
                                        const std::map<LegId, Qubit>& inputs) {
  for (const auto& [leg, q] : inputs) {
    if (leg < 0 || leg >= 3 * L.num_sites() || !L.is_dangling(leg))
      throw Error(ErrorKind::InvalidArgument, "input leg " + std::to_string(leg) + " is not dangling");
    double n = std::sqrt(std::norm(q[0]) + std::norm(q[1]));
    if (!(n > 0)) throw Error(ErrorKind::InvalidArgument, "input state is zero");
    boundary.legs[leg] = Qubit{q[0] / n, q[1] / n};
  }
  return boundary;
}

// ---------------------------------------------------------------------------
// Patterns

struct Wire {
  std::string name;
  LegId leg;
};

struct PatternStep {
  SiteId site;
  MeasBasis basis;
  MeasureMode mode;
  int adapt_wire = -1;  // adaptive mode only: flip θ when this wire's running X frame is odd
};

enum class FrameRule { NONE, LINE, CZ, APPENDIX_B };

inline const char* to_string(FrameRule r) {
  switch (r) {
    case FrameRule::LINE: return "line";
    case FrameRule::CZ: return "cz";
    case FrameRule::APPENDIX_B: return "appendix-b";
    default: return "none";
  }
}

struct Pattern {
  std::string name;
  HexLattice lattice;
  std::vector<Wire> inputs, outputs;
  std::vector<PatternStep> steps;
  FrameRule rule = FrameRule::NONE;
  std::vector<SiteId> rule_sites;  // sites whose outcomes feed the rule, in rule order
  std::vector<Gate> circuit;       // intended logical operation
  CMat encode_in, decode_out;      // fixed Pauli encodings of the input and output legs
  std::optional<Qubit> default_leg = ket_plus();

  std::vector<std::string> wire_names() const {
    std::vector<std::string> w;
    for (const auto& x : outputs) w.push_back(x.name);
    return w;
  }
  std::vector<std::string> input_names() const {
    std::vector<std::string> w;
    for (const auto& x : inputs) w.push_back(x.name);
    return w;
  }
};

// The operator the rule predicts for the given outcomes (-1 = not yet measured, read as 0).
inline CMat rule_operator(const Pattern& p, const std::vector<int>& rule_outcomes, double theta_override = NAN) {
  auto o = [&](int i) { return std::max(0, rule_outcomes.at(i)); };
  switch (p.rule) {
    case FrameRule::LINE: {
      double th = std::isnan(theta_override) ? p.steps.front().basis.theta : theta_override;
      return one_qubit_table(o(0), th);
    }
    case FrameRule::CZ: return cz_correction(o(0), o(1));
    case FrameRule::APPENDIX_B: return appendixB_correction({o(0), o(1), o(2), o(3), o(4), o(5)});
    default: return circuit_matrix(p.circuit, p.input_names());
  }
}

// Logical map (outputs x inputs) of the network with every site measured.
inline CMat logical_action(const Pattern& p, const std::vector<int>& outcomes, const Budget& budget = {}) {
  const HexLattice& L = p.lattice;
  const ProjectorSpec P = projector(ProjectorKind::TRIC);
  std::vector<SiteId> region(L.num_sites());
  std::iota(region.begin(), region.end(), 0);
  std::vector<CMat> maps(L.num_sites());
  std::vector<char> seen(L.num_sites(), 0);
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    maps[p.steps[i].site] = measured_site_map(P, p.steps[i].basis, outcomes.at(i));
    seen[p.steps[i].site] = 1;
  }
  for (SiteId s = 0; s < L.num_sites(); ++s)
    if (!seen[s]) throw Error(ErrorKind::IncompletePattern, "site " + std::to_string(s) + " has no step");
  std::vector<LegId> open;
  for (const auto& w : p.outputs) open.push_back(w.leg);
  for (const auto& w : p.inputs) open.push_back(w.leg);
  std::map<LegId, Qubit> fixed;
  for (LegId l : L.dangling())
    if (std::find(open.begin(), open.end(), l) == open.end()) {
      if (!p.default_leg) throw Error(ErrorKind::ContractBoundary, "no default state for leg " + std::to_string(l));
      fixed[l] = *p.default_leg;
    }
  Tensor t = contract_peps(L, region, maps, fixed, open, budget);
  const Index no = Index(1) << p.outputs.size(), ni = Index(1) << p.inputs.size();
  CMat M(no, ni);
  for (Index r = 0; r < no; ++r)
    for (Index c = 0; c < ni; ++c) M(r, c) = t.data[r * ni + c];
  return M;
}

// Network state with the input legs carrying `psi_in` (encoded) and the outputs open.
inline StateVector prepare_pattern_state(const Pattern& p, const CVec& psi_in, const Budget& budget = {}) {
  const HexLattice& L = p.lattice;
  const int N = L.num_sites();
  const int nout = int(p.outputs.size()), nin = int(p.inputs.size());
  budget.require(double(ipow(6, N)) * double(Index(1) << nout) * sizeof(cplx) * 3, "pattern state");
  if (psi_in.size() != (Index(1) << nin)) throw Error(ErrorKind::DimensionMismatch, "input state size");
  const ProjectorSpec P = projector(ProjectorKind::TRIC);
  std::vector<SiteId> region(N);
  std::iota(region.begin(), region.end(), 0);
  std::vector<CMat> maps(N, P.matrix());
  std::vector<LegId> open;
  for (const auto& w : p.outputs) open.push_back(w.leg);
  std::map<LegId, Qubit> fixed;
  std::vector<LegId> in_legs;
  for (const auto& w : p.inputs) in_legs.push_back(w.leg);
  for (LegId l : L.dangling())
    if (std::find(open.begin(), open.end(), l) == open.end() &&
        std::find(in_legs.begin(), in_legs.end(), l) == in_legs.end()) {
      if (!p.default_leg) throw Error(ErrorKind::ContractBoundary, "no default state for leg " + std::to_string(l));
      fixed[l] = *p.default_leg;
    }
  CVec enc = p.encode_in.size() ? CVec(p.encode_in * psi_in) : psi_in;
  StateVector sv;
  sv.sites = region;
  sv.dims.assign(N, 6);
  sv.open_legs = open;
  sv.amplitudes = CVec::Zero(ipow(6, N) * (Index(1) << nout));
  // One contraction per computational input basis state, summed with the input amplitudes.
  for (Index k = 0; k < enc.size(); ++k) {
    if (enc(k) == cplx(0)) continue;
    for (int i = 0; i < nin; ++i) {
      int bit = (k >> (nin - 1 - i)) & 1;
      fixed[in_legs[i]] = bit ? Qubit{0, 1} : Qubit{1, 0};
    }
    Tensor t = contract_peps(L, region, maps, fixed, open, budget);
    sv.amplitudes += enc(k) * Eigen::Map<CVec>(t.data.data(), t.size());
  }
  sv.norm = sv.amplitudes.norm();
  if (!(sv.norm > 0)) throw Error(ErrorKind::ZeroProbability, "pattern state vanished");
  sv.amplitudes /= sv.norm;
  return sv;
}

struct RunResult {
  std::vector<MeasurementRecord> records;
  LogicalState raw;        // decoded output, before the frame
  LogicalState corrected;  // after undoing the frame
  LogicalState expected;   // reference circuit on the input
  PauliFrame frame;
  bool frame_is_pauli = true;
  double fidelity = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) recs.push_back(r.to_json());
    return {{"records", recs}, {"fidelity", fidelity}, {"frame", frame.to_json()}, {"frame_is_pauli", frame_is_pauli}};
  }
};

struct RunOptions {
  std::uint64_t seed = 0;
  bool adaptive = false;
  Budget budget;
};

// Frame Pauli F with rule ≍ F · intended.
inline std::optional<std::vector<int>> frame_of(const Pattern& p, const CMat& rule_op) {
  CMat intended = circuit_matrix(p.circuit, p.input_names());
  return identify_pauli(rule_op, intended);
}

inline RunResult run_pattern(const Pattern& p, const LogicalState& input, const RunOptions& opt = {}) {
  if (input.amplitudes.size() != (Index(1) << p.inputs.size()))
    throw Error(ErrorKind::DimensionMismatch, "input has the wrong wire count");
  std::vector<char> covered(p.lattice.num_sites(), 0);
  for (const auto& s : p.steps) covered.at(s.site) = 1;
  for (char c : covered)
    if (!c) throw Error(ErrorKind::IncompletePattern, "pattern does not measure every site");

  RunResult res;
  StateVector sv = prepare_pattern_state(p, input.amplitudes, opt.budget);
  CounterRng rng(opt.seed);
  std::vector<int> rule_out(p.rule_sites.size(), -1);
  for (const PatternStep& st : p.steps) {
    MeasBasis b = st.basis;
    if (opt.adaptive && st.adapt_wire >= 0 && b.kind == BasisKind::ROTATED) {
      auto f = frame_of(p, rule_operator(p, rule_out));
      if (f && ((*f)[st.adapt_wire] == 1 || (*f)[st.adapt_wire] == 2)) b.theta = -b.theta;
    }
    auto [rec, next] = measure_site(sv, st.site, b, st.mode, &rng);
    rec.coord = p.lattice.coord(st.site);
    res.records.push_back(rec);
    for (std::size_t i = 0; i < p.rule_sites.size(); ++i)
      if (p.rule_sites[i] == st.site) rule_out[i] = rec.outcome;
    sv = std::move(next);
  }
  std::vector<LegId> outs;
  for (const auto& w : p.outputs) outs.push_back(w.leg);
  res.raw = extract_logical(sv, outs, p.wire_names());
  if (p.decode_out.size()) {
    res.raw.amplitudes = p.decode_out * res.raw.amplitudes;
    res.raw.amplitudes.normalize();
  }
  res.frame = PauliFrame(int(p.outputs.size()));
  res.corrected = res.raw;
  if (p.rule != FrameRule::NONE) {
    // Rule operators are evaluated at the angles actually measured.
    double th = NAN;
    if (p.rule == FrameRule::LINE) {
      th = res.records.front().basis.theta;
    }
    CMat op = rule_operator(p, rule_out, th);
    auto f = frame_of(p, op);
    res.frame_is_pauli = bool(f);
    if (f) {
      res.frame.add_string(*f, to_string(p.rule));
      res.corrected.amplitudes = res.frame.op().adjoint() * res.raw.amplitudes;
    } else {
      // Not a Pauli multiple of the intended gate: compare against the rule operator directly.
      CMat intended = circuit_matrix(p.circuit, p.input_names());
      res.corrected.amplitudes = intended * (op.fullPivLu().solve(res.raw.amplitudes));
      res.corrected.amplitudes.normalize();
    }
  }
  // Preparation and readout patterns change the wire count; they have no reference circuit.
  if (p.inputs.size() == p.outputs.size()) {
    res.expected = reference_apply(p.circuit, LogicalState{p.input_names(), input.amplitudes, 1.0});
    res.expected.wires = p.wire_names();
    res.fidelity = compare_up_to_phase(res.corrected, res.expected);
  } else {
    res.fidelity = std::nan("");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Built-in protocols. Logical information flows from right legs to left legs.

namespace protocols {

inline Wire wire(const HexLattice& L, std::string name, Coord c, LegRole r) {
  auto s = L.site_at(c);
  if (!s) throw Error(ErrorKind::InvalidSpec, "protocol site missing");
  return {std::move(name), HexLattice::leg(*s, r)};
}

inline SiteId site(const HexLattice& L, Coord c) { return *L.site_at(c); }

// Two-site line: B(0,1) measured ROTATED(θ), A(0,0) HAT; input B.right, output A.left.
// The realised map is Z · table(o, θ) · X, so the legs carry X-encoded input and Z-decoded output.
inline Pattern line(double theta, std::optional<int> post = std::nullopt) {
  Pattern p;
  p.name = "line";
  p.lattice = HexLattice::from_coords({{0, 0}, {0, 1}});
  const auto& L = p.lattice;
  p.inputs = {wire(L, "q", {0, 1}, LegRole::Right)};
  p.outputs = {wire(L, "q", {0, 0}, LegRole::Left)};
  MeasureMode m = post ? MeasureMode::post(*post) : MeasureMode::sample(0);
  p.steps = {{site(L, {0, 1}), MeasBasis::rotated(theta), m, 0}, {site(L, {0, 0}), MeasBasis::hat(), MeasureMode::post(0)}};
  p.rule = FrameRule::LINE;
  p.rule_sites = {site(L, {0, 1})};
  p.circuit = {{"Zt", {"q"}, theta}, {"H", {"q"}}};
  p.encode_in = gates::X();
  p.decode_out = gates::Z();
  return p;
}

// Vertical pair a = A(0,2), b = B(1,2) measured HAT; trailing sites (0,1), (1,1) HAT outcome 0.
inline Pattern cz(std::optional<std::array<int, 2>> post = std::nullopt) {
  Pattern p;
  p.name = "cz";
  p.lattice = HexLattice::from_coords({{0, 1}, {0, 2}, {1, 1}, {1, 2}});
  const auto& L = p.lattice;
  p.inputs = {wire(L, "a", {0, 2}, LegRole::Right), wire(L, "b", {1, 2}, LegRole::Right)};
  p.outputs = {wire(L, "a", {0, 1}, LegRole::Left), wire(L, "b", {1, 1}, LegRole::Left)};
  auto m = [&](int i) { return post ? MeasureMode::post((*post)[i]) : MeasureMode::sample(0); };
  p.steps = {{site(L, {0, 2}), MeasBasis::hat(), m(0)},
             {site(L, {1, 2}), MeasBasis::hat(), m(1)},
             {site(L, {0, 1}), MeasBasis::hat(), MeasureMode::post(0)},
             {site(L, {1, 1}), MeasBasis::hat(), MeasureMode::post(0)}};
  p.rule = FrameRule::CZ;
  p.rule_sites = {site(L, {0, 2}), site(L, {1, 2})};
  p.circuit = {{"CZ", {"a", "b"}}, {"H", {"a"}}, {"H", {"b"}}};
  return p;
}

struct AppendixBLayout {
  Coord a{1, 3}, b{0, 3}, c{1, 2}, d{0, 2}, e{2, 3}, f{-1, 3};
};

// a, b carry the inputs on their right legs; c, d continue the two lines and
// carry the outputs on their left legs; e hangs below a, f above b.
inline Pattern appendix_b(std::optional<AppendixBOutcomes> post = std::nullopt, AppendixBLayout g = {}) {
  Pattern p;
  p.name = "appendix-b";
  p.lattice = HexLattice::from_coords({g.a, g.b, g.c, g.d, g.e, g.f});
  const auto& L = p.lattice;
  p.inputs = {wire(L, "a", g.a, LegRole::Right), wire(L, "b", g.b, LegRole::Right)};
  p.outputs = {wire(L, "a", g.c, LegRole::Left), wire(L, "b", g.d, LegRole::Left)};
  std::array<int, 6> o{};
  if (post) o = {post->ia, post->ib, post->ic, post->id, post->je, post->jf};
  auto m = [&](int i) { return post ? MeasureMode::post(o[i]) : MeasureMode::sample(0); };
  Coord cs[6] = {g.a, g.b, g.c, g.d, g.e, g.f};
  for (int i = 0; i < 6; ++i)
    p.steps.push_back({site(L, cs[i]), i < 4 ? MeasBasis::hat() : MeasBasis::comp6(), m(i)});
  p.rule = FrameRule::APPENDIX_B;
  for (int i = 0; i < 6; ++i) p.rule_sites.push_back(site(L, cs[i]));
  p.circuit = {{"CZ", {"a", "b"}}, {"H", {"a"}}, {"H", {"b"}}};
  return p;
}

// Initialisation: B(0,1) measured COMPUTATIONAL6, A(0,0) HAT outcome 0; output A.left.
inline Pattern init(std::optional<int> post = std::nullopt) {
  Pattern p;
  p.name = "init";
  p.lattice = HexLattice::from_coords({{0, 0}, {0, 1}});
  const auto& L = p.lattice;
  p.outputs = {wire(L, "q", {0, 0}, LegRole::Left)};
  p.steps = {{site(L, {0, 1}), MeasBasis::comp6(), post ? MeasureMode::post(*post) : MeasureMode::sample(0)},
             {site(L, {0, 0}), MeasBasis::hat(), MeasureMode::post(0)}};
  return p;
}

// Readout: one site whose right leg carries the qubit, measured COMPUTATIONAL6.
inline Pattern readout(std::optional<int> post = std::nullopt) {
  Pattern p;
  p.name = "readout";
  p.lattice = HexLattice::from_coords({{0, 0}});
  p.inputs = {wire(p.lattice, "q", {0, 0}, LegRole::Right)};
  p.steps = {{0, MeasBasis::comp6(), post ? MeasureMode::post(*post) : MeasureMode::sample(0)}};
  return p;
}

}  // namespace protocols

// Output state of the init pattern for outcome o (no correction applied).
inline LogicalState init_state(int outcome) {
  Pattern p = protocols::init(outcome);
  RunResult r = run_pattern(p, LogicalState{{}, CVec::Ones(1), 1.0});
  return r.raw;
}

// Outcome distribution of the readout pattern with the qubit |bit>.
inline std::array<double, 6> readout_distribution(int bit) {
  Pattern p = protocols::readout();
  StateVector sv = prepare_pattern_state(p, LogicalState::basis({"q"}, bit).amplitudes);
  return measure_site(sv, 0, MeasBasis::comp6(), MeasureMode::sample(0)).first.distribution;
}

// ---------------------------------------------------------------------------
// Pattern files

inline Coord coord_from_json(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

inline LegRole role_from_string(const std::string& s) {
  if (s == "left") return LegRole::Left;
  if (s == "right") return LegRole::Right;
  if (s == "vertical") return LegRole::Vertical;
  throw Error(ErrorKind::InvalidArgument, "unknown leg role " + s);
}

inline MeasureMode mode_from_json(const nlohmann::json& j) {
  if (j.is_string() && j == "sample") return MeasureMode::sample(0);
  if (j.is_object() && j.contains("post")) return MeasureMode::post(j.at("post").get<int>());
  throw Error(ErrorKind::InvalidArgument, "unknown mode " + j.dump());
}

inline std::vector<PatternStep> steps_from_json(const HexLattice& L, const nlohmann::json& arr) {
  std::vector<PatternStep> out;
  for (const auto& s : arr) {
    auto site = L.site_at(coord_from_json(s.at("site")));
    if (!site) throw Error(ErrorKind::InvalidArgument, "step site not on the lattice: " + s.at("site").dump());
    out.push_back({*site, MeasBasis::from_json(s.at("basis")), mode_from_json(s.value("mode", nlohmann::json("sample"))),
                   s.value("adapt_wire", -1)});
  }
  return out;
}

// Full pattern object: {coords, inputs, outputs, steps, rule?, rule_sites?, circuit?, encode_in?, decode_out?}.
inline Pattern pattern_from_json(const nlohmann::json& j) {
  Pattern p;
  p.name = j.value("name", "custom");
  std::vector<Coord> cs;
  for (const auto& c : j.at("coords")) cs.push_back(coord_from_json(c));
  p.lattice = HexLattice::from_coords(cs);
  auto wires = [&](const char* key) {
    std::vector<Wire> w;
    for (const auto& x : j.value(key, nlohmann::json::array()))
      w.push_back(protocols::wire(p.lattice, x.at("wire"), coord_from_json(x.at("site")), role_from_string(x.at("leg"))));
    return w;
  };
  p.inputs = wires("inputs");
  p.outputs = wires("outputs");
  p.steps = steps_from_json(p.lattice, j.at("steps"));
  std::string rule = j.value("rule", "none");
  p.rule = rule == "line" ? FrameRule::LINE
           : rule == "cz" ? FrameRule::CZ
           : rule == "appendix-b" ? FrameRule::APPENDIX_B
           : rule == "none" ? FrameRule::NONE
                            : throw Error(ErrorKind::InvalidArgument, "unknown rule " + rule);
  for (const auto& c : j.value("rule_sites", nlohmann::json::array())) p.rule_sites.push_back(protocols::site(p.lattice, coord_from_json(c)));
  for (const auto& g : j.value("circuit", nlohmann::json::array())) p.circuit.push_back(Gate::from_json(g));
  auto pauli = [](const nlohmann::json& s) -> CMat {
    std::string t = s.get<std::string>();
    for (int k = 0; k < 4; ++k)
      if (t.size() == 1 && t[0] == gates::pauli_char(k)) return gates::pauli(k);
    throw Error(ErrorKind::InvalidArgument, "encodings are single Paulis");
  };
  if (j.contains("encode_in")) p.encode_in = pauli(j.at("encode_in"));
  if (j.contains("decode_out")) p.decode_out = pauli(j.at("decode_out"));
  return p;
}

}  // namespace tricluster
