#include "tricluster/mbqc.hpp"

#include <gtest/gtest.h>

using namespace tricluster;

namespace {

LogicalState qubit(cplx a, cplx b) {
  LogicalState s{{"q"}, CVec(2), 1.0};
  s.amplitudes << a, b;
  s.amplitudes.normalize();
  return s;
}

}  // namespace

TEST(Bases, GramIsIdentity) {
  for (auto b : {MeasBasis::comp6(), MeasBasis::hat(), MeasBasis::rotated(0.7), MeasBasis::rotated(-2.1)}) {
    CMat V = basis_vectors(b);
    EXPECT_NEAR((V.adjoint() * V - CMat::Identity(6, 6)).norm(), 0, 1e-12);
  }
}

TEST(Bases, NamedVectors) {
  CMat hat = basis_vectors(MeasBasis::hat());
  EXPECT_NEAR(std::abs(hat(0, 0) - M_SQRT1_2), 0, 1e-15);
  EXPECT_NEAR(std::abs(hat(1, 0) - M_SQRT1_2), 0, 1e-15);
  CMat rot = basis_vectors(MeasBasis::rotated(0.7));
  EXPECT_NEAR(std::abs(rot(5, 4) - std::polar(M_SQRT1_2, -0.7)), 0, 1e-15);
  EXPECT_NEAR(std::abs(rot(1, 1) + std::polar(M_SQRT1_2, 0.7)), 0, 1e-15);
  EXPECT_NEAR((basis_vectors(MeasBasis::rotated(0)) - hat).norm(), 0, 0);
}

TEST(Tables, InitReadout) {
  auto r3 = init_readout_map(3);
  EXPECT_EQ(r3.init_sign, 1);
  EXPECT_EQ(r3.readout_bit, 1);
  auto r0 = init_readout_map(0);
  EXPECT_EQ(r0.init_sign, 1);
  EXPECT_EQ(r0.readout_bit, 0);
  auto r5 = init_readout_map(5);
  EXPECT_EQ(r5.init_sign, -1);
  EXPECT_EQ(r5.readout_bit, 0);
}

TEST(Tables, OneQubit) {
  using namespace gates;
  EXPECT_NEAR((one_qubit_table(0, 0) - H()).norm(), 0, 1e-15);
  EXPECT_NEAR((one_qubit_table(1, 0.4) - X() * H() * Zt(0.4)).norm(), 0, 1e-15);
  EXPECT_NEAR((one_qubit_table(4, 0.4) - Z() * H() * Zt(0.4)).norm(), 0, 1e-15);
}

TEST(Tables, CzExamples) {
  using namespace gates;
  EXPECT_NEAR((cz_correction(0, 0) - kron(H(), H()) * CZ()).norm(), 0, 1e-14);
  EXPECT_NEAR((cz_correction(1, 0) - kron(X() * H(), H()) * CZ()).norm(), 0, 1e-14);
  auto e = cz_exponents(4, 5);
  EXPECT_EQ(e.u, (std::array<int, 2>{0, 1}));
  EXPECT_EQ(e.v, (std::array<int, 2>{1, 1}));
  EXPECT_EQ(e.w, (std::array<int, 2>{1, 1}));
}

TEST(Tables, AppendixBExamples) {
  using namespace gates;
  EXPECT_NEAR((appendixB_correction({0, 0, 0, 0, 1, 0}) - kron(H(), H()) * CZ()).norm(), 0, 1e-14);
  auto e = appendixB_exponents({0, 0, 0, 0, 0, 0});
  EXPECT_EQ(e.ue, 1);
  EXPECT_EQ(e.za(), 1);
  auto c = appendixB_exponents({0, 0, 3, 0, 1, 0});
  EXPECT_EQ(c.uc, 1);
  EXPECT_EQ(c.vc, 1);
}

TEST(Reference, Examples) {
  auto plus = reference_apply({{"H", {"q"}}}, qubit(1, 0));
  EXPECT_NEAR(compare_up_to_phase(plus, qubit(1, 1)), 1, 1e-15);
  LogicalState s11 = LogicalState::basis({"a", "b"}, 3);
  auto cz = reference_apply({{"CZ", {"a", "b"}}}, s11);
  EXPECT_NEAR(std::abs(cz.amplitudes(3) + 1.0), 0, 1e-15);
  auto zt = reference_apply({{"Zt", {"q"}, M_PI / 2}}, qubit(0, 1));
  EXPECT_NEAR(std::abs(zt.amplitudes(1) - cplx(0, 1)), 0, 1e-15);
  try {
    reference_apply({{"T", {"q"}}}, qubit(1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGate);
  }
  // Wire order: the first listed wire is the most significant bit.
  auto x = reference_apply({{"X", {"b"}}}, LogicalState::basis({"a", "b"}, 0));
  EXPECT_EQ(x.amplitudes(1), cplx(1));
}

TEST(Reference, CompareUpToPhase) {
  auto psi = qubit(0.6, cplx(0, 0.8));
  LogicalState ph = psi;
  ph.amplitudes *= std::polar(1.0, 1.3);
  EXPECT_NEAR(compare_up_to_phase(psi, ph), 1, 1e-15);
  EXPECT_NEAR(compare_up_to_phase(qubit(1, 0), qubit(0, 1)), 0, 0);
  auto h = reference_apply({{"H", {"q"}}}, qubit(1, 0));
  auto xh = reference_apply({{"H", {"q"}}, {"X", {"q"}}}, qubit(1, 0));
  EXPECT_NEAR(compare_up_to_phase(h, xh), 1.0, 1e-15);  // X|+> = |+>
  auto zh = reference_apply({{"H", {"q"}}, {"Z", {"q"}}}, qubit(1, 0));
  EXPECT_NEAR(compare_up_to_phase(h, zh), 0.0, 1e-15);
  EXPECT_THROW(compare_up_to_phase(h, LogicalState::basis({"a", "b"}, 0)), Error);
}

// Direct 36-amplitude oracle for the {1,2} patch with |+> legs.
TEST(Measure, MarginalsMatchDenseOracle) {
  Pattern p = protocols::init();
  StateVector sv = prepare_pattern_state(p, CVec::Ones(1));
  // Oracle without open legs: all four dangling legs and the output leg in |+>.
  const int rows[6][3] = {{0, 0, 0}, {1, 1, 1}, {1, 0, 0}, {0, 1, 1}, {0, 1, 0}, {1, 0, 1}};
  double marg[6] = {};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double amp = (rows[i][1] & rows[j][0]) ? -0.5 : 0.5;
      marg[i] += amp * amp;
    }
  double tot = 0;
  for (double m : marg) tot += m;
  // Site (0,0) with its left leg open: tracing the open leg is the same as any
  // orthonormal basis on it, and every level has one virtual value there.
  auto [rec, next] = measure_site(sv, *p.lattice.site_at({0, 0}), MeasBasis::comp6(), MeasureMode::sample(1));
  double s = 0;
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(rec.distribution[k], marg[k] / tot, 1e-12);
    s += rec.distribution[k];
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(next.sites.size(), 1u);
}

TEST(Measure, RepeatedAndZeroProbability) {
  Pattern p = protocols::readout();
  StateVector sv = prepare_pattern_state(p, LogicalState::basis({"q"}, 0).amplitudes);
  auto [rec, next] = measure_site(sv, 0, MeasBasis::comp6(), MeasureMode::post(0));
  EXPECT_NEAR(rec.probability, 1.0 / 3, 1e-12);
  try {
    measure_site(next, 0, MeasBasis::comp6(), MeasureMode::post(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AlreadyMeasured);
  }
  try {
    measure_site(sv, 0, MeasBasis::comp6(), MeasureMode::post(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroProbability);
  }
}

TEST(Measure, SamplingTiesGoLow) {
  // Readout of |0>: outcomes {0,2,5} at 1/3 each; u below 1/3 must give 0.
  Pattern p = protocols::readout();
  StateVector sv = prepare_pattern_state(p, LogicalState::basis({"q"}, 0).amplitudes);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng probe(seed);
    double u = probe.uniform();
    int o = measure_site(sv, 0, MeasBasis::comp6(), MeasureMode::sample(seed)).first.outcome;
    int expect = u < 1.0 / 3 ? 0 : u < 2.0 / 3 ? 2 : 5;
    EXPECT_EQ(o, expect) << u;
  }
}

TEST(Inputs, InjectNormalisesAndValidates) {
  HexLattice L = build_patch({1, 2});
  auto B = BoundaryAssignment::all_plus(L);
  LegId free_leg = HexLattice::leg(0, LegRole::Left);
  auto out = inject_inputs(L, B, {{free_leg, Qubit{3.0, 4.0}}});
  EXPECT_NEAR(std::abs((*out.legs[free_leg])[0] - 0.6), 0, 1e-15);
  out = inject_inputs(L, B, {{free_leg, Qubit{1.0, 0.0}}});
  EXPECT_EQ((*out.legs[free_leg])[1], cplx(0));
  LegId bonded = HexLattice::leg(0, LegRole::Right);
  EXPECT_THROW(inject_inputs(L, B, {{bonded, Qubit{1.0, 0.0}}}), Error);
}

TEST(Inputs, ProductInputThroughCz) {
  // |01> in; postselected (0,0) realises H⊗H·CZ, so |01> -> |+->.
  Pattern p = protocols::cz(std::array<int, 2>{0, 0});
  auto r = run_pattern(p, LogicalState::basis({"a", "b"}, 1));
  LogicalState pm{{"a", "b"}, CVec(4), 1.0};
  pm.amplitudes << 0.5, -0.5, 0.5, -0.5;
  EXPECT_NEAR(compare_up_to_phase(r.corrected, pm), 1.0, 1e-10);
}

TEST(Extract, IncompletePattern) {
  Pattern p = protocols::line(0.7, 0);
  StateVector sv = prepare_pattern_state(p, CVec::Unit(2, 0));
  try {
    extract_logical(sv, {p.outputs[0].leg});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IncompletePattern);
  }
}

TEST(Gates, OneQubitTableAllOutcomes) {
  for (double th : {0.0, M_PI / 2, 0.7})
    for (int o = 0; o < 6; ++o) {
      Pattern p = protocols::line(th, o);
      CMat M = logical_action(p, {o, 0});
      CMat want = p.decode_out * one_qubit_table(o, th) * p.encode_in;
      EXPECT_GT(operator_fidelity(M, want), 1 - 1e-10) << th << " " << o;
      auto r = run_pattern(p, qubit(0.6, cplx(0.3, 0.74)));
      EXPECT_GT(r.fidelity, 1 - 1e-10);
    }
}

TEST(Gates, LineEncodingsAreFixedUpToEquivalentPair) {
  // Y.Q.H.Zt.Y and Z.Q.H.Zt.X agree up to phase for every Pauli Q, so exactly these two pairs fit.
  CMat M0 = logical_action(protocols::line(0.7, 0), {0, 0});
  int point_hits = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      point_hits += operator_fidelity(M0, gates::pauli(a) * one_qubit_table(0, 0.7) * gates::pauli(b)) > 1 - 1e-10;
  EXPECT_EQ(point_hits, 2);
  EXPECT_EQ(operator_fidelity(gates::Y() * gates::H() * gates::Y(), gates::Z() * gates::H() * gates::X()), 1.0);
  std::vector<std::pair<int, int>> hits;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      bool all = true;
      for (double th : {0.0, M_PI / 2, 0.7})
        for (int o = 0; o < 6 && all; ++o) {
          CMat M = logical_action(protocols::line(th, o), {o, 0});
          all = operator_fidelity(M, gates::pauli(a) * one_qubit_table(o, th) * gates::pauli(b)) > 1 - 1e-10;
        }
      if (all) hits.push_back({a, b});
    }
  std::vector<std::pair<int, int>> want = {{2, 2}, {3, 1}};
  EXPECT_EQ(hits, want);
}

TEST(Gates, CzAllOutcomePairs) {
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      CMat M = logical_action(protocols::cz(), {a, b, 0, 0});
      EXPECT_GT(operator_fidelity(M, cz_correction(a, b)), 1 - 1e-10) << a << b;
    }
}

TEST(Gates, InitAndReadout) {
  for (int o = 0; o < 6; ++o) {
    LogicalState s = init_state(o);
    double sgn = init_readout_map(o).init_sign;
    EXPECT_NEAR(compare_up_to_phase(s, qubit(1, sgn)), 1.0, 1e-10) << o;
  }
  for (int b = 0; b < 2; ++b) {
    auto d = readout_distribution(b);
    for (int o = 0; o < 6; ++o)
      if (init_readout_map(o).readout_bit != b) EXPECT_LT(d[o], 1e-14);
  }
}

TEST(Run, SeedDeterminism) {
  LogicalState in{{"a", "b"}, CVec(4), 1.0};
  in.amplitudes << 0.5, cplx(0, 0.5), -0.5, 0.5;
  RunOptions o;
  o.seed = 42;
  auto r1 = run_pattern(protocols::cz(), in, o);
  auto r2 = run_pattern(protocols::cz(), in, o);
  EXPECT_EQ(r1.to_json().dump(), r2.to_json().dump());
  EXPECT_GT(r1.fidelity, 1 - 1e-10);
}

TEST(Run, PatternFileRoundTrip) {
  auto j = nlohmann::json::parse(R"({
    "coords": [[0,0],[0,1]],
    "inputs": [{"wire":"q","site":[0,1],"leg":"right"}],
    "outputs": [{"wire":"q","site":[0,0],"leg":"left"}],
    "steps": [{"site":[0,1],"basis":{"rot":0.7},"mode":{"post":2}},
              {"site":[0,0],"basis":"hat","mode":{"post":0}}],
    "rule": "line", "rule_sites": [[0,1]],
    "circuit": [{"gate":"Zt","wires":["q"],"angle":0.7},{"gate":"H","wires":["q"]}],
    "encode_in": "X", "decode_out": "Z"})");
  Pattern p = pattern_from_json(j);
  auto r = run_pattern(p, qubit(1, cplx(0, 2)));
  EXPECT_GT(r.fidelity, 1 - 1e-10);
  EXPECT_EQ(r.records[0].outcome, 2);
  EXPECT_THROW(MeasBasis::from_json("xyz"), Error);
}
