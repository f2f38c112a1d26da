#include "tricluster/io.hpp"
#include "tricluster/peps.hpp"
#include "tricluster/verification.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace tricluster;

namespace {

const int kRows[6][3] = {{0, 0, 0}, {1, 1, 1}, {1, 0, 0}, {0, 1, 1}, {0, 1, 0}, {1, 0, 1}};

// Direct 64-term sum for the {1,2} patch with every dangling leg in |+>.
CVec two_site_oracle() {
  const double phi[2][2] = {{0.5, 0.5}, {0.5, -0.5}};
  const double plus = M_SQRT1_2;
  CVec psi = CVec::Zero(36);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const int* a = kRows[i];
      const int* b = kRows[j];
      // A(0,0).right bonds B(0,1).left; four legs dangle.
      psi(6 * i + j) = phi[a[1]][b[0]] * std::pow(plus, 4);
    }
  return psi / psi.norm();
}

}  // namespace

TEST(Peps, ProjectorRows) {
  CMat P = projector(ProjectorKind::TRIC).matrix();
  for (int l = 0; l < 6; ++l) {
    int col = 4 * kRows[l][0] + 2 * kRows[l][1] + kRows[l][2];
    EXPECT_EQ(P(l, col), cplx(1));
    EXPECT_NEAR(P.row(l).norm(), 1.0, 0);
  }
  EXPECT_NEAR((P * P.adjoint() - CMat::Identity(6, 6)).norm(), 0, 1e-15);
}

TEST(Peps, TwoSiteStateMatchesDirectSum) {
  HexLattice L = build_patch({1, 2});
  StateVector sv = contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
  CVec o = two_site_oracle();
  EXPECT_NEAR((sv.amplitudes - o).norm(), 0, 1e-13);
}

TEST(Peps, SingleSiteIsUniform) {
  HexLattice L = HexLattice::from_coords({{0, 0}});
  StateVector sv = contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
  for (Index i = 0; i < 6; ++i) EXPECT_NEAR(std::abs(sv.amplitudes(i)), 1 / std::sqrt(6.0), 1e-14);
}

TEST(Peps, FreeLegRejected) {
  HexLattice L = build_patch({1, 2});
  try {
    contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_free(L));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ContractBoundary);
  }
}

TEST(Peps, DenseThreshold) {
  HexLattice L = build_patch({3, 3});
  try {
    contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Resource);
  }
  PepsAmplitudes amp(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
  EXPECT_GT(std::abs(amp(std::vector<int>(9, 0))), 0);
}

TEST(Peps, OnTheFlyAmplitudesAgreeWithDense) {
  HexLattice L = build_patch({2, 2});
  auto proj = projector(ProjectorKind::TRIC);
  auto B = BoundaryAssignment::all_plus(L);
  StateVector sv = contract_state(L, proj, B);
  PepsAmplitudes amp(L, proj, B);
  for (Index k : {Index(0), Index(7), Index(215), Index(1000), Index(1295)}) {
    std::vector<int> lv(4);
    Index c = k;
    for (int i = 3; i >= 0; --i) {
      lv[i] = int(c % 6);
      c /= 6;
    }
    EXPECT_NEAR(std::abs(amp(lv) / sv.norm - sv.amplitudes(k)), 0, 1e-13);
  }
}

TEST(Peps, BondSupportRankAndIndependentConstruction) {
  auto P = projector(ProjectorKind::TRIC);
  for (auto [coords, o] : std::vector<std::pair<std::vector<Coord>, Orientation>>{
           {{{0, 0}, {0, 1}}, Orientation::A_LEFT_OF_B},
           {{{0, 1}, {0, 2}}, Orientation::A_RIGHT_OF_B},
           {{{0, 0}, {1, 0}}, Orientation::A_BELOW_B}}) {
    HexLattice L = HexLattice::from_coords(coords);
    SiteId a = L.sublattice(0) == Sublattice::A ? 0 : 1;
    SupportSpace S = support_space(L, P, {a, 1 - a});
    EXPECT_EQ(S.rank, 16);
    SupportSpace Q = pair_support(o);
    EXPECT_TRUE(same_subspace(S, Q)) << to_string(o);
  }
}

TEST(Peps, SupportRegionErrors) {
  HexLattice L = build_patch({2, 3});
  EXPECT_THROW(support_map(L, projector(ProjectorKind::TRIC), {}), Error);
  try {
    support_map(L, projector(ProjectorKind::TRIC), {*L.site_at({0, 0}), *L.site_at({0, 2})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidRegion);
  }
}

TEST(Peps, ClusterComponent) {
  HexLattice L = build_patch({2, 3});
  auto B = BoundaryAssignment::all_plus(L);
  StateVector tric = contract_state(L, projector(ProjectorKind::TRIC), B);
  StateVector cl = contract_state(L, projector(ProjectorKind::CLUSTER_HEX), B);
  StateVector c01 = compress_levels(project_subspace(tric, {0, 1}).state, {0, 1});
  EXPECT_GT(std::norm(cl.amplitudes.dot(c01.amplitudes)), 1 - 1e-10);

  StateVector c23 = compress_levels(project_subspace(tric, {2, 3}).state, {2, 3});
  StateVector pr = contract_state(L, projector(ProjectorKind::PRIME), B);
  EXPECT_GT(std::norm(pr.amplitudes.dot(c23.amplitudes)), 1 - 1e-10);
  auto m = find_pauli_tensor(c23, cl);
  EXPECT_TRUE(m.found);

  StateVector c45 = compress_levels(project_subspace(tric, {4, 5}).state, {4, 5});
  EXPECT_TRUE(find_pauli_tensor(c45, cl).found);
  EXPECT_THROW(project_subspace(tric, {}), Error);
}

TEST(Peps, ProjectionWeightsSumToOne) {
  HexLattice L = build_patch({1, 3});
  StateVector t = contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
  double w = 0;
  for (int l = 0; l < 6; ++l) w += project_subspace(t, {l}).weight;
  // Single-level weights are product configurations only; they do not exhaust the state.
  EXPECT_LT(w, 1.0);
  EXPECT_NEAR(project_subspace(t, {0, 1, 2, 3, 4, 5}).weight, 1.0, 1e-14);
}

TEST(Peps, StateFileRoundTrip) {
  HexLattice L = build_patch({1, 2});
  StateVector sv = contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
  auto path = std::filesystem::temp_directory_path() / "tric_state_roundtrip.bin";
  write_state(path.string(), sv, {{"rows", 1}});
  nlohmann::json meta;
  StateVector back = read_state(path.string(), &meta);
  EXPECT_EQ(back.sites, sv.sites);
  EXPECT_EQ(back.dims, sv.dims);
  EXPECT_EQ((back.amplitudes - sv.amplitudes).norm(), 0.0);
  EXPECT_EQ(meta["rows"], 1);
  std::filesystem::remove(path);
}
