#include "tricluster/verification.hpp"

#include <gtest/gtest.h>

using namespace tricluster;

TEST(Subspace, IntersectionOfCoordinatePlanes) {
  // span{e0,e1} ∩ span{e1,e2} = span{e1} in C^3.
  SupportSpace a, b;
  a.sites = b.sites = {0};
  a.dims = b.dims = {3};
  a.basis = CMat::Zero(3, 2);
  a.basis(0, 0) = a.basis(1, 1) = 1;
  b.basis = CMat::Zero(3, 2);
  b.basis(1, 0) = b.basis(2, 1) = 1;
  a.rank = b.rank = 2;
  SupportSpace I = intersect_subspaces({a, b});
  ASSERT_EQ(I.rank, 1);
  EXPECT_NEAR(std::abs(I.basis(1, 0)), 1.0, 1e-12);
}

TEST(Subspace, AmbientMismatchRejected) {
  SupportSpace a, b;
  a.sites = {0};
  b.sites = {1};
  a.dims = b.dims = {2};
  a.basis = b.basis = CMat::Identity(2, 1);
  EXPECT_THROW(intersect_subspaces({a, b}), Error);
}

TEST(Subspace, PrincipalAnglesOfRotatedLine) {
  CMat q1(2, 1), q2(2, 1);
  q1 << 1, 0;
  q2 << std::cos(0.3), std::sin(0.3);
  auto ang = principal_angles(q1, q2);
  ASSERT_EQ(ang.size(), 1u);
  EXPECT_NEAR(ang[0], 0.3, 1e-14);
}

TEST(Subspace, EmbedThenReorderIsConsistent) {
  auto S = pair_support(Orientation::A_LEFT_OF_B);
  S.sites = {2, 0};
  auto E = embed(S, {0, 1, 2}, {6, 6, 6});
  EXPECT_EQ(E.rank, 16 * 6);
  EXPECT_NEAR((E.basis.adjoint() * E.basis - CMat::Identity(E.rank, E.rank)).norm(), 0, 1e-12);
}

TEST(Uniqueness, ThreeSiteRegions) {
  HexLattice L = build_patch({2, 3});
  for (const auto& r : enumerate_regions(L, 3)) {
    auto rep = check_uniqueness(L, r);
    EXPECT_TRUE(rep.pass) << rep.to_json().dump();
  }
}

TEST(Uniqueness, SingleSiteRegionRejected) {
  HexLattice L = build_patch({1, 2});
  try {
    check_uniqueness(L, {0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidRegion);
  }
}

// A deliberately wrong pair space must break the condition.
TEST(Uniqueness, DetectsWrongPairSpace) {
  HexLattice L = build_patch({1, 3});
  auto P = projector(ProjectorKind::TRIC);
  SupportSpace good = support_space(L, P, {0, 1});
  SupportSpace bad = support_space(L, projector(ProjectorKind::CLUSTER_HEX), {0, 1});
  bad.dims = {6, 6};
  CMat lift = CMat::Zero(36, bad.rank);
  for (Index c = 0; c < bad.rank; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) lift(6 * i + j, c) = bad.basis(2 * i + j, c);
  bad.basis = lift;
  SupportSpace other = support_space(L, P, {1, 2});
  EXPECT_TRUE(check_uniqueness_with(L, {0, 1, 2}, {good, other}).pass);
  EXPECT_FALSE(check_uniqueness_with(L, {0, 1, 2}, {bad, other}).pass);
}

TEST(Injectivity, SmallRegions) {
  HexLattice L = build_patch({2, 3});
  for (int k = 2; k <= 3; ++k)
    for (const auto& r : enumerate_regions(L, k)) EXPECT_TRUE(check_injectivity(L, r).injective);
}

TEST(GapLemmas, MuHalfIsTight) {
  HexLattice L = interior_block_patch();
  BlockPartition P = block_partition(L);
  auto [m, n] = P.adjacency.front();
  auto ok = check_mu(L, P, m, n, 0.5);
  EXPECT_TRUE(ok.inequality.passes);
  EXPECT_NEAR(ok.mu_star, 0.5, 1e-9);
  auto bad = check_mu(L, P, m, n, 0.55);
  EXPECT_FALSE(bad.inequality.passes);
  EXPECT_FALSE(bad.inequality.witness.empty());
}

TEST(Gap, SmallPatches) {
  for (auto spec : {PatchSpec{1, 2}, PatchSpec{1, 3}, PatchSpec{2, 2}}) {
    HexLattice L = build_patch(spec);
    auto g = spectral_gap(L, assemble(L, Flavor::PROJECTOR));
    EXPECT_LT(g.kernel_residual, 1e-10);
    EXPECT_GE(g.gap, 1.0 / 24);
    EXPECT_EQ(g.zero_modes, g.kernel_dim);
  }
}

TEST(Gap, DeflationKeepsKernelOutOnChain) {
  // 7776 dims: iterative path. Kernel vectors must not come back through roundoff.
  HexLattice L = build_patch({1, 5});
  auto g = spectral_gap(L, assemble(L, Flavor::PROJECTOR));
  EXPECT_EQ(g.method, "deflated-lanczos");
  EXPECT_EQ(g.kernel_dim, 128);
  EXPECT_NEAR(g.gap, 0.5, 1e-9);
}

TEST(ClusterRelation, PauliTensorSearchFindsKnownFlip) {
  HexLattice L = build_patch({1, 3});
  auto B = BoundaryAssignment::all_plus(L);
  StateVector cl = contract_state(L, projector(ProjectorKind::CLUSTER_HEX), B);
  StateVector flipped = cl;
  flipped.amplitudes = apply_site_op(cl.amplitudes, 3, 1, (Eigen::Matrix2cd() << 0, 1, 1, 0).finished());
  auto m = find_pauli_tensor(flipped, cl);
  EXPECT_TRUE(m.found);
  EXPECT_GT(m.fidelity, 1 - 1e-10);
}
