#include "tricluster/hamiltonian.hpp"
#include "tricluster/lanczos.hpp"
#include "tricluster/verification.hpp"

#include <gtest/gtest.h>

using namespace tricluster;

TEST(Hamiltonian, ProjectorTermRankAndIdempotence) {
  for (auto o : kOrientations) {
    OperatorTerm h = h_projector(o);
    RMat d = h.dense();
    EXPECT_NEAR((d * d - d).norm(), 0, 1e-12);
    Eigen::SelfAdjointEigenSolver<RMat> es(d);
    int ones = 0;
    for (Index i = 0; i < 36; ++i) ones += es.eigenvalues()(i) > 0.5;
    EXPECT_EQ(ones, 20) << to_string(o);
  }
}

TEST(Hamiltonian, ParseFlavor) {
  EXPECT_EQ(parse_flavor("spin"), Flavor::SPIN_EXPLICIT);
  EXPECT_EQ(parse_flavor("block-k"), Flavor::BLOCK_K);
  EXPECT_THROW(parse_flavor("heisenberg"), Error);
}

TEST(Hamiltonian, MatrixFreeAgreesWithDenseKron) {
  HexLattice L = build_patch({1, 3});
  HamiltonianOperator H = assemble(L, Flavor::PROJECTOR);
  RMat D = H.dense();
  // Oracle: explicit Kronecker embedding of each bond term.
  RMat O = RMat::Zero(216, 216);
  RMat I6 = RMat::Identity(6, 6);
  RMat hl = h_projector(Orientation::A_LEFT_OF_B).dense();
  RMat hr = h_projector(Orientation::A_RIGHT_OF_B).dense();
  // Sites (0,0)A (0,1)B (0,2)A: bond 0-1 is (A,B) in site order; bond 1-2 is (A=2, B=1), reversed.
  O += detail::kron(hl, I6);
  O += detail::kron(I6, detail::swap_sites(hr));
  EXPECT_NEAR((D - O).norm(), 0, 1e-12);
}

TEST(Hamiltonian, GroundStateOnPatches) {
  for (auto spec : {PatchSpec{1, 2}, PatchSpec{2, 2}, PatchSpec{2, 3}}) {
    HexLattice L = build_patch(spec);
    HamiltonianOperator H = assemble(L, Flavor::PROJECTOR);
    StateVector psi = contract_state(L, projector(ProjectorKind::TRIC), BoundaryAssignment::all_plus(L));
    CVec y;
    H.apply(psi.amplitudes, y);
    EXPECT_LT(y.norm(), 1e-10);
  }
}

TEST(Hamiltonian, ThreadCountDoesNotChangeResult) {
  HexLattice L = build_patch({2, 3});
  HamiltonianOperator H = assemble(L, Flavor::PROJECTOR);
  RVec x(H.dim());
  CounterRng rng(3);
  for (Index i = 0; i < x.size(); ++i) x(i) = rng.uniform();
  RVec y1, y2;
  setenv("TRICLUSTER_THREADS", "1", 1);
  H.apply(x, y1);
  setenv("TRICLUSTER_THREADS", "3", 1);
  H.apply(x, y2);
  unsetenv("TRICLUSTER_THREADS");
  EXPECT_EQ((y1 - y2).norm(), 0.0);
}

TEST(Hamiltonian, SpinMatrices) {
  SpinMatrices S = spin_matrices(identity_level_map());
  CMat comm = S.Sz * S.Sp - S.Sp * S.Sz;
  EXPECT_NEAR((comm - S.Sp).norm(), 0, 1e-12);
  CMat casimir = S.Sx * S.Sx + S.Sy * S.Sy + S.Sz * S.Sz;
  EXPECT_NEAR((casimir - 8.75 * CMat::Identity(6, 6)).norm(), 0, 1e-12);
  EXPECT_THROW(spin_matrices({0, 0, 1, 2, 3, 4}), Error);
  SpinMatrices T = spin_matrices({5, 4, 3, 2, 1, 0});
  EXPECT_DOUBLE_EQ(T.Sz(0, 0).real(), -2.5);
}

TEST(Hamiltonian, SpinTermsAreSymmetric) {
  SpinMatrices S = spin_matrices(identity_level_map());
  for (auto o : kOrientations) {
    RMat h = h_spin(o, S).matrix;
    EXPECT_NEAR((h - h.transpose()).norm(), 0, 1e-9 * h.norm());
  }
}

// Any level permutation only permutes the diagonal of a term, so the trace is
// the same for every map; the search report exposes it.
TEST(Hamiltonian, LevelMapSearchReportsStructure) {
  auto res = find_level_map();
  EXPECT_EQ(res.report["candidates"], 720);
  EXPECT_EQ(res.report["permutations"].size(), 720u);
  double tr0 = res.report["diagonal_analysis"][0]["trace"];
  SpinMatrices S = spin_matrices({3, 1, 4, 0, 5, 2});
  EXPECT_NEAR(h_spin(Orientation::A_LEFT_OF_B, S).matrix.trace(), tr0, 1e-6 * std::abs(tr0) + 1e-9);
  EXPECT_EQ(res.report["status"] == "ok", !res.passing.empty());
}

TEST(Hamiltonian, KTermRequiresAdjacentBlocks) {
  HexLattice L = interior_block_patch();
  BlockPartition P = block_partition(L);
  auto [m, n] = P.adjacency.front();
  OperatorTerm k = build_k_term(L, P, m, n);
  EXPECT_EQ(k.sites.size(), 4u);
  EXPECT_EQ(k.kernel.cols(), 64);  // injective 4-site region with 6 boundary legs
  int a = P.attach[P.interior_blocks()[0]][0], b = P.attach[P.interior_blocks()[0]][3];
  EXPECT_THROW(build_k_term(L, P, a, b), Error);
}

TEST(Lanczos, MatchesDenseOnRandomSymmetric) {
  const Index n = 900;
  CounterRng rng(11);
  RMat A(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) A(i, j) = A(j, i) = rng.uniform() - 0.5;
  Eigen::SelfAdjointEigenSolver<RMat> es(A);
  LanczosOptions lo;
  lo.nev = 3;
  lo.max_basis = 60;
  lo.tol = 1e-10;
  auto r = lanczos_smallest<double>(n, [&](const RVec& x, RVec& y) { y = A * x; }, lo);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.values[i], es.eigenvalues()(i), 1e-8);
    EXPECT_LT(r.residuals[i], 1e-7);
  }
}

TEST(Lanczos, DeflationSkipsKernel) {
  const Index n = 1000;
  RVec d(n);
  for (Index i = 0; i < n; ++i) d(i) = i < 5 ? 0.0 : 1.0 + 0.001 * i;
  RMat K = RMat::Zero(n, 5);
  for (int i = 0; i < 5; ++i) K(i, i) = 1;
  LanczosOptions lo;
  lo.tol = 1e-10;
  auto r = lanczos_smallest<double>(n, [&](const RVec& x, RVec& y) { y = d.cwiseProduct(x); }, lo, &K);
  EXPECT_NEAR(r.values[0], 1.005, 1e-8);
}

TEST(Lanczos, SeedDeterminism) {
  const Index n = 700;
  RVec d(n);
  for (Index i = 0; i < n; ++i) d(i) = std::sin(double(i));
  LanczosOptions lo;
  lo.seed = 42;
  auto op = [&](const RVec& x, RVec& y) { y = d.cwiseProduct(x); };
  auto a = lanczos_smallest<double>(n, op, lo);
  auto b = lanczos_smallest<double>(n, op, lo);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.matvecs, b.matvecs);
}
