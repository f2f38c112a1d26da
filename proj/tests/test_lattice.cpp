#include "tricluster/lattice.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace tricluster;

namespace {

// Independent neighbour rule straight from the brick-wall picture.
bool adjacent(Coord a, Coord b) {
  if (a.row == b.row) return std::abs(a.col - b.col) == 1;
  if (a.col != b.col || std::abs(a.row - b.row) != 1) return false;
  Coord low = a.row < b.row ? a : b;
  return (low.row + low.col) % 2 == 0;
}

// Brute force: every subset of the given size, kept if connected.
std::set<std::vector<SiteId>> brute_regions(const HexLattice& L, int size) {
  std::set<std::vector<SiteId>> out;
  const int n = L.num_sites();
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) != size) continue;
    std::vector<SiteId> r;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) r.push_back(i);
    std::set<SiteId> seen{r[0]};
    std::vector<SiteId> st{r[0]};
    while (!st.empty()) {
      SiteId s = st.back();
      st.pop_back();
      for (SiteId t : r)
        if (!seen.count(t) && adjacent(L.coord(s), L.coord(t))) {
          seen.insert(t);
          st.push_back(t);
        }
    }
    if (int(seen.size()) == size) out.insert(r);
  }
  return out;
}

}  // namespace

TEST(Lattice, PatchCounts) {
  HexLattice L = build_patch({2, 3});
  EXPECT_EQ(L.num_sites(), 6);
  // 2 rows x 2 horizontal bonds, plus A(0,0)-B(1,0) and A(0,2)-B(1,2).
  EXPECT_EQ(L.bonds().size(), 6u);
  EXPECT_EQ(L.dangling().size(), 18u - 12u);
}

TEST(Lattice, NeighboursMatchBrickWall) {
  HexLattice L = build_patch({3, 4});
  for (SiteId s = 0; s < L.num_sites(); ++s)
    for (SiteId t = 0; t < L.num_sites(); ++t) {
      if (s == t) continue;
      bool n = L.bond_between(s, t).has_value();
      EXPECT_EQ(n, adjacent(L.coord(s), L.coord(t))) << s << " " << t;
    }
}

TEST(Lattice, Orientations) {
  HexLattice L = build_patch({2, 3});
  auto id = [&](int r, int c) { return *L.site_at({r, c}); };
  EXPECT_EQ(classify_bond(L, id(0, 0), id(0, 1)), Orientation::A_LEFT_OF_B);
  EXPECT_EQ(classify_bond(L, id(0, 2), id(0, 1)), Orientation::A_RIGHT_OF_B);
  EXPECT_EQ(classify_bond(L, id(0, 0), id(1, 0)), Orientation::A_BELOW_B);
  EXPECT_EQ(classify_bond(L, id(1, 1), id(1, 0)), Orientation::A_RIGHT_OF_B);
}

TEST(Lattice, BondErrors) {
  HexLattice L = build_patch({2, 3});
  auto id = [&](int r, int c) { return *L.site_at({r, c}); };
  try {
    classify_bond(L, id(0, 0), id(0, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidPair);
  }
  try {
    classify_bond(L, id(0, 0), id(1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoBond);
  }
}

TEST(Lattice, InvalidSpecs) {
  EXPECT_THROW(build_patch({0, 3}), Error);
  EXPECT_THROW(build_patch({2, -1}), Error);
  EXPECT_THROW(HexLattice::from_coords({{0, 0}, {0, 0}}), Error);
}

TEST(Lattice, RegionsMatchBruteForce) {
  HexLattice L = build_patch({3, 3});
  for (int k = 1; k <= 5; ++k) {
    auto got = enumerate_regions(L, k);
    std::set<std::vector<SiteId>> gs;
    for (auto r : got) {
      std::sort(r.begin(), r.end());
      gs.insert(r);
    }
    EXPECT_EQ(gs.size(), got.size());
    EXPECT_EQ(gs, brute_regions(L, k)) << "size " << k;
  }
}

TEST(Lattice, SingleBondPatchHasNoBlock) {
  HexLattice L = build_patch({1, 2});
  auto P = block_partition(L);
  EXPECT_TRUE(P.blocks.empty());
  EXPECT_EQ(P.remainder.size(), 2u);
  try {
    block_partition(L, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Partition);
  }
}

TEST(Lattice, InteriorBlockPairClasses) {
  HexLattice L = HexLattice::from_coords({{0, 0}, {1, 0}, {0, 2}, {1, 2}, {1, 1}, {2, 1}, {2, 0}, {3, 0}, {2, 2}, {3, 2}});
  auto P = block_partition(L, true);
  EXPECT_EQ(P.blocks.size(), 5u);
  auto in = P.interior_blocks();
  ASSERT_EQ(in.size(), 1u);
  int psd = 0, third = 0;
  for (const auto& np : P.pair_class) (np.cls == PairClass::PSD_CLASS ? psd : third)++;
  EXPECT_EQ(psd, 4);
  EXPECT_EQ(third, 2);
  EXPECT_EQ(P.adjacency.size(), 4u);
}

TEST(Lattice, ShapeKeyIsTranslationInvariant) {
  HexLattice L = build_patch({4, 4});
  auto a = shape_key(L, {*L.site_at({0, 0}), *L.site_at({0, 1})});
  auto b = shape_key(L, {*L.site_at({2, 2}), *L.site_at({2, 3})});
  EXPECT_EQ(a, b);
}

TEST(Lattice, JsonRoundTripOfSpec) {
  auto s = patch_spec_from_json(nlohmann::json{{"rows", 2}, {"cols", 5}});
  EXPECT_EQ(s.rows, 2);
  EXPECT_EQ(s.cols, 5);
  EXPECT_THROW(patch_spec_from_json(nlohmann::json{{"rows", 2}}), Error);
  auto j = to_json(build_patch({1, 2}));
  EXPECT_EQ(j["bonds"].size(), 1u);
  EXPECT_EQ(j["bonds"][0]["orientation"], "A_LEFT_OF_B");
}
