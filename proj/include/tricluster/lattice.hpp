#pragma once

#include "tricluster/core.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>

namespace tricluster {

enum class Sublattice { A, B };
enum class LegRole { Left = 0, Right = 1, Vertical = 2 };  // vertical is "up" on A, "down" on B
enum class Orientation { A_LEFT_OF_B, A_RIGHT_OF_B, A_BELOW_B };

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::A_LEFT_OF_B: return "A_LEFT_OF_B";
    case Orientation::A_RIGHT_OF_B: return "A_RIGHT_OF_B";
    case Orientation::A_BELOW_B: return "A_BELOW_B";
  }
  return "?";
}

inline constexpr std::array<Orientation, 3> kOrientations = {
    Orientation::A_LEFT_OF_B, Orientation::A_RIGHT_OF_B, Orientation::A_BELOW_B};

using SiteId = int;
using LegId = int;

struct Coord {
  int row = 0;
  int col = 0;
  auto operator<=>(const Coord&) const = default;
};

struct PatchSpec {
  int rows = 0;
  int cols = 0;
};

// a is the A-sublattice leg, b the B-sublattice leg.
struct Bond {
  LegId a;
  LegId b;
  Orientation orientation;
};

inline Sublattice sublattice_of(Coord c) {
  return ((c.row + c.col) % 2 == 0) ? Sublattice::A : Sublattice::B;
}

// Brick-wall embedding: (r,c) is A iff r+c is even; horizontal bonds join
// (r,c).right to (r,c+1).left; A(r,c).up joins B(r+1,c).down.
class HexLattice {
 public:
  HexLattice() = default;

  static HexLattice from_coords(std::vector<Coord> coords) {
    std::sort(coords.begin(), coords.end());
    if (std::adjacent_find(coords.begin(), coords.end()) != coords.end())
      throw Error(ErrorKind::InvalidSpec, "duplicate coordinates");
    HexLattice L;
    L.coords_ = std::move(coords);
    for (SiteId s = 0; s < L.num_sites(); ++s) L.index_[L.coords_[s]] = s;
    L.partner_.assign(3 * L.num_sites(), -1);
    for (SiteId s = 0; s < L.num_sites(); ++s) {
      Coord c = L.coords_[s];
      if (auto t = L.site_at({c.row, c.col + 1})) {
        LegId ls = leg(s, LegRole::Right), lt = leg(*t, LegRole::Left);
        if (L.sublattice(s) == Sublattice::A)
          L.bonds_.push_back({ls, lt, Orientation::A_LEFT_OF_B});
        else
          L.bonds_.push_back({lt, ls, Orientation::A_RIGHT_OF_B});
        L.partner_[ls] = lt;
        L.partner_[lt] = ls;
      }
      if (L.sublattice(s) == Sublattice::A) {
        if (auto t = L.site_at({c.row + 1, c.col})) {
          LegId ls = leg(s, LegRole::Vertical), lt = leg(*t, LegRole::Vertical);
          L.bonds_.push_back({ls, lt, Orientation::A_BELOW_B});
          L.partner_[ls] = lt;
          L.partner_[lt] = ls;
        }
      }
    }
    for (LegId l = 0; l < 3 * L.num_sites(); ++l)
      if (L.partner_[l] < 0) L.dangling_.push_back(l);
    return L;
  }

  int num_sites() const { return int(coords_.size()); }
  const std::vector<Coord>& coords() const { return coords_; }
  Coord coord(SiteId s) const { return coords_.at(s); }
  Sublattice sublattice(SiteId s) const { return sublattice_of(coords_.at(s)); }

  std::optional<SiteId> site_at(Coord c) const {
    auto it = index_.find(c);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  static LegId leg(SiteId s, LegRole r) { return 3 * s + int(r); }
  static SiteId site_of(LegId l) { return l / 3; }
  static LegRole role_of(LegId l) { return LegRole(l % 3); }

  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<LegId>& dangling() const { return dangling_; }
  bool is_dangling(LegId l) const { return partner_.at(l) < 0; }
  std::optional<LegId> partner(LegId l) const {
    if (partner_.at(l) < 0) return std::nullopt;
    return partner_[l];
  }

  std::vector<SiteId> neighbors(SiteId s) const {
    std::vector<SiteId> out;
    for (int r = 0; r < 3; ++r)
      if (auto p = partner(leg(s, LegRole(r)))) out.push_back(site_of(*p));
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<Bond> bond_between(SiteId a, SiteId b) const {
    for (const auto& bd : bonds_) {
      SiteId x = site_of(bd.a), y = site_of(bd.b);
      if ((x == a && y == b) || (x == b && y == a)) return bd;
    }
    return std::nullopt;
  }

 private:
  std::vector<Coord> coords_;
  std::map<Coord, SiteId> index_;
  std::vector<Bond> bonds_;
  std::vector<LegId> dangling_;
  std::vector<LegId> partner_;
};

inline HexLattice build_patch(PatchSpec spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw Error(ErrorKind::InvalidSpec, "patch needs rows >= 1 and cols >= 1, got " +
                                            std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
  std::vector<Coord> cs;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) cs.push_back({r, c});
  return HexLattice::from_coords(cs);
}

inline Orientation classify_bond(const HexLattice& L, SiteId a, SiteId b) {
  if (a < 0 || b < 0 || a >= L.num_sites() || b >= L.num_sites())
    throw Error(ErrorKind::InvalidArgument, "site id out of range");
  if (L.sublattice(a) == L.sublattice(b))
    throw Error(ErrorKind::InvalidPair, "sites " + std::to_string(a) + " and " + std::to_string(b) +
                                            " are on the same sublattice");
  auto bd = L.bond_between(a, b);
  if (!bd) throw Error(ErrorKind::NoBond, "sites " + std::to_string(a) + " and " + std::to_string(b) + " share no bond");
  if (L.sublattice(a) != Sublattice::A)
    throw Error(ErrorKind::InvalidPair, "first site must be on sublattice A");
  return bd->orientation;
}

inline bool is_connected(const HexLattice& L, const std::vector<SiteId>& region) {
  if (region.empty()) return false;
  std::set<SiteId> in(region.begin(), region.end()), seen{region.front()};
  std::vector<SiteId> stack{region.front()};
  while (!stack.empty()) {
    SiteId s = stack.back();
    stack.pop_back();
    for (SiteId t : L.neighbors(s))
      if (in.count(t) && seen.insert(t).second) stack.push_back(t);
  }
  return seen.size() == in.size();
}

// Connected induced subgraphs of exactly `size` sites, each sorted, list in lexicographic order.
inline std::vector<std::vector<SiteId>> enumerate_regions(const HexLattice& L, int size) {
  if (size < 1 || size > 6) throw Error(ErrorKind::InvalidArgument, "region size must be in [1,6]");
  std::set<std::vector<SiteId>> level;
  for (SiteId s = 0; s < L.num_sites(); ++s) level.insert({s});
  for (int k = 1; k < size; ++k) {
    std::set<std::vector<SiteId>> next;
    for (const auto& r : level)
      for (SiteId s : r)
        for (SiteId t : L.neighbors(s)) {
          if (std::binary_search(r.begin(), r.end(), t)) continue;
          auto g = r;
          g.insert(std::upper_bound(g.begin(), g.end(), t), t);
          next.insert(std::move(g));
        }
    level = std::move(next);
  }
  return {level.begin(), level.end()};
}

// Translation class of a region: coordinates shifted by an even vector so the
// sublattice pattern is kept.
inline std::vector<Coord> shape_key(const HexLattice& L, const std::vector<SiteId>& region) {
  std::vector<Coord> cs;
  for (SiteId s : region) cs.push_back(L.coord(s));
  int r0 = cs.front().row, c0 = cs.front().col;
  for (auto c : cs) {
    r0 = std::min(r0, c.row);
    c0 = std::min(c0, c.col);
  }
  if (((r0 + c0) % 2 + 2) % 2 != 0) c0 -= 1;
  for (auto& c : cs) c = {c.row - r0, c.col - c0};
  std::sort(cs.begin(), cs.end());
  return cs;
}

enum class PairClass { PSD_CLASS, THIRD_CLASS };

inline const char* to_string(PairClass p) {
  return p == PairClass::PSD_CLASS ? "PSD_CLASS" : "THIRD_CLASS";
}

struct Block {
  SiteId lower;  // A site
  SiteId upper;  // B site directly above
};

// Neighbour blocks of an interior block, indexed by where they attach:
// 0 = lower.left, 1 = lower.right, 2 = upper.left, 3 = upper.right.
struct NeighborPair {
  int block;
  int slot_i;
  int slot_j;
  PairClass cls;
};

struct BlockPartition {
  std::vector<Block> blocks;
  std::vector<std::pair<int, int>> adjacency;    // i < j
  std::vector<std::array<int, 4>> attach;        // per block, -1 where missing
  std::vector<SiteId> remainder;
  std::vector<NeighborPair> pair_class;          // for every interior block, 6 pairs

  std::vector<int> interior_blocks() const {
    std::vector<int> out;
    for (int b = 0; b < int(blocks.size()); ++b)
      if (std::all_of(attach[b].begin(), attach[b].end(), [](int x) { return x >= 0; })) out.push_back(b);
    return out;
  }
  int block_of(SiteId s) const {
    for (int b = 0; b < int(blocks.size()); ++b)
      if (blocks[b].lower == s || blocks[b].upper == s) return b;
    return -1;
  }
};

// Geometric rule: two neighbours hanging off the same member of m form the
// THIRD_CLASS pair; the verification module re-derives this from spectra.
inline PairClass geometric_pair_class(int slot_i, int slot_j) {
  return (slot_i / 2 == slot_j / 2) ? PairClass::THIRD_CLASS : PairClass::PSD_CLASS;
}

inline BlockPartition block_partition(const HexLattice& L, bool strict = false) {
  BlockPartition P;
  std::vector<int> owner(L.num_sites(), -1);
  for (SiteId s = 0; s < L.num_sites(); ++s) {
    if (L.sublattice(s) != Sublattice::A) continue;
    auto p = L.partner(HexLattice::leg(s, LegRole::Vertical));
    if (!p) continue;
    SiteId u = HexLattice::site_of(*p);
    owner[s] = owner[u] = int(P.blocks.size());
    P.blocks.push_back({s, u});
  }
  for (SiteId s = 0; s < L.num_sites(); ++s)
    if (owner[s] < 0) P.remainder.push_back(s);
  if (strict && !P.remainder.empty()) {
    std::string msg = "unpaired sites:";
    for (SiteId s : P.remainder)
      msg += " (" + std::to_string(L.coord(s).row) + "," + std::to_string(L.coord(s).col) + ")";
    throw Error(ErrorKind::Partition, msg);
  }
  std::set<std::pair<int, int>> adj;
  for (int b = 0; b < int(P.blocks.size()); ++b) {
    std::array<int, 4> at{-1, -1, -1, -1};
    SiteId mem[2] = {P.blocks[b].lower, P.blocks[b].upper};
    for (int m = 0; m < 2; ++m)
      for (int r = 0; r < 2; ++r)
        if (auto p = L.partner(HexLattice::leg(mem[m], LegRole(r)))) {
          int nb = owner[HexLattice::site_of(*p)];
          if (nb >= 0) {
            at[2 * m + r] = nb;
            adj.insert({std::min(b, nb), std::max(b, nb)});
          }
        }
    P.attach.push_back(at);
  }
  P.adjacency.assign(adj.begin(), adj.end());
  for (int b : P.interior_blocks())
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) P.pair_class.push_back({b, i, j, geometric_pair_class(i, j)});
  return P;
}

inline PatchSpec patch_spec_from_json(const nlohmann::json& j) {
  if (!j.contains("rows") || !j.contains("cols"))
    throw Error(ErrorKind::InvalidSpec, "patch spec needs rows and cols");
  return {j.at("rows").get<int>(), j.at("cols").get<int>()};
}

inline nlohmann::json to_json(const HexLattice& L) {
  nlohmann::json sites = nlohmann::json::array(), bonds = nlohmann::json::array();
  for (SiteId s = 0; s < L.num_sites(); ++s)
    sites.push_back({{"id", s},
                     {"row", L.coord(s).row},
                     {"col", L.coord(s).col},
                     {"sublattice", L.sublattice(s) == Sublattice::A ? "A" : "B"},
                     {"neighbors", L.neighbors(s)}});
  for (const auto& b : L.bonds())
    bonds.push_back({{"a_leg", b.a}, {"b_leg", b.b}, {"orientation", to_string(b.orientation)}});
  return {{"sites", sites}, {"bonds", bonds}, {"dangling", L.dangling()}};
}

}  // namespace tricluster
