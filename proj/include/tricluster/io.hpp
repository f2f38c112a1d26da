#pragma once

#include "tricluster/peps.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace tricluster {

// Layout: "TRICSV1\n", u64 header length, JSON header, then re/im pairs as
// little-endian f64 in amplitude order.
inline constexpr char kStateMagic[8] = {'T', 'R', 'I', 'C', 'S', 'V', '1', '\n'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorKind::InvalidArgument, "truncated state file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_state(const std::string& path, const StateVector& sv, const nlohmann::json& meta = {}) {
  nlohmann::json h{{"sites", sv.sites}, {"dims", sv.dims}, {"open_legs", sv.open_legs}, {"norm", sv.norm},
                   {"size", sv.size()}};
  if (!meta.is_null()) h["meta"] = meta;
  std::string hs = h.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Resource, "cannot open " + path);
  os.write(kStateMagic, 8);
  detail::put_u64(os, hs.size());
  os.write(hs.data(), std::streamsize(hs.size()));
  for (Index i = 0; i < sv.size(); ++i) {
    detail::put_u64(os, std::bit_cast<std::uint64_t>(sv.amplitudes(i).real()));
    detail::put_u64(os, std::bit_cast<std::uint64_t>(sv.amplitudes(i).imag()));
  }
  if (!os) throw Error(ErrorKind::Resource, "write failed: " + path);
}

inline StateVector read_state(const std::string& path, nlohmann::json* meta = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0)
    throw Error(ErrorKind::InvalidArgument, "not a state file: " + path);
  std::string hs(detail::get_u64(is), '\0');
  if (!is.read(hs.data(), std::streamsize(hs.size()))) throw Error(ErrorKind::InvalidArgument, "truncated header");
  auto h = nlohmann::json::parse(hs);
  StateVector sv;
  sv.sites = h.at("sites").get<std::vector<SiteId>>();
  sv.dims = h.at("dims").get<std::vector<int>>();
  sv.open_legs = h.at("open_legs").get<std::vector<LegId>>();
  sv.norm = h.at("norm").get<double>();
  Index n = h.at("size").get<Index>();
  sv.amplitudes.resize(n);
  for (Index i = 0; i < n; ++i) {
    double re = std::bit_cast<double>(detail::get_u64(is));
    double im = std::bit_cast<double>(detail::get_u64(is));
    sv.amplitudes(i) = {re, im};
  }
  if (meta && h.contains("meta")) *meta = h["meta"];
  return sv;
}

}  // namespace tricluster
