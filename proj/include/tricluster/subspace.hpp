#pragma once

#include "tricluster/core.hpp"
#include "tricluster/lattice.hpp"

#include <cmath>

namespace tricluster {

struct SupportSpace {
  std::vector<SiteId> sites;  // ambient tensor factors, row-major
  std::vector<int> dims;
  CMat basis;                 // orthonormal columns
  Index rank = 0;
  double tol = 1e-9;
  std::vector<double> singular_values;

  Index ambient_dim() const {
    Index d = 1;
    for (int x : dims) d *= x;
    return d;
  }
};

// rank = number of singular values above tol * largest.
inline SupportSpace orthonormal_image(const CMat& map, double tol = 1e-9, std::vector<SiteId> sites = {},
                                      std::vector<int> dims = {}) {
  if (!(tol > 0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  SupportSpace S;
  S.sites = std::move(sites);
  S.dims = std::move(dims);
  if (S.dims.empty()) S.dims = {int(map.rows())};
  S.tol = tol;
  if (map.cols() == 0 || map.rows() == 0) {
    S.basis = CMat(map.rows(), 0);
    return S;
  }
  // Real input keeps a real basis, so real-valued downstream algebra stays exact.
  RVec sv;
  CMat U;
  if (is_real(map)) {
    Eigen::BDCSVD<RMat> svd(map.real(), Eigen::ComputeThinU);
    sv = svd.singularValues();
    U = svd.matrixU().cast<cplx>();
  } else {
    Eigen::BDCSVD<CMat> svd(map, Eigen::ComputeThinU);
    sv = svd.singularValues();
    U = svd.matrixU();
  }
  for (Index i = 0; i < sv.size(); ++i) S.singular_values.push_back(sv(i));
  Index r = 0;
  if (sv(0) > 0)
    while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
  S.rank = r;
  S.basis = U.leftCols(r);
  return S;
}

// Ascending principal angles, min(k1,k2) of them. Computed from sines so that
// nearly equal subspaces still resolve angles near 1e-15.
inline std::vector<double> principal_angles(const CMat& Q1, const CMat& Q2) {
  const CMat& big = Q1.cols() >= Q2.cols() ? Q1 : Q2;
  const CMat& small = Q1.cols() >= Q2.cols() ? Q2 : Q1;
  if (big.rows() != small.rows()) throw Error(ErrorKind::DimensionMismatch, "principal_angles: ambient differs");
  if (small.cols() == 0) return {};
  CMat R = small - big * (big.adjoint() * small);
  Eigen::BDCSVD<CMat> svd(R);
  std::vector<double> out;
  for (Index i = 0; i < svd.singularValues().size(); ++i)
    out.push_back(std::asin(std::min(1.0, svd.singularValues()(i))));
  std::sort(out.begin(), out.end());
  return out;
}

inline double max_principal_angle(const SupportSpace& a, const SupportSpace& b) {
  if (a.rank != b.rank) return M_PI / 2;
  auto ang = principal_angles(a.basis, b.basis);
  return ang.empty() ? 0.0 : ang.back();
}

inline bool same_subspace(const SupportSpace& a, const SupportSpace& b, double tol = 1e-8) {
  return a.rank == b.rank && max_principal_angle(a, b) < tol;
}

// Reorders the tensor factors of every column of Q from `from` to `to` (same site set).
inline CMat reorder_sites(const CMat& Q, const std::vector<SiteId>& from, const std::vector<int>& dims,
                          const std::vector<SiteId>& to) {
  int n = int(from.size());
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) {
    auto it = std::find(from.begin(), from.end(), to[i]);
    if (it == from.end()) throw Error(ErrorKind::InvalidArgument, "reorder_sites: site sets differ");
    pos[i] = int(it - from.begin());
  }
  std::vector<Index> stride(n, 1);
  for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];
  CMat out(Q.rows(), Q.cols());
  std::vector<int> digit(n, 0);
  for (Index k = 0; k < Q.rows(); ++k) {
    Index src = 0;
    for (int i = 0; i < n; ++i) src += digit[i] * stride[pos[i]];
    out.row(k) = Q.row(src);
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < dims[pos[i]]) break;
      digit[i] = 0;
    }
  }
  return out;
}

// S ⊗ I on the ambient site list; columns are basis(S) ⊗ e_j for every j on the other sites.
inline SupportSpace embed(const SupportSpace& S, const std::vector<SiteId>& ambient, const std::vector<int>& ambient_dims) {
  std::vector<SiteId> rest;
  std::vector<int> rest_dims;
  for (std::size_t i = 0; i < ambient.size(); ++i)
    if (std::find(S.sites.begin(), S.sites.end(), ambient[i]) == S.sites.end()) {
      rest.push_back(ambient[i]);
      rest_dims.push_back(ambient_dims[i]);
    }
  if (rest.size() + S.sites.size() != ambient.size())
    throw Error(ErrorKind::InvalidArgument, "embed: space sites not inside ambient");
  Index drest = 1;
  for (int d : rest_dims) drest *= d;
  Index ds = S.basis.rows();
  CMat big = CMat::Zero(ds * drest, S.rank * drest);
  for (Index c = 0; c < S.rank; ++c)
    for (Index j = 0; j < drest; ++j)
      for (Index r = 0; r < ds; ++r) big(r * drest + j, c * drest + j) = S.basis(r, c);
  std::vector<SiteId> order = S.sites;
  order.insert(order.end(), rest.begin(), rest.end());
  std::vector<int> odims = S.dims;
  odims.insert(odims.end(), rest_dims.begin(), rest_dims.end());
  SupportSpace E;
  E.sites = ambient;
  E.dims = ambient_dims;
  E.basis = reorder_sites(big, order, odims, ambient);
  E.rank = E.basis.cols();
  E.tol = S.tol;
  return E;
}

}  // namespace tricluster
