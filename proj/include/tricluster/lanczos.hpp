#pragma once

#include "tricluster/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace tricluster {

struct LanczosOptions {
  int nev = 1;
  int max_basis = 40;
  int max_restarts = 3000;
  double tol = 1e-9;  // on ||Av - λv||, relative to max(1, |λ|max of the Ritz values)
  std::uint64_t seed = 0;
  Index dense_below = 600;
};

template <class S>
struct LanczosResult {
  std::vector<double> values;
  std::vector<double> residuals;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> vectors;
  int matvecs = 0;
  int restarts = 0;
  bool converged = false;
  bool dense = false;
};

namespace detail {

template <class S>
void fill_random(Eigen::Matrix<S, Eigen::Dynamic, 1>& v, CounterRng& rng) {
  for (Index i = 0; i < v.size(); ++i) {
    if constexpr (std::is_same_v<S, double>)
      v(i) = rng.uniform() - 0.5;
    else
      v(i) = S(rng.uniform() - 0.5, rng.uniform() - 0.5);
  }
}

}  // namespace detail

// Smallest eigenpairs of the Hermitian operator `op` (y = A x) restricted to the
// orthogonal complement of the columns of `deflate` (orthonormal, may be null).
// Thick-restart Lanczos with full reorthogonalisation; the projected matrix is
// kept exactly (T = V^H A V), so restarts need no special arrowhead handling.
template <class S, class Op>
LanczosResult<S> lanczos_smallest(Index n, Op&& op, const LanczosOptions& opt,
                                  const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>* deflate = nullptr) {
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  LanczosResult<S> res;
  CounterRng rng(opt.seed);
  const Index ndef = deflate ? deflate->cols() : 0;
  auto project = [&](Vec& w) {
    if (!ndef) return;
    w -= (*deflate) * (deflate->adjoint() * w);
    w -= (*deflate) * (deflate->adjoint() * w);
  };
  const Index neff = n - ndef;
  if (neff <= 0) return res;

  if (neff <= opt.dense_below) {
    // Small problem: Rayleigh-Ritz on an orthonormal basis of the complement.
    Mat B(n, neff);
    Index c = 0;
    Vec e(n);
    for (Index i = 0; i < n && c < neff; ++i) {
      e.setZero();
      e(i) = S(1);
      project(e);
      if (c) {
        e -= B.leftCols(c) * (B.leftCols(c).adjoint() * e);
        e -= B.leftCols(c) * (B.leftCols(c).adjoint() * e);
      }
      double nr = e.norm();
      if (nr > 1e-8) B.col(c++) = e / nr;
    }
    Mat AB(n, c);
    Vec y(n);
    for (Index j = 0; j < c; ++j) {
      op(Vec(B.col(j)), y);
      project(y);
      AB.col(j) = y;
      ++res.matvecs;
    }
    Mat T = B.leftCols(c).adjoint() * AB;
    T = (T + T.adjoint()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<Mat> es(T);
    int k = int(std::min<Index>(opt.nev, c));
    res.vectors = B.leftCols(c) * es.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) {
      res.values.push_back(es.eigenvalues()(i));
      Vec r = AB * es.eigenvectors().col(i) - es.eigenvalues()(i) * res.vectors.col(i);
      res.residuals.push_back(r.norm());
    }
    res.converged = true;
    res.dense = true;
    return res;
  }

  const int m = int(std::min<Index>(opt.max_basis, neff));
  const int nev = std::min(opt.nev, m - 2);
  Mat V(n, m);
  Mat T = Mat::Zero(m, m);
  Vec w(n), v0(n);
  detail::fill_random(v0, rng);
  project(v0);
  V.col(0) = v0 / v0.norm();
  int k = 0;
  double beta = 0;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  for (int restart = 0;; ++restart) {
    for (int j = k; j < m; ++j) {
      op(Vec(V.col(j)), w);
      ++res.matvecs;
      project(w);
      Vec h = V.leftCols(j + 1).adjoint() * w;
      w -= V.leftCols(j + 1) * h;
      Vec h2 = V.leftCols(j + 1).adjoint() * w;
      w -= V.leftCols(j + 1) * h2;
      h += h2;
      // Project again after orthogonalisation: the first projection's roundoff
      // would otherwise be amplified by 1/beta and pull the kernel back in.
      project(w);
      for (int i = 0; i <= j; ++i) {
        T(i, j) = h(i);
        T(j, i) = Eigen::numext::conj(h(i));
      }
      T(j, j) = std::real(h(j));
      beta = w.norm();
      if (j + 1 < m) {
        if (beta < 1e-12) {
          // Invariant subspace: continue with a fresh direction.
          detail::fill_random(w, rng);
          project(w);
          w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
          w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
          V.col(j + 1) = w / w.norm();
        } else {
          V.col(j + 1) = w / beta;
        }
      }
    }
    es.compute(T);
    const auto& th = es.eigenvalues();
    const Mat& Y = es.eigenvectors();
    double scale = std::max({1.0, std::abs(th(0)), std::abs(th(m - 1))});
    bool done = true;
    for (int i = 0; i < nev; ++i)
      if (beta * std::abs(Y(m - 1, i)) > opt.tol * scale) done = false;
    if (done || restart >= opt.max_restarts) {
      res.converged = done;
      res.restarts = restart;
      res.vectors = V * Y.leftCols(nev);
      Vec y(n);
      for (int i = 0; i < nev; ++i) {
        res.values.push_back(th(i));
        op(Vec(res.vectors.col(i)), y);
        ++res.matvecs;
        project(y);
        res.residuals.push_back((y - th(i) * res.vectors.col(i)).norm());
      }
      return res;
    }
    k = std::min(m - 2, nev + (m - nev) / 2);
    Mat Vk = V * Y.leftCols(k);
    V.leftCols(k) = Vk;
    T.setZero();
    for (int i = 0; i < k; ++i) T(i, i) = th(i);
    if (beta < 1e-12) {
      detail::fill_random(w, rng);
      project(w);
      w -= V.leftCols(k) * (V.leftCols(k).adjoint() * w);
      beta = w.norm();
    }
    V.col(k) = w / beta;
  }
}

}  // namespace tricluster
