#pragma once

#include "tricluster/core.hpp"

#include <numeric>

namespace tricluster {

// Dense tensor with integer index labels, row-major (first label slowest).
struct Tensor {
  std::vector<int> labels;
  std::vector<Index> dims;
  std::vector<cplx> data;

  Tensor() = default;
  Tensor(std::vector<int> l, std::vector<Index> d) : labels(std::move(l)), dims(std::move(d)) {
    data.assign(size_of(dims), cplx(0));
  }
  static Index size_of(const std::vector<Index>& d) {
    return std::accumulate(d.begin(), d.end(), Index(1), std::multiplies<>());
  }
  Index size() const { return Index(data.size()); }
  int rank() const { return int(labels.size()); }
  int position(int label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : int(it - labels.begin());
  }
};

inline Tensor permute(const Tensor& t, const std::vector<int>& order) {
  int r = t.rank();
  std::vector<int> perm(r);
  for (int i = 0; i < r; ++i) {
    perm[i] = t.position(order[i]);
    if (perm[i] < 0) throw Error(ErrorKind::InvalidArgument, "permute: unknown label");
  }
  std::vector<Index> nd(r);
  for (int i = 0; i < r; ++i) nd[i] = t.dims[perm[i]];
  Tensor out(order, nd);
  std::vector<Index> stride(r, 1);
  for (int i = r - 2; i >= 0; --i) stride[i] = stride[i + 1] * t.dims[i + 1];
  std::vector<Index> ps(r);
  for (int i = 0; i < r; ++i) ps[i] = stride[perm[i]];
  std::vector<Index> ctr(r, 0);
  Index src = 0;
  for (Index k = 0; k < out.size(); ++k) {
    out.data[k] = t.data[src];
    for (int i = r - 1; i >= 0; --i) {
      if (++ctr[i] < nd[i]) {
        src += ps[i];
        break;
      }
      src -= ps[i] * (nd[i] - 1);
      ctr[i] = 0;
    }
  }
  return out;
}

// Sums over all labels shared by a and b; result labels are a's free labels then b's.
inline Tensor contract_pair(const Tensor& a, const Tensor& b) {
  std::vector<int> shared, fa, fb;
  for (int l : a.labels) (b.position(l) >= 0 ? shared : fa).push_back(l);
  for (int l : b.labels)
    if (a.position(l) < 0) fb.push_back(l);
  std::vector<int> oa = fa, ob = shared;
  oa.insert(oa.end(), shared.begin(), shared.end());
  ob.insert(ob.end(), fb.begin(), fb.end());
  Tensor pa = permute(a, oa), pb = permute(b, ob);
  Index m = 1, k = 1, n = 1;
  std::vector<Index> rd;
  for (int l : fa) {
    m *= a.dims[a.position(l)];
    rd.push_back(a.dims[a.position(l)]);
  }
  for (int l : shared) {
    Index da = a.dims[a.position(l)], db = b.dims[b.position(l)];
    if (da != db) throw Error(ErrorKind::DimensionMismatch, "label " + std::to_string(l));
    k *= da;
  }
  for (int l : fb) {
    n *= b.dims[b.position(l)];
    rd.push_back(b.dims[b.position(l)]);
  }
  std::vector<int> rl = fa;
  rl.insert(rl.end(), fb.begin(), fb.end());
  Tensor out(rl, rd);
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> A(pa.data.data(), m, k);
  Eigen::Map<const RowMat> B(pb.data.data(), k, n);
  Eigen::Map<RowMat> C(out.data.data(), m, n);
  C.noalias() = A * B;
  return out;
}

// Greedy pairwise contraction: each step merges the connected pair whose result
// is smallest relative to its inputs; ties go to the lowest indices.
inline Tensor contract_network(std::vector<Tensor> ts, const std::vector<int>& output, const Budget& budget = {}) {
  if (ts.empty()) {
    Tensor s({}, {});
    s.data = {cplx(1)};
    return s;
  }
  auto result_size = [](const Tensor& a, const Tensor& b, bool& connected) {
    Index sz = 1;
    connected = false;
    for (int i = 0; i < a.rank(); ++i) {
      if (b.position(a.labels[i]) >= 0)
        connected = true;
      else
        sz *= a.dims[i];
    }
    for (int i = 0; i < b.rank(); ++i)
      if (a.position(b.labels[i]) < 0) sz *= b.dims[i];
    return sz;
  };
  while (ts.size() > 1) {
    int bi = -1, bj = -1;
    double best = 0;
    bool best_conn = false;
    for (int i = 0; i < int(ts.size()); ++i)
      for (int j = i + 1; j < int(ts.size()); ++j) {
        bool conn;
        Index sz = result_size(ts[i], ts[j], conn);
        double score = double(sz) - double(ts[i].size()) - double(ts[j].size());
        if (bi < 0 || (conn && !best_conn) || (conn == best_conn && score < best)) {
          bi = i;
          bj = j;
          best = score;
          best_conn = conn;
        }
      }
    bool conn;
    budget.require(double(result_size(ts[bi], ts[bj], conn)) * sizeof(cplx), "contraction intermediate");
    Tensor c = contract_pair(ts[bi], ts[bj]);
    ts.erase(ts.begin() + bj);
    ts[bi] = std::move(c);
  }
  Tensor& t = ts.front();
  if (t.rank() != int(output.size())) throw Error(ErrorKind::InvalidArgument, "network has unmatched open labels");
  return permute(t, output);
}

}  // namespace tricluster
