#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tricluster {

using cplx = std::complex<double>;
using Index = std::int64_t;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

enum class ErrorKind {
  InvalidSpec,
  InvalidArgument,
  NoBond,
  InvalidPair,
  InvalidRegion,
  Partition,
  ContractBoundary,
  Resource,
  ZeroProbability,
  AlreadyMeasured,
  IncompletePattern,
  DimensionMismatch,
  UnknownGate,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NoBond: return "no-bond";
    case ErrorKind::InvalidPair: return "invalid-pair";
    case ErrorKind::InvalidRegion: return "invalid-region";
    case ErrorKind::Partition: return "partition";
    case ErrorKind::ContractBoundary: return "contract-requires-fixed-boundary";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::ZeroProbability: return "zero-probability";
    case ErrorKind::AlreadyMeasured: return "already-measured";
    case ErrorKind::IncompletePattern: return "incomplete-pattern";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::UnknownGate: return "unknown-gate";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Memory budget; every dense allocation above a few KB asks first.
struct Budget {
  std::size_t bytes = std::size_t(8) << 30;

  void require(double need, const std::string& what) const {
    if (need > double(bytes))
      throw Error(ErrorKind::Resource, what + " needs " + std::to_string(std::size_t(need)) +
                                           " bytes, budget " + std::to_string(bytes));
  }
};

inline int thread_count() {
  int n = int(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("TRICLUSTER_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

// Splits [0, n) into contiguous chunks. Callers must write disjoint outputs per index.
template <class F>
void parallel_for(Index n, F&& f, Index grain = 64) {
  int nt = thread_count();
  if (nt <= 1 || n < 2 * grain) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  nt = int(std::min<Index>(nt, n / grain));
  std::vector<std::thread> pool;
  Index chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    Index lo = t * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &f] {
      for (Index i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Counter-based generator: draw k is splitmix64(seed + k*golden), so any draw is addressable.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next() { return mix(seed_ + (counter_++) * 0x9E3779B97F4A7C15ull); }
  double uniform() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

template <class T>
T pairwise_sum(const T* x, Index n) {
  if (n <= 8) {
    T s = T(0);
    for (Index i = 0; i < n; ++i) s += x[i];
    return s;
  }
  Index h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline Index ipow(Index b, int e) {
  Index r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline bool is_real(const CMat& m, double tol = 0.0) {
  return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() <= tol;
}

}  // namespace tricluster
