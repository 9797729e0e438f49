#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace ncdr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Entity and DoF ids. 32-bit to match Eigen's default sparse storage index.
using Id = std::int32_t;

/// Assembled operators are kept in compressed row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Id>;
using Triplet = Eigen::Triplet<double, Id>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A requested quantity or degree is not provided (e.g. curl of a scalar element).
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Inconsistent mesh, mismatched spaces or DoF maps.
class IntegrityError : public Error {
public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
public:
  using Error::Error;
};

class UnisolvenceFailure : public Error {
public:
  UnisolvenceFailure(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

class SolverFailure : public Error {
public:
  SolverFailure(const std::string& what, std::vector<double> history = {})
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Execution policy for element loops. Results never depend on the thread
/// count: per-chunk buffers are merged in element order.
struct Execution {
  bool serial = true;

  unsigned threads() const {
    if (serial) return 1;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

/// Runs body(begin, end, chunk) over contiguous chunks of [0, count).
template <class Body>
void parallel_chunks(Id count, const Execution& exec, Body&& body) {
  const unsigned nthreads =
      std::min<unsigned>(exec.threads(), static_cast<unsigned>(std::max<Id>(count, 1)));
  if (nthreads <= 1) {
    body(Id{0}, count, 0u);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned c = 0; c < nthreads; ++c) {
    const Id begin = static_cast<Id>(static_cast<std::int64_t>(count) * c / nthreads);
    const Id end = static_cast<Id>(static_cast<std::int64_t>(count) * (c + 1) / nthreads);
    pool.emplace_back([&body, begin, end, c] { body(begin, end, c); });
  }
  for (auto& t : pool) t.join();
}

/// Deterministic triplet assembly: kernel(element, out) appends triplets;
/// per-chunk buffers are concatenated in element order before summation.
template <class Kernel>
SparseMatrix assemble_triplets(Id rows, Id cols, Id elements, const Execution& exec,
                               Kernel&& kernel) {
  const unsigned nchunks =
      std::min<unsigned>(exec.threads(), static_cast<unsigned>(std::max<Id>(elements, 1)));
  std::vector<std::vector<Triplet>> buffers(nchunks);
  parallel_chunks(elements, exec, [&](Id begin, Id end, unsigned chunk) {
    auto& out = buffers[chunk];
    for (Id e = begin; e < end; ++e) kernel(e, out);
  });
  std::vector<Triplet> all;
  std::size_t total = 0;
  for (const auto& b : buffers) total += b.size();
  all.reserve(total);
  for (auto& b : buffers) {
    all.insert(all.end(), b.begin(), b.end());
    std::vector<Triplet>().swap(b);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(all.begin(), all.end());
  return m;
}

/// Like assemble_triplets, but duplicate entries keep the first value
/// instead of summing. Used for DoF-evaluation operators where every element
/// sharing an entity computes the same (single-valued) entry.
template <class Kernel>
SparseMatrix assemble_first_wins(Id rows, Id cols, Id elements, const Execution& exec,
                                 Kernel&& kernel) {
  const unsigned nchunks =
      std::min<unsigned>(exec.threads(), static_cast<unsigned>(std::max<Id>(elements, 1)));
  std::vector<std::vector<Triplet>> buffers(nchunks);
  parallel_chunks(elements, exec, [&](Id begin, Id end, unsigned chunk) {
    auto& out = buffers[chunk];
    for (Id e = begin; e < end; ++e) kernel(e, out);
  });
  std::vector<Triplet> all;
  for (auto& b : buffers) all.insert(all.end(), b.begin(), b.end());
  SparseMatrix m(rows, cols);
  m.setFromTriplets(all.begin(), all.end(), [](double first, double) { return first; });
  return m;
}

}  // namespace ncdr
