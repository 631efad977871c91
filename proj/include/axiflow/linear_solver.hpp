#pragma once

// Sparse symmetric positive definite systems: CSR storage, IC(0) preconditioner,
// preconditioned conjugate gradients. Reductions are summed over a fixed set of
// chunks in a fixed order, so results do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "axiflow/errors.hpp"

namespace axiflow {

class Executor {
 public:
  static constexpr std::size_t kChunks = 64;

  explicit Executor(int threads = 1) : threads_(std::max(1, threads)) {}
  int threads() const { return threads_; }

  // f(begin, end, chunk) over kChunks contiguous ranges of [0, n).
  template <class F>
  void for_chunks(std::size_t n, F&& f) const {
    auto run = [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) f(n * c / kChunks, n * (c + 1) / kChunks, c);
    };
    if (threads_ == 1 || n < 4096) {
      run(0, kChunks);
      return;
    }
    std::vector<std::thread> pool;
    const std::size_t t = static_cast<std::size_t>(threads_);
    std::vector<std::exception_ptr> err(t);
    auto guarded = [&](std::size_t w) {
      try {
        run(kChunks * w / t, kChunks * (w + 1) / t);
      } catch (...) {
        err[w] = std::current_exception();
      }
    };
    for (std::size_t w = 1; w < t; ++w) pool.emplace_back(guarded, w);
    guarded(0);
    for (auto& th : pool) th.join();
    for (auto& e : err)
      if (e) std::rethrow_exception(e);
  }

  template <class F>
  double sum(std::size_t n, F&& term) const {
    std::vector<double> part(kChunks, 0.0);
    for_chunks(n, [&](std::size_t b, std::size_t e, std::size_t c) {
      double s = 0.0;
      for (std::size_t i = b; i < e; ++i) s += term(i);
      part[c] = s;
    });
    // pairwise combination in fixed order
    for (std::size_t w = 1; w < kChunks; w *= 2)
      for (std::size_t i = 0; i + w < kChunks; i += 2 * w) part[i] += part[i + w];
    return part[0];
  }

 private:
  int threads_;
};

struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;  // sorted within each row
  std::vector<double> val;

  void multiply(const std::vector<double>& x, std::vector<double>& y, const Executor& ex) const {
    y.resize(n);
    ex.for_chunks(n, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t i = b; i < e; ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
        y[i] = s;
      }
    });
  }

  double at(std::size_t i, std::size_t j) const {
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
  }
};

/// Builds a CSR matrix row by row; entries within a row may arrive unsorted and repeated.
class CsrBuilder {
 public:
  explicit CsrBuilder(std::size_t n) : rows_(n) {}
  void add(std::size_t i, std::size_t j, double v) { rows_[i].push_back({j, v}); }
  CsrMatrix finish() {
    CsrMatrix m;
    m.n = rows_.size();
    m.row_ptr.assign(m.n + 1, 0);
    for (std::size_t i = 0; i < m.n; ++i) {
      auto& r = rows_[i];
      std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.j < b.j; });
      for (std::size_t p = 0; p < r.size(); ++p) {
        if (p > 0 && r[p].j == r[p - 1].j) {
          m.val.back() += r[p].v;
          continue;
        }
        m.col.push_back(r[p].j);
        m.val.push_back(r[p].v);
      }
      m.row_ptr[i + 1] = m.col.size();
    }
    rows_.clear();
    return m;
  }

 private:
  struct Entry {
    std::size_t j;
    double v;
  };
  std::vector<std::vector<Entry>> rows_;
};

/// Zero-fill incomplete Cholesky, A ~ L L^T with L on the lower pattern of A.
class IncompleteCholesky {
 public:
  explicit IncompleteCholesky(const CsrMatrix& a) : n_(a.n) {
    row_ptr_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        if (a.col[p] <= i) {
          col_.push_back(a.col[p]);
          val_.push_back(a.val[p]);
        }
      }
      row_ptr_[i + 1] = col_.size();
      if (col_.empty() || col_.back() != i) throw NumericalError("IC(0): missing diagonal in row " + std::to_string(i));
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t bi = row_ptr_[i], ei = row_ptr_[i + 1];
      for (std::size_t p = bi; p < ei; ++p) {
        const std::size_t j = col_[p];
        // dot of row i and row j over columns < j
        double s = val_[p];
        std::size_t q = bi, t = row_ptr_[j];
        const std::size_t et = row_ptr_[j + 1] - 1;
        while (q < p && t < et) {
          if (col_[q] == col_[t]) {
            s -= val_[q] * val_[t];
            ++q;
            ++t;
          } else if (col_[q] < col_[t]) {
            ++q;
          } else {
            ++t;
          }
        }
        if (j == i) {
          if (!(s > 0.0)) {
            // breakdown; fall back to the diagonal
            s = std::abs(a.at(i, i));
            if (!(s > 0.0)) throw NumericalError("IC(0): non-positive pivot in row " + std::to_string(i));
          }
          val_[p] = std::sqrt(s);
        } else {
          val_[p] = s / val_[row_ptr_[j + 1] - 1];
        }
      }
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    z.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = r[i];
      const std::size_t e = row_ptr_[i + 1] - 1;
      for (std::size_t p = row_ptr_[i]; p < e; ++p) s -= val_[p] * z[col_[p]];
      z[i] = s / val_[e];
    }
    // L^T solve, column oriented
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t e = row_ptr_[ii + 1] - 1;
      z[ii] /= val_[e];
      const double zi = z[ii];
      for (std::size_t p = row_ptr_[ii]; p < e; ++p) z[col_[p]] -= val_[p] * zi;
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> row_ptr_, col_;
  std::vector<double> val_;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned CG; x holds the initial guess on entry. Hitting max_iters is not an error.
inline CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                    double tol, int max_iters, const Executor& ex = Executor()) {
  const std::size_t n = a.n;
  if (b.size() != n) throw DomainError("pcg: size mismatch");
  x.resize(n, 0.0);
  CgResult res;
  const double bnorm = std::sqrt(ex.sum(n, [&](std::size_t i) { return b[i] * b[i]; }));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  IncompleteCholesky pre(a);
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, q, ex);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = std::sqrt(ex.sum(n, [&](std::size_t i) { return r[i] * r[i]; }));
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= tol) {
    res.converged = true;
    return res;
  }
  pre.apply(r, z);
  p = z;
  double rz = ex.sum(n, [&](std::size_t i) { return r[i] * z[i]; });
  for (int it = 1; it <= max_iters; ++it) {
    a.multiply(p, q, ex);
    const double pq = ex.sum(n, [&](std::size_t i) { return p[i] * q[i]; });
    if (!(pq > 0.0) || !std::isfinite(pq)) throw NumericalError("pcg breakdown: p^T A p = " + std::to_string(pq));
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = std::sqrt(ex.sum(n, [&](std::size_t i) { return r[i] * r[i]; }));
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    if (!std::isfinite(rnorm)) throw NumericalError("pcg: non-finite residual");
    if (res.relative_residual <= tol) {
      res.converged = true;
      return res;
    }
    pre.apply(r, z);
    const double rz_new = ex.sum(n, [&](std::size_t i) { return r[i] * z[i]; });
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

}  // namespace axiflow
