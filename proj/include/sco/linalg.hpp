// Dense matrices plus the two eigensolver paths used in this project: a
// cyclic Jacobi solver for the small Gram matrices the oracle works with,
// and LAPACK dsyevr for the large Laplacians of the exact baseline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <lapacke.h>

#include "sco/common.hpp"

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace sco {

// BLAS runs single-threaded; our own parallelism lives in walk batches and
// result bytes must not depend on the thread count.
inline void pin_blas_threads() {
    static bool done = false;
    if (!done && openblas_set_num_threads) openblas_set_num_threads(1);
    done = true;
}

class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    static Matrix identity(size_t n) {
        Matrix m(n, n);
        for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    double& operator()(size_t i, size_t j) { return a_[i * cols_ + j]; }
    double operator()(size_t i, size_t j) const { return a_[i * cols_ + j]; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (size_t i = 0; i < rows_; ++i)
            for (size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t l = 0; l < a.cols(); ++l) {
            const double v = a(i, l);
            if (v == 0.0) continue;
            for (size_t j = 0; j < b.cols(); ++j) c(i, j) += v * b(l, j);
        }
    return c;
}

struct EigResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j is the eigenvector of values[j]
};

namespace detail {

// Cyclic Jacobi rotations; adequate for the s x s Gram matrices (s up to a
// few hundred). Returns unsorted eigenpairs in-place.
inline void jacobi_eig(Matrix& m, Matrix& v) {
    const size_t n = m.rows();
    v = Matrix::identity(n);
    if (n < 2) return;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (size_t i = 0; i < n; ++i) {
            diag += std::abs(m(i, i));
            for (size_t j = i + 1; j < n; ++j) off += 2.0 * m(i, j) * m(i, j);
        }
        if (std::sqrt(off) <= 1e-14 * std::max(1e-300, diag)) break;
        for (size_t p = 0; p < n - 1; ++p)
            for (size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double app = m(p, p), aqq = m(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (size_t i = 0; i < n; ++i) {
                    const double mip = m(i, p), miq = m(i, q);
                    m(i, p) = c * mip - s * miq;
                    m(i, q) = s * mip + c * miq;
                }
                for (size_t i = 0; i < n; ++i) {
                    const double mpi = m(p, i), mqi = m(q, i);
                    m(p, i) = c * mpi - s * mqi;
                    m(q, i) = s * mpi + c * mqi;
                }
                for (size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
    }
}

constexpr size_t kJacobiLimit = 384;

}  // namespace detail

// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
// Jacobi below kJacobiLimit, LAPACK dsyevd above; both meet the residual
// contract ||M W - W diag|| <= 1e-8 ||M||.
inline EigResult symmetric_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("symmetric_eig: not square");
    const size_t n = m.rows();
    double asym = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    if (asym > 1e-12 * std::max(1.0, m.max_abs()))
        throw std::invalid_argument("symmetric_eig: input not symmetric within tolerance");

    EigResult res;
    res.values.assign(n, 0.0);
    if (n <= detail::kJacobiLimit) {
        Matrix work = m;
        // symmetrize exactly so rotations preserve symmetry
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const double v = 0.5 * (work(i, j) + work(j, i));
                work(i, j) = v;
                work(j, i) = v;
            }
        Matrix vec;
        detail::jacobi_eig(work, vec);
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return work(a, a) > work(b, b); });
        res.vectors = Matrix(n, n);
        for (size_t j = 0; j < n; ++j) {
            res.values[j] = work(order[j], order[j]);
            for (size_t i = 0; i < n; ++i) res.vectors(i, j) = vec(i, order[j]);
        }
        return res;
    }

    pin_blas_threads();
    Matrix work = m;  // dsyevd overwrites with eigenvectors (ascending)
    std::vector<double> w(n, 0.0);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(n), work.data(),
                       static_cast<lapack_int>(n), w.data());
    if (info != 0) throw std::runtime_error("dsyevd failed with info=" + std::to_string(info));
    res.vectors = Matrix(n, n);
    for (size_t j = 0; j < n; ++j) {
        const size_t src = n - 1 - j;  // flip to descending
        res.values[j] = w[src];
        for (size_t i = 0; i < n; ++i) res.vectors(i, j) = work(i, src);
    }
    return res;
}

// Smallest `count` eigenpairs of a symmetric matrix, ascending. The input is
// consumed (dsyevr needs a writable copy and these matrices are large).
inline EigResult bottom_eigenpairs(Matrix&& m, size_t count) {
    if (m.rows() != m.cols()) throw std::invalid_argument("bottom_eigenpairs: not square");
    const size_t n = m.rows();
    if (count < 1 || count > n) throw std::invalid_argument("bottom_eigenpairs: bad count");
    pin_blas_threads();
    std::vector<double> w(n, 0.0);
    Matrix z(n, count);
    std::vector<lapack_int> isuppz(2 * count);
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_ROW_MAJOR, 'V', 'I', 'U', static_cast<lapack_int>(n), m.data(),
        static_cast<lapack_int>(n), 0.0, 0.0, 1, static_cast<lapack_int>(count), 0.0, &found,
        w.data(), z.data(), static_cast<lapack_int>(count), isuppz.data());
    if (info != 0) throw std::runtime_error("dsyevr failed with info=" + std::to_string(info));
    if (static_cast<size_t>(found) != count)
        throw std::runtime_error("dsyevr returned fewer eigenpairs than requested");
    EigResult res;
    res.values.assign(w.begin(), w.begin() + static_cast<long>(count));
    res.vectors = std::move(z);
    return res;
}

// Gauss-Jordan with partial pivoting; nullopt when a pivot falls below the
// floor (treated by callers as "centers nearly collinear").
inline std::optional<Matrix> gauss_jordan_inverse(Matrix m, double pivot_floor = 1e-10) {
    if (m.rows() != m.cols()) throw std::invalid_argument("gauss_jordan_inverse: not square");
    const size_t n = m.rows();
    Matrix inv = Matrix::identity(n);
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
        if (std::abs(m(pivot, col)) < pivot_floor) return std::nullopt;
        if (pivot != col)
            for (size_t j = 0; j < n; ++j) {
                std::swap(m(pivot, j), m(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        const double scale = 1.0 / m(col, col);
        for (size_t j = 0; j < n; ++j) {
            m(col, j) *= scale;
            inv(col, j) *= scale;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m(r, col);
            if (f == 0.0) continue;
            for (size_t j = 0; j < n; ++j) {
                m(r, j) -= f * m(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

}  // namespace sco
