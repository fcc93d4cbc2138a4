#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sistab/exact/rational.hpp"

namespace sistab {

template <class T>
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<T> a;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

    T& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const T& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = T(1);
        return m;
    }
};

using IntMatrix = Matrix<Integer>;
using RatMatrix = Matrix<Rational>;

inline RatMatrix to_rational(const IntMatrix& m) {
    RatMatrix r(m.rows, m.cols);
    for (std::size_t i = 0; i < m.a.size(); ++i) r.a[i] = Rational(m.a[i]);
    return r;
}

// In-place reduced row echelon form; returns the pivot column of each pivot row.
inline std::vector<std::size_t> rref(RatMatrix& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
        std::size_t pr = r;
        while (pr < m.rows && m.at(pr, c) == 0) ++pr;
        if (pr == m.rows) continue;
        if (pr != r)
            for (std::size_t j = 0; j < m.cols; ++j) std::swap(m.at(pr, j), m.at(r, j));
        Rational pv = m.at(r, c);
        for (std::size_t j = c; j < m.cols; ++j) m.at(r, j) /= pv;
        for (std::size_t i = 0; i < m.rows; ++i) {
            if (i == r || m.at(i, c) == 0) continue;
            Rational f = m.at(i, c);
            for (std::size_t j = c; j < m.cols; ++j) m.at(i, j) -= f * m.at(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

inline std::size_t exact_rank(const IntMatrix& m) {
    RatMatrix q = to_rational(m);
    return rref(q).size();
}

// Lattice basis of {m in Z^d : A m = 0} via column-style Hermite reduction:
// column operations (tracked in a unimodular U) sweep A to column echelon form;
// the columns of U over the vanished columns of A generate the full integer
// kernel, not just a finite-index sublattice.
inline std::vector<std::vector<Integer>> integer_kernel_basis(const IntMatrix& A) {
    const std::size_t r = A.rows, d = A.cols;
    IntMatrix W = A;
    IntMatrix U = IntMatrix::identity(d);

    auto col_swap = [&](std::size_t j, std::size_t k) {
        for (std::size_t i = 0; i < r; ++i) std::swap(W.at(i, j), W.at(i, k));
        for (std::size_t i = 0; i < d; ++i) std::swap(U.at(i, j), U.at(i, k));
    };
    // col_j -= q * col_k
    auto col_axpy = [&](std::size_t j, std::size_t k, const Integer& q) {
        if (q == 0) return;
        for (std::size_t i = 0; i < r; ++i) W.at(i, j) -= q * W.at(i, k);
        for (std::size_t i = 0; i < d; ++i) U.at(i, j) -= q * U.at(i, k);
    };
    auto col_negate = [&](std::size_t j) {
        for (std::size_t i = 0; i < r; ++i) W.at(i, j) = -W.at(i, j);
        for (std::size_t i = 0; i < d; ++i) U.at(i, j) = -U.at(i, j);
    };

    std::size_t lead = 0;  // next column position to fix
    for (std::size_t row = 0; row < r && lead < d; ++row) {
        // Euclid across columns lead..d-1 until at most one nonzero remains in this row.
        while (true) {
            std::size_t jmin = d;
            for (std::size_t j = lead; j < d; ++j)
                if (W.at(row, j) != 0 &&
                    (jmin == d || abs(W.at(row, j)) < abs(W.at(row, jmin))))
                    jmin = j;
            if (jmin == d) break;  // row is zero over the working columns
            bool others = false;
            for (std::size_t j = lead; j < d; ++j) {
                if (j == jmin || W.at(row, j) == 0) continue;
                Integer q = W.at(row, j) / W.at(row, jmin);
                col_axpy(j, jmin, q);
                if (W.at(row, j) != 0) others = true;
            }
            if (!others) {
                if (W.at(row, jmin) < 0) col_negate(jmin);
                col_swap(lead, jmin);
                ++lead;
                break;
            }
        }
    }

    std::vector<std::vector<Integer>> basis;
    for (std::size_t j = lead; j < d; ++j) {
        std::vector<Integer> v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = U.at(i, j);
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace sistab
