#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sistab/exact/linalg.hpp"
#include "sistab/exact/rational.hpp"

namespace sistab {

enum class LpSense { minimize, maximize };
enum class LpStatus { optimal, infeasible, unbounded };

// min/max of one coordinate over {x : Ax = b, x >= 0}.
struct LinearProgram {
    RatMatrix equalityMatrix;
    std::vector<Rational> rhs;
    std::size_t objectiveIndex = 0;
    LpSense sense = LpSense::minimize;
};

struct OptimumReport {
    LpStatus status = LpStatus::infeasible;
    Rational value;
    std::vector<Rational> witness;
};

namespace detail {

struct SimplexResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<Rational> x;      // primal solution, length n
    Rational value;               // c'x
    std::vector<Rational> duals;  // multipliers of the equality rows, length m
};

// Dense two-phase tableau simplex, Bland's rule, exact rationals.
// Minimizes c'x subject to Ax = b, x >= 0. Deterministic on all inputs and
// terminating (Bland), per the anti-cycling requirement.
class StandardSimplex {
  public:
    StandardSimplex(const RatMatrix& A, const std::vector<Rational>& b,
                    const std::vector<Rational>& c)
        : m_(A.rows), n_(A.cols), cost_(c) {
        if (b.size() != m_ || c.size() != n_)
            throw std::invalid_argument("simplex: dimension mismatch");
        tab_ = RatMatrix(m_, n_ + m_ + 1);
        rowNegated_.assign(m_, false);
        active_.assign(m_, true);
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            bool neg = b[i] < 0;
            rowNegated_[i] = neg;
            for (std::size_t j = 0; j < n_; ++j)
                tab_.at(i, j) = neg ? -A.at(i, j) : A.at(i, j);
            tab_.at(i, n_ + i) = 1;  // artificial
            tab_.at(i, n_ + m_) = neg ? -b[i] : b[i];
            basis_[i] = n_ + i;
        }
    }

    SimplexResult run() {
        SimplexResult res;
        if (!phase1()) {
            res.status = LpStatus::infeasible;
            return res;
        }
        if (!phase2()) {
            res.status = LpStatus::unbounded;
            return res;
        }
        res.status = LpStatus::optimal;
        res.x.assign(n_, Rational(0));
        for (std::size_t i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] < n_) res.x[basis_[i]] = rhs(i);
        res.value = 0;
        for (std::size_t j = 0; j < n_; ++j)
            if (res.x[j] != 0) res.value += cost_[j] * res.x[j];
        // y' = c_B' B^{-1}; B^{-1} sits in the artificial columns. A dropped
        // (redundant) row keeps multiplier 0.
        res.duals.assign(m_, Rational(0));
        for (std::size_t k = 0; k < m_; ++k) {
            Rational y = 0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (!active_[i] || basis_[i] >= n_) continue;
                if (tab_.at(i, n_ + k) != 0) y += cost_[basis_[i]] * tab_.at(i, n_ + k);
            }
            res.duals[k] = rowNegated_[k] ? -y : y;
        }
        return res;
    }

  private:
    Rational& rhs(std::size_t i) { return tab_.at(i, n_ + m_); }

    void pivot(std::size_t pr, std::size_t pc) {
        Rational pv = tab_.at(pr, pc);
        for (std::size_t j = 0; j <= n_ + m_; ++j) tab_.at(pr, j) /= pv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == pr || !active_[i] || tab_.at(i, pc) == 0) continue;
            Rational f = tab_.at(i, pc);
            for (std::size_t j = 0; j <= n_ + m_; ++j)
                tab_.at(i, j) -= f * tab_.at(pr, j);
        }
        basis_[pr] = pc;
    }

    // Reduced-cost row maintained under pivots; rebuilt once per phase.
    template <class CostFn>
    void rebuild_obj_row(CostFn cv) {
        objRow_.assign(n_ + m_ + 1, Rational(0));
        for (std::size_t j = 0; j < n_ + m_; ++j) objRow_[j] = cv(j);
        for (std::size_t i = 0; i < m_; ++i) {
            if (!active_[i]) continue;
            Rational cb = cv(basis_[i]);
            if (cb == 0) continue;
            for (std::size_t j = 0; j <= n_ + m_; ++j)
                if (tab_.at(i, j) != 0) objRow_[j] -= cb * tab_.at(i, j);
        }
    }

    // Bland: entering = lowest eligible index with negative reduced cost;
    // leaving = min ratio, ties by lowest basis variable index.
    bool iterate(bool artificialsEligible) {
        while (true) {
            std::size_t enter = n_ + m_;
            std::size_t limit = artificialsEligible ? n_ + m_ : n_;
            for (std::size_t j = 0; j < limit; ++j) {
                if (objRow_[j] < 0) { enter = j; break; }
            }
            if (enter == n_ + m_) return true;  // optimal
            std::size_t leave = m_;
            Rational best;
            for (std::size_t i = 0; i < m_; ++i) {
                if (!active_[i] || tab_.at(i, enter) <= 0) continue;
                Rational ratio = rhs(i) / tab_.at(i, enter);
                if (leave == m_ || ratio < best ||
                    (ratio == best && basis_[i] < basis_[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m_) return false;  // unbounded direction
            pivot(leave, enter);
            Rational f = objRow_[enter];
            if (f != 0)
                for (std::size_t j = 0; j <= n_ + m_; ++j)
                    if (tab_.at(leave, j) != 0) objRow_[j] -= f * tab_.at(leave, j);
        }
    }

    bool phase1() {
        rebuild_obj_row([&](std::size_t j) { return Rational(j >= n_ ? 1 : 0); });
        iterate(false);  // never unbounded: objective >= 0
        Rational obj = 0;
        for (std::size_t i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] >= n_) obj += rhs(i);
        if (obj != 0) return false;
        // Drive artificials out of the basis; an all-zero row is redundant.
        for (std::size_t i = 0; i < m_; ++i) {
            if (!active_[i] || basis_[i] < n_) continue;
            std::size_t j = 0;
            while (j < n_ && tab_.at(i, j) == 0) ++j;
            if (j < n_) pivot(i, j);
            else active_[i] = false;
        }
        return true;
    }

    bool phase2() {
        rebuild_obj_row([&](std::size_t j) { return j < n_ ? cost_[j] : Rational(0); });
        return iterate(false);
    }

    std::size_t m_, n_;
    std::vector<Rational> cost_;
    RatMatrix tab_;
    std::vector<Rational> objRow_;
    std::vector<std::size_t> basis_;
    std::vector<bool> rowNegated_, active_;
};

inline SimplexResult standard_form_simplex(const RatMatrix& A,
                                           const std::vector<Rational>& b,
                                           const std::vector<Rational>& c) {
    return StandardSimplex(A, b, c).run();
}

}  // namespace detail

inline OptimumReport simplex_solve(const LinearProgram& lp) {
    const auto& A = lp.equalityMatrix;
    if (lp.rhs.size() != A.rows) throw std::invalid_argument("simplex_solve: rhs size");
    if (lp.objectiveIndex >= A.cols)
        throw std::invalid_argument("simplex_solve: objective index out of range");
    std::vector<Rational> c(A.cols, Rational(0));
    c[lp.objectiveIndex] = lp.sense == LpSense::minimize ? 1 : -1;
    auto res = detail::standard_form_simplex(A, lp.rhs, c);
    OptimumReport rep;
    rep.status = res.status;
    if (res.status != LpStatus::optimal) return rep;
    rep.witness = std::move(res.x);
    rep.value = rep.witness[lp.objectiveIndex];
    // Exactness contract: the witness satisfies every equality with zero residual.
    for (std::size_t i = 0; i < A.rows; ++i) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < A.cols; ++j)
            if (rep.witness[j] != 0) lhs += A.at(i, j) * rep.witness[j];
        if (lhs != lp.rhs[i]) throw std::logic_error("simplex_solve: inexact witness");
    }
    return rep;
}

}  // namespace sistab
