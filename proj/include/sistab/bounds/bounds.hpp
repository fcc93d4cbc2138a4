#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sistab/exact/linalg.hpp"
#include "sistab/exact/rational.hpp"
#include "sistab/exact/simplex.hpp"
#include "sistab/model/model.hpp"

namespace sistab {

// Raised when a configured work limit is hit; callers surface it as an
// explicit inconclusive/overflow outcome, never as a silent wrong answer.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PrefixState {
    const ConstraintSystem* system = nullptr;
    std::vector<Integer> targetMargin;
    std::vector<Integer> fixed;           // sampled values for cells 0..i-1
    std::vector<Integer> residualMargin;  // targetMargin - sum fixed_k * column_k
};

inline PrefixState make_prefix_state(const ConstraintSystem& sys,
                                     std::vector<Integer> t,
                                     std::vector<Integer> fixed = {}) {
    if (t.size() != sys.matrix.rows)
        throw std::invalid_argument("prefix state: margin length != rows");
    if (fixed.size() > sys.matrix.cols)
        throw std::invalid_argument("prefix state: more fixed cells than columns");
    PrefixState st;
    st.system = &sys;
    st.residualMargin = t;
    st.targetMargin = std::move(t);
    for (std::size_t j = 0; j < fixed.size(); ++j) {
        if (fixed[j] < 0) throw std::invalid_argument("prefix state: negative fixed count");
        for (std::size_t i = 0; i < sys.matrix.rows; ++i)
            if (sys.matrix.at(i, j) != 0)
                st.residualMargin[i] -= fixed[j] * sys.matrix.at(i, j);
    }
    st.fixed = std::move(fixed);
    return st;
}

inline void prefix_push(PrefixState& st, const Integer& value) {
    const auto& A = st.system->matrix;
    std::size_t j = st.fixed.size();
    for (std::size_t i = 0; i < A.rows; ++i)
        if (A.at(i, j) != 0) st.residualMargin[i] -= value * A.at(i, j);
    st.fixed.push_back(value);
}

inline void prefix_pop(PrefixState& st) {
    const auto& A = st.system->matrix;
    std::size_t j = st.fixed.size() - 1;
    const Integer value = st.fixed.back();
    for (std::size_t i = 0; i < A.rows; ++i)
        if (A.at(i, j) != 0) st.residualMargin[i] += value * A.at(i, j);
    st.fixed.pop_back();
}

enum class BoundMethod { lp, ip, shuttle };

struct BoundInterval {
    bool feasible = false;  // lp/shuttle: relaxation nonempty; ip: integer point exists
    Rational lpLower, lpUpper;
    Integer intLower, intUpper;  // inward-rounded (lp/shuttle) or exact (ip)
    BoundMethod method = BoundMethod::lp;

    bool empty() const { return !feasible || intLower > intUpper; }
};

// Shared per-system solver. Precomputes, lazily for each step i, the suffix
// system over columns i..d-1: consistency certificates, a particular-solution
// transform, and an integer kernel basis. Each LP is then solved either
// directly on a row basis (few constraint rows) or through the dual of the
// kernel parameterization (few kernel directions), whichever basis is
// smaller. Results are memoized by (step, objective cell, residual margin);
// sequential sampling revisits the same residuals constantly.
struct BoundEngineConfig {
    BoundMethod method = BoundMethod::lp;
    int shuttleIterations = 1;
    long long ipNodeBudget = 100000;
};

class BoundEngine {
  public:
    using Config = BoundEngineConfig;

    explicit BoundEngine(const ConstraintSystem& sys, Config cfg = {})
        : sys_(&sys), cfg_(cfg), steps_(sys.matrix.cols) {}

    const ConstraintSystem& system() const { return *sys_; }
    const Config& config() const { return cfg_; }

    BoundInterval bounds(const PrefixState& state, std::size_t cell) {
        check_state(state, cell);
        switch (cfg_.method) {
            case BoundMethod::lp: return lp_cached(state, cell);
            case BoundMethod::ip: return ip_cached(state, cell);
            case BoundMethod::shuttle: return shuttle_uncached(state, cell);
        }
        throw std::logic_error("unreachable");
    }

    BoundInterval lp_only(const PrefixState& state, std::size_t cell) {
        check_state(state, cell);
        return lp_cached(state, cell);
    }

  private:
    template <class T>
    using SparseVec = std::vector<std::pair<std::size_t, T>>;

    struct StepData {
        std::size_t offset = 0, n = 0, rank = 0;
        std::vector<std::size_t> pivotCols, freeCols;  // suffix-local indices
        RatMatrix reduced;             // rank x n rref of the suffix matrix
        std::vector<SparseVec<Rational>> particular;  // pivot value = row . residual
        std::vector<SparseVec<Integer>> certificates;  // c with c' A_i = 0
        std::vector<std::size_t> rowBasis;             // independent original rows
        IntMatrix kernel;                              // n x k, integer columns
        RatMatrix kernelT;                             // k x n, prebuilt dual rows
        bool useDirect = false;
    };

    void check_state(const PrefixState& state, std::size_t cell) const {
        if (state.system != sys_) throw std::invalid_argument("engine/system mismatch");
        if (cell < state.fixed.size() || cell >= sys_->matrix.cols)
            throw std::invalid_argument("bounds: cell outside the unsampled suffix");
    }

    const StepData& step(std::size_t i) {
        if (!steps_[i]) steps_[i] = build_step(i);
        return *steps_[i];
    }

    std::unique_ptr<StepData> build_step(std::size_t i) const {
        const IntMatrix& A = sys_->matrix;
        const std::size_t r = A.rows, d = A.cols, n = d - i;
        auto sd = std::make_unique<StepData>();
        sd->offset = i;
        sd->n = n;

        // rref of [A_i | I]: rows with pivot inside A_i give the reduced system
        // and the particular-solution transform; rows with pivot in the I part
        // are exact consistency certificates (their A_i part is zero).
        RatMatrix M(r, n + r);
        for (std::size_t row = 0; row < r; ++row) {
            for (std::size_t j = 0; j < n; ++j) M.at(row, j) = Rational(A.at(row, i + j));
            M.at(row, n + row) = 1;
        }
        auto pivots = rref(M);
        std::size_t rank = 0;
        while (rank < pivots.size() && pivots[rank] < n) ++rank;
        sd->rank = rank;
        for (std::size_t k = 0; k < rank; ++k) sd->pivotCols.push_back(pivots[k]);
        {
            std::size_t p = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (p < rank && sd->pivotCols[p] == j) ++p;
                else sd->freeCols.push_back(j);
            }
        }
        sd->reduced = RatMatrix(rank, n);
        for (std::size_t k = 0; k < rank; ++k)
            for (std::size_t j = 0; j < n; ++j) sd->reduced.at(k, j) = M.at(k, j);
        sd->particular.resize(rank);
        for (std::size_t k = 0; k < rank; ++k)
            for (std::size_t j = 0; j < r; ++j)
                if (M.at(k, n + j) != 0) sd->particular[k].emplace_back(j, M.at(k, n + j));
        for (std::size_t row = rank; row < r; ++row) {
            bool nonzero = false;
            for (std::size_t j = n; j < n + r; ++j)
                if (M.at(row, j) != 0) { nonzero = true; break; }
            if (!nonzero) continue;
            Integer lcm = 1;
            for (std::size_t j = n; j < n + r; ++j)
                if (M.at(row, j) != 0)
                    lcm = boost::multiprecision::lcm(lcm, rat_den(M.at(row, j)));
            SparseVec<Integer> cert;
            for (std::size_t j = 0; j < r; ++j) {
                const Rational& v = M.at(row, n + j);
                if (v != 0) cert.emplace_back(j, rat_num(v) * (lcm / rat_den(v)));
            }
            sd->certificates.push_back(std::move(cert));
        }

        // kernel: one column per free variable, denominators cleared
        const std::size_t k = sd->freeCols.size();
        sd->kernel = IntMatrix(n, k);
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t f = sd->freeCols[c];
            Integer lcm = 1;
            for (std::size_t p = 0; p < rank; ++p)
                if (sd->reduced.at(p, f) != 0)
                    lcm = boost::multiprecision::lcm(lcm, rat_den(sd->reduced.at(p, f)));
            sd->kernel.at(f, c) = lcm;
            for (std::size_t p = 0; p < rank; ++p) {
                const Rational& v = sd->reduced.at(p, f);
                if (v != 0)
                    sd->kernel.at(sd->pivotCols[p], c) = -rat_num(v) * (lcm / rat_den(v));
            }
        }
        sd->kernelT = RatMatrix(k, n);
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t z = 0; z < k; ++z)
                sd->kernelT.at(z, c) = Rational(sd->kernel.at(c, z));

        // independent rows of A_i = pivot columns of its transpose
        {
            RatMatrix T(n, r);
            for (std::size_t row = 0; row < r; ++row)
                for (std::size_t j = 0; j < n; ++j) T.at(j, row) = Rational(A.at(row, i + j));
            sd->rowBasis = rref(T);
        }
        sd->useDirect = sd->rank <= k;
        return sd;
    }

    static std::string residual_key(const std::vector<Integer>& resid) {
        static const Integer lim = Integer(1) << 62;
        std::string key;
        key.reserve(resid.size() * 9);
        for (const auto& v : resid) {
            if (v > -lim && v < lim) {
                long long x = v.convert_to<long long>();
                key.append(reinterpret_cast<const char*>(&x), sizeof(x));
            } else {
                key += v.str();
            }
            key += ',';
        }
        return key;
    }

    BoundInterval lp_cached(const PrefixState& state, std::size_t cell) {
        std::string key = std::to_string(state.fixed.size()) + ":" +
                          std::to_string(cell) + ":" +
                          residual_key(state.residualMargin);
        auto it = lpCache_.find(key);
        if (it != lpCache_.end()) return it->second;
        BoundInterval res = lp_compute(state, cell);
        lpCache_.emplace(std::move(key), res);
        return res;
    }

    BoundInterval ip_cached(const PrefixState& state, std::size_t cell) {
        std::string key = std::to_string(state.fixed.size()) + ":" +
                          std::to_string(cell) + ":" +
                          residual_key(state.residualMargin);
        auto it = ipCache_.find(key);
        if (it != ipCache_.end()) return it->second;
        BoundInterval res = ip_compute(state, cell);
        ipCache_.emplace(std::move(key), res);
        return res;
    }

    BoundInterval lp_compute(const PrefixState& state, std::size_t cell) {
        const std::size_t i = state.fixed.size();
        const StepData& sd = step(i);
        BoundInterval out;
        out.method = BoundMethod::lp;

        for (const auto& cert : sd.certificates) {
            Integer dot = 0;
            for (const auto& [row, coef] : cert) dot += coef * state.residualMargin[row];
            if (dot != 0) return out;  // inconsistent margins: infeasible
        }

        const std::size_t j = cell - i;  // suffix-local objective coordinate
        std::optional<Rational> lo, hi;
        if (sd.useDirect) {
            solve_direct(sd, state.residualMargin, j, lo, hi);
        } else {
            solve_kernel_dual(sd, state.residualMargin, j, lo, hi);
        }
        if (!lo || !hi) return out;
        out.feasible = true;
        out.lpLower = *lo;
        out.lpUpper = *hi;
        out.intLower = rational_ceil(*lo);
        out.intUpper = rational_floor(*hi);
        return out;
    }

    void solve_direct(const StepData& sd, const std::vector<Integer>& resid,
                      std::size_t j, std::optional<Rational>& lo,
                      std::optional<Rational>& hi) const {
        const IntMatrix& A = sys_->matrix;
        const std::size_t m = sd.rowBasis.size(), n = sd.n;
        RatMatrix E(m, n);
        std::vector<Rational> b(m);
        for (std::size_t k = 0; k < m; ++k) {
            std::size_t row = sd.rowBasis[k];
            for (std::size_t c = 0; c < n; ++c)
                E.at(k, c) = Rational(A.at(row, sd.offset + c));
            b[k] = Rational(resid[row]);
        }
        std::vector<Rational> cost(n, Rational(0));
        cost[j] = 1;
        auto mn = detail::standard_form_simplex(E, b, cost);
        if (mn.status != LpStatus::optimal) return;  // bounded polytope: infeasible
        cost[j] = -1;
        auto mx = detail::standard_form_simplex(E, b, cost);
        if (mx.status != LpStatus::optimal) return;
        lo = mn.x[j];
        hi = mx.x[j];
    }

    // Feasible set in kernel coordinates: x = particular + K z >= 0. The LP
    // min c'z st K z >= -particular dualizes to a standard-form problem with
    // only k = dim ker rows; its optimal equality multipliers are z*.
    void solve_kernel_dual(const StepData& sd, const std::vector<Integer>& resid,
                           std::size_t j, std::optional<Rational>& lo,
                           std::optional<Rational>& hi) const {
        const std::size_t n = sd.n, k = sd.kernel.cols;
        std::vector<Rational> xp(n, Rational(0));
        for (std::size_t p = 0; p < sd.rank; ++p) {
            Rational v = 0;
            for (const auto& [row, coef] : sd.particular[p])
                if (resid[row] != 0) v += coef * Rational(resid[row]);
            xp[sd.pivotCols[p]] = v;
        }
        if (k == 0) {
            for (std::size_t c = 0; c < n; ++c)
                if (xp[c] < 0) return;
            lo = xp[j];
            hi = xp[j];
            return;
        }
        auto solve_one = [&](bool maximizeCell) -> std::optional<Rational> {
            std::vector<Rational> rhs(k);
            for (std::size_t z = 0; z < k; ++z) {
                Rational kc(sd.kernel.at(j, z));
                rhs[z] = maximizeCell ? -kc : kc;
            }
            auto res = detail::standard_form_simplex(sd.kernelT, rhs, xp);
            if (res.status != LpStatus::optimal) return std::nullopt;
            // strong duality: optimum of min c'z equals -xp'y*
            Rational inner = xp[j] - res.value;
            return maximizeCell ? xp[j] + res.value : inner;
        };
        // min direction infeasible iff the polytope is empty, in which case
        // the max direction is infeasible too; check both for symmetry.
        auto l = solve_one(false);
        if (!l) return;
        auto h = solve_one(true);
        if (!h) return;
        lo = *l;
        hi = *h;
    }

    // LP-based branch and bound over the suffix polytope: branch on the most
    // fractional witness coordinate, explore the better-bound child first,
    // depth-first; node budget is a hard error, not a silent fallback.
    BoundInterval ip_compute(const PrefixState& state, std::size_t cell) {
        BoundInterval relax = lp_compute(state, cell);
        BoundInterval out;
        out.method = BoundMethod::ip;
        if (!relax.feasible) return out;
        out.lpLower = relax.lpLower;
        out.lpUpper = relax.lpUpper;

        const std::size_t i = state.fixed.size();
        const StepData& sd = step(i);
        const std::size_t j = cell - i;
        long long nodes = 0;
        auto lowerOpt = branch_bound(sd, state.residualMargin, j, false, nodes);
        auto upperOpt = branch_bound(sd, state.residualMargin, j, true, nodes);
        if (!lowerOpt || !upperOpt) return out;  // integer-infeasible
        out.feasible = true;
        out.intLower = *lowerOpt;
        out.intUpper = *upperOpt;
        return out;
    }

    struct BnbNode {
        std::vector<Integer> lo;
        std::vector<std::optional<Integer>> hi;
    };

    // Solve the suffix LP with per-variable bounds via shifted variables and
    // slack rows for finite upper bounds. Returns witness in original coords.
    std::optional<std::pair<Rational, std::vector<Rational>>> node_lp(
        const StepData& sd, const std::vector<Integer>& resid, std::size_t j,
        bool maximize, const BnbNode& node) const {
        const IntMatrix& A = sys_->matrix;
        const std::size_t m = sd.rowBasis.size(), n = sd.n;
        std::vector<std::size_t> ubVars;
        for (std::size_t v = 0; v < n; ++v)
            if (node.hi[v]) ubVars.push_back(v);
        const std::size_t rows = m + ubVars.size(), cols = n + ubVars.size();
        RatMatrix E(rows, cols);
        std::vector<Rational> b(rows, Rational(0));
        for (std::size_t k = 0; k < m; ++k) {
            std::size_t row = sd.rowBasis[k];
            Rational shift = 0;
            for (std::size_t c = 0; c < n; ++c) {
                E.at(k, c) = Rational(A.at(row, sd.offset + c));
                if (node.lo[c] != 0) shift += E.at(k, c) * Rational(node.lo[c]);
            }
            b[k] = Rational(resid[row]) - shift;
        }
        for (std::size_t u = 0; u < ubVars.size(); ++u) {
            std::size_t v = ubVars[u];
            E.at(m + u, v) = 1;
            E.at(m + u, n + u) = 1;
            b[m + u] = Rational(*node.hi[v] - node.lo[v]);
        }
        std::vector<Rational> cost(cols, Rational(0));
        cost[j] = maximize ? -1 : 1;
        auto res = detail::standard_form_simplex(E, b, cost);
        if (res.status != LpStatus::optimal) return std::nullopt;
        std::vector<Rational> x(n);
        for (std::size_t v = 0; v < n; ++v) x[v] = res.x[v] + Rational(node.lo[v]);
        return std::make_pair(x[j], std::move(x));
    }

    std::optional<Integer> branch_bound(const StepData& sd,
                                        const std::vector<Integer>& resid,
                                        std::size_t j, bool maximize,
                                        long long& nodes) const {
        const std::size_t n = sd.n;
        std::optional<Integer> incumbent;
        std::vector<BnbNode> stack;
        stack.push_back({std::vector<Integer>(n, Integer(0)),
                         std::vector<std::optional<Integer>>(n)});
        while (!stack.empty()) {
            if (++nodes > cfg_.ipNodeBudget)
                throw BudgetExceeded("integer bound search exceeded node budget");
            BnbNode node = std::move(stack.back());
            stack.pop_back();
            auto lp = node_lp(sd, resid, j, maximize, node);
            if (!lp) continue;
            const Rational& bound = lp->first;
            if (incumbent) {
                if (!maximize && rational_ceil(bound) >= *incumbent) continue;
                if (maximize && rational_floor(bound) <= *incumbent) continue;
            }
            // most fractional coordinate; -1 when witness is integral
            std::ptrdiff_t branchVar = -1;
            Rational bestFrac;  // distance from 1/2, smaller is more fractional
            for (std::size_t v = 0; v < n; ++v) {
                const Rational& x = lp->second[v];
                Rational frac = x - Rational(rational_floor(x));
                if (frac == 0) continue;
                Rational dist = frac - Rational(1, 2);
                if (dist < 0) dist = -dist;
                if (branchVar < 0 || dist < bestFrac) {
                    branchVar = static_cast<std::ptrdiff_t>(v);
                    bestFrac = dist;
                }
            }
            if (branchVar < 0) {
                Integer val = rat_num(lp->first);
                if (!incumbent || (!maximize && val < *incumbent) ||
                    (maximize && val > *incumbent))
                    incumbent = val;
                continue;
            }
            std::size_t v = static_cast<std::size_t>(branchVar);
            Integer fl = rational_floor(lp->second[v]);
            BnbNode down = node, up = node;
            down.hi[v] = fl;
            up.lo[v] = fl + 1;
            // depth-first, better-bound child on top of the stack
            if (!maximize) {
                stack.push_back(std::move(up));
                stack.push_back(std::move(down));
            } else {
                stack.push_back(std::move(down));
                stack.push_back(std::move(up));
            }
        }
        return incumbent;
    }

    // Iterative integer propagation through the constraint rows. Intervals
    // may stay wider than the true integer bounds; they never cut them.
    BoundInterval shuttle_uncached(const PrefixState& state, std::size_t cell) {
        const IntMatrix& A = sys_->matrix;
        const std::size_t i = state.fixed.size(), n = A.cols - i;
        BoundInterval out;
        out.method = BoundMethod::shuttle;
        for (std::size_t row = 0; row < A.rows; ++row) {
            bool rowTouches = false;
            for (std::size_t c = 0; c < n; ++c)
                if (A.at(row, i + c) != 0) { rowTouches = true; break; }
            if (!rowTouches && state.residualMargin[row] != 0) return out;
            if (state.residualMargin[row] < 0) return out;
        }
        std::vector<Integer> lo(n, Integer(0)), hi(n);
        std::vector<bool> hiSet(n, false);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t row = 0; row < A.rows; ++row) {
                const Integer& a = A.at(row, i + c);
                if (a == 0) continue;
                Integer cap = state.residualMargin[row] / a;
                if (!hiSet[c] || cap < hi[c]) { hi[c] = cap; hiSet[c] = true; }
            }
            if (!hiSet[c] || hi[c] < 0) return out;
        }
        for (int iter = 0; iter < cfg_.shuttleIterations; ++iter) {
            for (std::size_t row = 0; row < A.rows; ++row) {
                Integer loSum = 0, hiSum = 0;
                for (std::size_t c = 0; c < n; ++c) {
                    const Integer& a = A.at(row, i + c);
                    if (a == 0) continue;
                    loSum += a * lo[c];
                    hiSum += a * hi[c];
                }
                for (std::size_t c = 0; c < n; ++c) {
                    const Integer& a = A.at(row, i + c);
                    if (a == 0) continue;
                    // propagation proves emptiness for the whole state, not
                    // just the queried cell, so bail out on any crossing
                    Integer slackUp = state.residualMargin[row] - (loSum - a * lo[c]);
                    if (slackUp < 0) return out;
                    Integer up = slackUp / a;
                    if (up < hi[c]) hi[c] = up;
                    Integer slackLo = state.residualMargin[row] - (hiSum - a * hi[c]);
                    if (slackLo > 0) {
                        Integer dn = (slackLo + a - 1) / a;
                        if (dn > lo[c]) lo[c] = dn;
                    }
                    if (hi[c] < lo[c]) return out;
                }
            }
        }
        const std::size_t j = cell - i;
        out.feasible = true;
        out.intLower = lo[j];
        out.intUpper = hi[j];
        out.lpLower = Rational(lo[j]);
        out.lpUpper = Rational(hi[j]);
        return out;
    }

    const ConstraintSystem* sys_;
    Config cfg_;
    std::vector<std::unique_ptr<StepData>> steps_;
    std::unordered_map<std::string, BoundInterval> lpCache_, ipCache_;
};

inline BoundInterval lp_bounds(const PrefixState& state, std::size_t cell) {
    BoundEngine e(*state.system, {BoundMethod::lp});
    return e.bounds(state, cell);
}

inline BoundInterval ip_bounds(const PrefixState& state, std::size_t cell,
                               long long nodeBudget = 100000) {
    BoundEngine e(*state.system, {BoundMethod::ip, 1, nodeBudget});
    return e.bounds(state, cell);
}

inline BoundInterval shuttle_bounds(const PrefixState& state, std::size_t cell,
                                    int iterations) {
    if (iterations < 1) throw std::invalid_argument("shuttle needs >= 1 iteration");
    BoundEngine e(*state.system, {BoundMethod::shuttle, iterations});
    return e.bounds(state, cell);
}

// All tables with margin t, in lexicographic cell order. LP pruning keeps the
// search inside the feasible tree; `budget` caps the number of tables.
inline std::vector<TableVector> enumerate_fiber(const ConstraintSystem& sys,
                                                const std::vector<Integer>& t,
                                                std::size_t budget,
                                                BoundEngine* shared = nullptr) {
    BoundEngine local(sys, {BoundMethod::lp});
    BoundEngine& eng = shared ? *shared : local;
    std::vector<TableVector> out;
    PrefixState st = make_prefix_state(sys, t);
    const std::size_t d = sys.matrix.cols;

    auto dfs = [&](auto&& self) -> void {
        if (st.fixed.size() == d) {
            // engines may overcover; only an exactly consumed margin counts
            for (const auto& v : st.residualMargin)
                if (v != 0) return;
            if (out.size() == budget)
                throw BudgetExceeded("fiber enumeration exceeded table budget");
            out.push_back({st.fixed, st.targetMargin});
            return;
        }
        BoundInterval b = eng.bounds(st, st.fixed.size());
        if (b.empty()) return;
        for (Integer v = b.intLower; v <= b.intUpper; ++v) {
            prefix_push(st, v);
            self(self);
            prefix_pop(st);
        }
    };
    dfs(dfs);
    return out;
}

struct SequentialIntervalReport {
    bool holds = false;
    std::size_t fiberSize = 0;
    // first violation, when any: prefix whose next-cell values have a gap
    std::size_t failDepth = 0;
    std::vector<Integer> failPrefix;
    std::vector<Integer> observedValues;
};

// Brute-force check of the gap-free-interval property at every reachable
// prefix of every depth, against the fully enumerated fiber.
inline SequentialIntervalReport verify_sequential_interval(
    const ConstraintSystem& sys, const std::vector<Integer>& t,
    std::size_t budget = 1000000) {
    SequentialIntervalReport rep;
    auto fiber = enumerate_fiber(sys, t, budget);
    rep.fiberSize = fiber.size();
    const std::size_t d = sys.matrix.cols;
    for (std::size_t depth = 0; depth < d; ++depth) {
        std::map<std::vector<Integer>, std::vector<Integer>> groups;
        for (const auto& tab : fiber) {
            std::vector<Integer> prefix(tab.counts.begin(), tab.counts.begin() + depth);
            groups[std::move(prefix)].push_back(tab.counts[depth]);
        }
        for (auto& [prefix, values] : groups) {
            Integer mn = values[0], mx = values[0];
            std::map<Integer, bool> seen;
            for (const auto& v : values) {
                seen[v] = true;
                if (v < mn) mn = v;
                if (v > mx) mx = v;
            }
            for (Integer v = mn; v <= mx; ++v) {
                if (!seen.count(v)) {
                    rep.holds = false;
                    rep.failDepth = depth;
                    rep.failPrefix = prefix;
                    for (auto& [val, flag] : seen) rep.observedValues.push_back(val);
                    return rep;
                }
            }
        }
    }
    rep.holds = true;
    return rep;
}

}  // namespace sistab
