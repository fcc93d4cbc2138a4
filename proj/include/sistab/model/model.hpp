#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sistab/exact/linalg.hpp"
#include "sistab/exact/rational.hpp"
#include "sistab/exact/simplex.hpp"

namespace sistab {

// Position of one table cell: coordinate tuple plus its rank in the active
// cell ordering. Cells are laid out row-major over the declared factors, so
// the last factor's level varies fastest.
struct CellIndex {
    std::vector<int> coordinates;
    std::size_t flatIndex = 0;
};

struct LoglinearModelSpec {
    std::vector<std::pair<std::string, int>> factors;  // (name, cardinality)
    std::vector<std::vector<std::size_t>> marginSets;  // factor index subsets to fix
    // Explicit constraint rows for non-product structures (allele counting,
    // routing). Passed through verbatim when present.
    std::optional<IntMatrix> weightMatrixOverride;
    std::vector<std::string> cellLabels;  // required when override sets its own d
};

struct ConstraintSystem {
    IntMatrix matrix;                     // r x d, entries >= 0
    std::vector<std::string> cellLabels;  // length d
    std::vector<std::size_t> order;       // column j holds original cell order[j]
};

struct TableVector {
    std::vector<Integer> counts;
    std::vector<Integer> margin;
};

namespace detail {

// The fiber {n >= 0 : An = t} is bounded iff 1 lies in the cone of the rows:
// some y >= 0 has y'A >= 1 componentwise. A subset of rows summing to a
// strictly positive vector is the integral special case; the LP test accepts
// every such system and certifies boundedness either way.
inline bool positivity_certificate(const IntMatrix& A) {
    const std::size_t r = A.rows, d = A.cols;
    if (r == 0 || d == 0) return false;
    // feasibility of A'y - s = 1, y >= 0, s >= 0
    RatMatrix M(d, r + d);
    std::vector<Rational> rhs(d, Rational(1));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < r; ++i) M.at(j, i) = Rational(A.at(i, j));
        M.at(j, r + j) = -1;
    }
    std::vector<Rational> c(r + d, Rational(0));
    return standard_form_simplex(M, rhs, c).status == LpStatus::optimal;
}

}  // namespace detail

inline std::size_t cell_count(const LoglinearModelSpec& spec) {
    std::size_t d = 1;
    for (const auto& [name, card] : spec.factors) d *= static_cast<std::size_t>(card);
    return d;
}

inline std::vector<int> cell_coordinates(const LoglinearModelSpec& spec, std::size_t flat) {
    std::vector<int> coord(spec.factors.size());
    for (std::size_t k = spec.factors.size(); k-- > 0;) {
        int card = spec.factors[k].second;
        coord[k] = static_cast<int>(flat % card);
        flat /= card;
    }
    return coord;
}

inline ConstraintSystem build_constraint_system(const LoglinearModelSpec& spec) {
    ConstraintSystem sys;
    if (spec.weightMatrixOverride) {
        sys.matrix = *spec.weightMatrixOverride;
        for (const auto& v : sys.matrix.a)
            if (v < 0) throw std::invalid_argument("override with negative entries");
        if (!spec.cellLabels.empty()) {
            if (spec.cellLabels.size() != sys.matrix.cols)
                throw std::invalid_argument("cell label count != override columns");
            sys.cellLabels = spec.cellLabels;
        } else {
            for (std::size_t j = 0; j < sys.matrix.cols; ++j)
                sys.cellLabels.push_back("c" + std::to_string(j));
        }
    } else {
        if (spec.marginSets.empty())
            throw std::invalid_argument("empty margin list without override");
        if (spec.factors.empty()) throw std::invalid_argument("no factors declared");
        const std::size_t d = cell_count(spec);
        std::vector<std::vector<int>> coords(d);
        for (std::size_t f = 0; f < d; ++f) coords[f] = cell_coordinates(spec, f);

        std::vector<IntMatrix> groups;
        for (const auto& rawSet : spec.marginSets) {
            // Canonical margin-cell coordinates: the set's factors in declared
            // order, levels lexicographic with the last varying fastest.
            std::vector<std::size_t> set = rawSet;
            std::sort(set.begin(), set.end());
            for (std::size_t f : set)
                if (f >= spec.factors.size())
                    throw std::invalid_argument("margin set names unknown factor");
            std::size_t nrows = 1;
            for (std::size_t f : set) nrows *= spec.factors[f].second;
            IntMatrix g(nrows, d);
            for (std::size_t row = 0; row < nrows; ++row) {
                std::vector<int> lev(set.size());
                std::size_t rem = row;
                for (std::size_t k = set.size(); k-- > 0;) {
                    int card = spec.factors[set[k]].second;
                    lev[k] = static_cast<int>(rem % card);
                    rem /= card;
                }
                for (std::size_t cell = 0; cell < d; ++cell) {
                    bool match = true;
                    for (std::size_t k = 0; k < set.size(); ++k)
                        if (coords[cell][set[k]] != lev[k]) { match = false; break; }
                    if (match) g.at(row, cell) = 1;
                }
            }
            groups.push_back(std::move(g));
        }
        std::size_t r = 0;
        for (const auto& g : groups) r += g.rows;
        sys.matrix = IntMatrix(r, d);
        std::size_t at = 0;
        for (const auto& g : groups) {
            std::copy(g.a.begin(), g.a.end(), sys.matrix.a.begin() + at * d);
            at += g.rows;
        }
        for (std::size_t cell = 0; cell < d; ++cell) {
            std::string label;
            for (std::size_t k = 0; k < coords[cell].size(); ++k) {
                if (k) label += '.';
                label += std::to_string(coords[cell][k]);
            }
            sys.cellLabels.push_back(label);
        }
    }
    sys.order.resize(sys.matrix.cols);
    std::iota(sys.order.begin(), sys.order.end(), 0);
    if (!detail::positivity_certificate(sys.matrix))
        throw std::invalid_argument("no row combination bounds the table (unbounded fiber)");
    return sys;
}

inline std::vector<Integer> compute_margin(const ConstraintSystem& sys,
                                           const TableVector& table) {
    if (table.counts.size() != sys.matrix.cols)
        throw std::invalid_argument("compute_margin: dimension mismatch");
    std::vector<Integer> t(sys.matrix.rows, Integer(0));
    for (std::size_t i = 0; i < sys.matrix.rows; ++i)
        for (std::size_t j = 0; j < sys.matrix.cols; ++j)
            if (sys.matrix.at(i, j) != 0)
                t[i] += sys.matrix.at(i, j) * table.counts[j];
    return t;
}

// New column j holds old column perm[j]; labels and the order bookkeeping
// follow. Margins are untouched (rows are not permuted).
inline ConstraintSystem reorder_cells(const ConstraintSystem& sys,
                                      const std::vector<std::size_t>& perm) {
    const std::size_t d = sys.matrix.cols;
    if (perm.size() != d) throw std::invalid_argument("reorder_cells: size mismatch");
    std::vector<bool> seen(d, false);
    for (std::size_t p : perm) {
        if (p >= d || seen[p]) throw std::invalid_argument("reorder_cells: not a permutation");
        seen[p] = true;
    }
    ConstraintSystem out;
    out.matrix = IntMatrix(sys.matrix.rows, d);
    out.cellLabels.resize(d);
    out.order.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < sys.matrix.rows; ++i)
            out.matrix.at(i, j) = sys.matrix.at(i, perm[j]);
        out.cellLabels[j] = sys.cellLabels[perm[j]];
        out.order[j] = sys.order[perm[j]];
    }
    return out;
}

// Lower-triangular genotype cells (i,j), j <= i, stored row-major:
// (1,1),(2,1),(2,2),(3,1),... The returned permutation re-lists them
// homozygotes first, then each sub-diagonal column top to bottom.
inline std::vector<std::size_t> genotype_diagonal_first_order(int numAlleles) {
    if (numAlleles < 1) throw std::invalid_argument("need at least one allele");
    auto base = [](int i, int j) {  // 1-based pair -> row-major position
        return static_cast<std::size_t>(i * (i - 1) / 2 + (j - 1));
    };
    std::vector<std::size_t> perm;
    for (int i = 1; i <= numAlleles; ++i) perm.push_back(base(i, i));
    for (int j = 1; j < numAlleles; ++j)
        for (int i = j + 1; i <= numAlleles; ++i) perm.push_back(base(i, j));
    return perm;
}

// Allele-count constraint rows for a lower-triangular genotype table:
// row a counts allele a's copies, 2 in cell (a,a), 1 in (i,j) when a is i or j.
inline IntMatrix genotype_allele_matrix(int numAlleles) {
    const int k = numAlleles;
    const std::size_t d = static_cast<std::size_t>(k) * (k + 1) / 2;
    IntMatrix A(static_cast<std::size_t>(k), d);
    std::size_t col = 0;
    for (int i = 1; i <= k; ++i)
        for (int j = 1; j <= i; ++j, ++col) {
            if (i == j) A.at(i - 1, col) = 2;
            else {
                A.at(i - 1, col) = 1;
                A.at(j - 1, col) = 1;
            }
        }
    return A;
}

inline std::vector<std::string> genotype_cell_labels(int numAlleles) {
    std::vector<std::string> labels;
    for (int i = 1; i <= numAlleles; ++i)
        for (int j = 1; j <= i; ++j)
            labels.push_back("g" + std::to_string(i) + std::to_string(j));
    return labels;
}

}  // namespace sistab
