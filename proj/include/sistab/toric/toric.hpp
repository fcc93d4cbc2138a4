#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sistab/bounds/bounds.hpp"
#include "sistab/exact/linalg.hpp"
#include "sistab/model/model.hpp"

// Binomial computational algebra for margin matrices: term orders, a
// Buchberger engine restricted to pure-difference binomials, saturation and
// ideal quotient through auxiliary-variable elimination, toric ideals, and
// the certificate scans that decide when sequential cell supports are
// gap-free intervals and when rounded LP bounds are already integral.

namespace sistab {

struct Monomial {
    std::vector<int> exponents;  // entries >= 0

    std::size_t size() const { return exponents.size(); }
    int degree() const {
        return std::accumulate(exponents.begin(), exponents.end(), 0);
    }
    bool is_one() const {
        return std::all_of(exponents.begin(), exponents.end(),
                           [](int e) { return e == 0; });
    }
    bool operator==(const Monomial& o) const { return exponents == o.exponents; }
};

enum class OrderKind { lex, grevlex };

// variableOrder[0] is the most significant variable. Lex scans that list and
// the larger exponent at the first difference wins. Grevlex compares total
// degree, then scans from the least significant end where the smaller
// exponent wins.
struct TermOrder {
    OrderKind kind = OrderKind::lex;
    std::vector<std::size_t> variableOrder;

    std::size_t size() const { return variableOrder.size(); }

    bool greater(const Monomial& a, const Monomial& b) const {
        return greater_raw(a.exponents, b.exponents, 0);
    }

    // offset shifts variable indices; exponent vectors may carry a prefix of
    // auxiliary coordinates that this comparison must ignore.
    bool greater_raw(const std::vector<int>& a, const std::vector<int>& b,
                     std::size_t offset) const {
        if (kind == OrderKind::lex) {
            for (std::size_t k = 0; k < variableOrder.size(); ++k) {
                const int av = a[offset + variableOrder[k]];
                const int bv = b[offset + variableOrder[k]];
                if (av != bv) return av > bv;
            }
            return false;
        }
        int da = 0, db = 0;
        for (std::size_t k = 0; k < variableOrder.size(); ++k) {
            da += a[offset + k];
            db += b[offset + k];
        }
        if (da != db) return da > db;
        for (std::size_t k = variableOrder.size(); k-- > 0;) {
            const int av = a[offset + variableOrder[k]];
            const int bv = b[offset + variableOrder[k]];
            if (av != bv) return av < bv;
        }
        return false;
    }

    bool operator==(const TermOrder& o) const {
        return kind == o.kind && variableOrder == o.variableOrder;
    }
};

inline TermOrder lex_order(std::size_t d) {
    TermOrder o;
    o.kind = OrderKind::lex;
    o.variableOrder.resize(d);
    std::iota(o.variableOrder.begin(), o.variableOrder.end(), std::size_t{0});
    return o;
}

inline TermOrder grevlex_order(std::size_t d) {
    TermOrder o = lex_order(d);
    o.kind = OrderKind::grevlex;
    return o;
}

// Grevlex with precedence x_{d-1} > ... > x_0, the order the upper-bound
// certificate scans use.
inline TermOrder reversed_grevlex_order(std::size_t d) {
    TermOrder o = grevlex_order(d);
    std::reverse(o.variableOrder.begin(), o.variableOrder.end());
    return o;
}

// Pure difference x^{m+} - x^{m-}. Inside a GroebnerBasis the positive part
// is the lead monomial under the basis order.
struct Binomial {
    Monomial positivePart, negativePart;

    bool operator==(const Binomial& o) const {
        return positivePart == o.positivePart && negativePart == o.negativePart;
    }
};

inline bool is_zero(const Binomial& b) {
    return b.positivePart == b.negativePart;
}

struct GroebnerBasis {
    std::vector<Binomial> elements;
    TermOrder order;
    bool reduced = false;
};

struct MoveSet {
    std::vector<std::vector<Integer>> moves;
};

struct PositivitySupport {
    std::vector<std::size_t> indices;  // sorted cells with positive LP minimum
};

struct BuchbergerLimits {
    std::size_t pairBudget = 200000;  // S-pairs processed before giving up
    int degreeCap = 256;              // max total degree of any stored lead
};

enum class CheckOutcome { pass, fail, inconclusive };

inline constexpr std::size_t kNoWitness = std::numeric_limits<std::size_t>::max();

namespace detail {

using Expo = std::vector<int>;

// support bits of the first 64 variables, a cheap divisibility prescreen
inline std::uint64_t expo_mask(const Expo& e) {
    std::uint64_t m = 0;
    const std::size_t n = std::min<std::size_t>(e.size(), 64);
    for (std::size_t i = 0; i < n; ++i)
        if (e[i] > 0) m |= std::uint64_t{1} << i;
    return m;
}

// lead/trail exponent vectors, lead strictly greater under the active order
struct Elem {
    Expo lead, trail;
    std::uint64_t leadMask = 0;

    Elem() = default;
    Elem(Expo l, Expo t)
        : lead(std::move(l)), trail(std::move(t)), leadMask(expo_mask(lead)) {}

    bool operator==(const Elem& o) const {
        return lead == o.lead && trail == o.trail;
    }
};

inline int expo_degree(const Expo& e) {
    return std::accumulate(e.begin(), e.end(), 0);
}

// a | b componentwise
inline bool expo_divides(const Expo& a, const Expo& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

inline Expo expo_lcm(const Expo& a, const Expo& b) {
    Expo r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::max(a[i], b[i]);
    return r;
}

// Term comparison, optionally preceded by one auxiliary elimination
// coordinate at index 0 that dominates the inner order.
struct Comparator {
    const TermOrder* inner = nullptr;
    bool auxBlock = false;

    bool greater(const Expo& a, const Expo& b) const {
        if (auxBlock && a[0] != b[0]) return a[0] > b[0];
        return inner->greater_raw(a, b, auxBlock ? 1 : 0);
    }
};

inline std::optional<Elem> orient(Expo u, Expo v, const Comparator& cmp) {
    if (u == v) return std::nullopt;
    if (cmp.greater(u, v)) return Elem{std::move(u), std::move(v)};
    return Elem{std::move(v), std::move(u)};
}

// Greedy top reduction: while some lead divides m, rewrite lead -> trail.
// Each step strictly decreases m in the well-order, so this terminates.
inline Expo monomial_normal_form(Expo m, const std::vector<Elem>& basis) {
    std::uint64_t mMask = expo_mask(m);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Elem& g : basis) {
            if ((g.leadMask & ~mMask) != 0) continue;
            if (!expo_divides(g.lead, m)) continue;
            for (std::size_t i = 0; i < m.size(); ++i)
                m[i] += g.trail[i] - g.lead[i];
            mMask = expo_mask(m);
            changed = true;
            break;
        }
    }
    return m;
}

// Both sides reduce independently; a pure difference collapses to zero
// exactly when the two normal forms coincide.
inline std::optional<Elem> binomial_normal_form(const Elem& b,
                                                const std::vector<Elem>& basis,
                                                const Comparator& cmp) {
    return orient(monomial_normal_form(b.lead, basis),
                  monomial_normal_form(b.trail, basis), cmp);
}

// Minimalize (drop dominated leads), tail-reduce against the others, sort
// ascending by lead so equal ideals give identical element sequences.
inline std::vector<Elem> reduce_elements(const std::vector<Elem>& G,
                                         const Comparator& cmp) {
    std::vector<Elem> kept;
    for (std::size_t i = 0; i < G.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < G.size() && !dominated; ++j) {
            if (j == i) continue;
            if ((G[j].leadMask & ~G[i].leadMask) != 0) continue;
            if (expo_divides(G[j].lead, G[i].lead) &&
                (G[j].lead != G[i].lead || j < i))
                dominated = true;
        }
        if (!dominated) kept.push_back(G[i]);
    }
    std::vector<Elem> out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        std::vector<Elem> others;
        others.reserve(kept.size() - 1);
        for (std::size_t j = 0; j < kept.size(); ++j)
            if (j != i) others.push_back(kept[j]);
        if (auto nb = binomial_normal_form(kept[i], others, cmp))
            out.push_back(std::move(*nb));
    }
    std::sort(out.begin(), out.end(), [&](const Elem& a, const Elem& b) {
        if (a.lead != b.lead) return cmp.greater(b.lead, a.lead);
        return cmp.greater(b.trail, a.trail);
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<Elem> buchberger_elements(const std::vector<Elem>& gens,
                                             const Comparator& cmp,
                                             const BuchbergerLimits& lim) {
    std::vector<Elem> G;
    for (const Elem& g : gens) {
        if (auto b = orient(g.lead, g.trail, cmp)) {
            if (expo_degree(b->lead) > lim.degreeCap)
                throw BudgetExceeded("basis degree cap exceeded");
            G.push_back(std::move(*b));
        }
    }
    // Pending S-pairs keyed by (lcm degree, i, j): selection takes the
    // smallest key, and erasure by value serves the update-time pruning.
    std::set<std::tuple<int, std::size_t, std::size_t>> pairs;
    auto lcm_degree = [&](std::size_t i, std::size_t j) {
        int deg = 0;
        for (std::size_t k = 0; k < G[i].lead.size(); ++k)
            deg += std::max(G[i].lead[k], G[j].lead[k]);
        return deg;
    };
    auto coprime_leads = [&](std::size_t i, std::size_t j) {
        if ((G[i].leadMask & G[j].leadMask) != 0) return false;
        for (std::size_t k = 64; k < G[i].lead.size(); ++k)
            if (G[i].lead[k] > 0 && G[j].lead[k] > 0) return false;
        return true;
    };

    // Gebauer-Moller update for a newly appended element n: among the
    // candidate pairs (i, n), keep one representative per minimal lcm
    // (pairs with coprime leads survive the sweep and are then discarded,
    // covering their whole lcm class), and drop pending old pairs whose lcm
    // factors through the new lead with both half-lcms strictly smaller.
    auto update_pairs = [&](std::size_t n) {
        std::vector<Expo> lcms(n);
        for (std::size_t i = 0; i < n; ++i) lcms[i] = expo_lcm(G[i].lead, G[n].lead);
        std::vector<char> keep(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (coprime_leads(i, n)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || (j < i && !keep[j])) continue;
                if (expo_divides(lcms[j], lcms[i]) && lcms[j] != lcms[i]) {
                    keep[i] = 0;
                    break;
                }
                if (lcms[j] == lcms[i] && j > i) {
                    keep[i] = 0;  // the later candidate covers this lcm class
                    break;
                }
            }
        }
        std::vector<std::tuple<int, std::size_t, std::size_t>> stale;
        for (const auto& p : pairs) {
            auto [deg, a, b] = p;
            if (!expo_divides(G[n].lead, expo_lcm(G[a].lead, G[b].lead))) continue;
            if (expo_lcm(G[a].lead, G[n].lead) ==
                expo_lcm(G[a].lead, G[b].lead)) continue;
            if (expo_lcm(G[b].lead, G[n].lead) ==
                expo_lcm(G[a].lead, G[b].lead)) continue;
            stale.push_back(p);
        }
        for (const auto& p : stale) pairs.erase(p);
        for (std::size_t i = 0; i < n; ++i)
            if (keep[i] && !coprime_leads(i, n))
                pairs.emplace(lcm_degree(i, n), i, n);
    };
    for (std::size_t n = 1; n < G.size(); ++n) update_pairs(n);

    std::size_t processed = 0;
    while (!pairs.empty()) {
        auto [deg, i, j] = *pairs.begin();
        pairs.erase(pairs.begin());
        if (++processed > lim.pairBudget)
            throw BudgetExceeded("s-pair budget exceeded");
        Expo w = expo_lcm(G[i].lead, G[j].lead);
        Expo u(w.size()), v(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            u[k] = w[k] - G[i].lead[k] + G[i].trail[k];
            v[k] = w[k] - G[j].lead[k] + G[j].trail[k];
        }
        auto s = orient(std::move(u), std::move(v), cmp);
        if (!s) continue;
        s = binomial_normal_form(*s, G, cmp);
        if (!s) continue;
        if (expo_degree(s->lead) > lim.degreeCap)
            throw BudgetExceeded("basis degree cap exceeded");
        G.push_back(std::move(*s));
        update_pairs(G.size() - 1);
    }
    return reduce_elements(G, cmp);
}

// Every S-pair (no skips) must reduce to zero against the set itself.
inline bool spairs_vanish(const std::vector<Elem>& G, const Comparator& cmp) {
    for (std::size_t i = 0; i < G.size(); ++i) {
        for (std::size_t j = i + 1; j < G.size(); ++j) {
            Expo w = expo_lcm(G[i].lead, G[j].lead);
            Expo u(w.size()), v(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) {
                u[k] = w[k] - G[i].lead[k] + G[i].trail[k];
                v[k] = w[k] - G[j].lead[k] + G[j].trail[k];
            }
            auto s = orient(std::move(u), std::move(v), cmp);
            if (s && binomial_normal_form(*s, G, cmp)) return false;
        }
    }
    return true;
}

inline Elem to_elem(const Binomial& b) {
    return Elem{b.positivePart.exponents, b.negativePart.exponents};
}

inline Binomial to_binomial(const Elem& e) {
    return Binomial{Monomial{e.lead}, Monomial{e.trail}};
}

inline std::vector<Elem> to_elems(const std::vector<Binomial>& bs) {
    std::vector<Elem> out;
    out.reserve(bs.size());
    for (const Binomial& b : bs)
        if (!is_zero(b)) out.push_back(to_elem(b));
    return out;
}

inline GroebnerBasis pack_basis(std::vector<Elem> elems, TermOrder order) {
    GroebnerBasis g;
    g.order = std::move(order);
    g.reduced = true;
    g.elements.reserve(elems.size());
    for (Elem& e : elems) g.elements.push_back(to_binomial(e));
    return g;
}

inline int small_int(const Integer& v) {
    if (v > 1000000 || v < -1000000)
        throw std::invalid_argument("move entry out of range");
    return v.template convert_to<int>();
}

// Adjoin y, add y*x_v - 1, eliminate y: the surviving elements generate
// (I : x_v^inf) and form a reduced basis under the inner order.
inline std::vector<Elem> saturate_one_variable(const std::vector<Elem>& gens,
                                               std::size_t v,
                                               const TermOrder& order,
                                               const BuchbergerLimits& lim) {
    const std::size_t d = order.size();
    std::vector<Elem> lifted;
    lifted.reserve(gens.size() + 1);
    for (const Elem& g : gens) {
        Expo l(d + 1, 0), t(d + 1, 0);
        std::copy(g.lead.begin(), g.lead.end(), l.begin() + 1);
        std::copy(g.trail.begin(), g.trail.end(), t.begin() + 1);
        lifted.push_back(Elem{std::move(l), std::move(t)});
    }
    Expo yx(d + 1, 0), one(d + 1, 0);
    yx[0] = 1;
    yx[1 + v] = 1;
    lifted.push_back(Elem{std::move(yx), std::move(one)});
    Comparator cmp{&order, true};
    auto G = buchberger_elements(lifted, cmp, lim);
    std::vector<Elem> out;
    for (Elem& g : G) {
        if (g.lead[0] != 0 || g.trail[0] != 0) continue;
        out.push_back(Elem{Expo(g.lead.begin() + 1, g.lead.end()),
                           Expo(g.trail.begin() + 1, g.trail.end())});
    }
    Comparator plain{&order, false};
    return reduce_elements(out, plain);
}

inline std::vector<Elem> saturate_variables(std::vector<Elem> G,
                                            const std::vector<std::size_t>& vars,
                                            const TermOrder& order,
                                            const BuchbergerLimits& lim) {
    for (std::size_t v : vars) G = saturate_one_variable(G, v, order, lim);
    return G;
}

inline std::vector<std::size_t> support_union(const std::vector<Elem>& G,
                                              std::size_t d) {
    std::vector<char> seen(d, 0);
    for (const Elem& g : G)
        for (std::size_t i = 0; i < d; ++i)
            if (g.lead[i] || g.trail[i]) seen[i] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d; ++i)
        if (seen[i]) out.push_back(i);
    return out;
}

// Saturation traversal heuristic. When some set of rows has pairwise
// disjoint supports covering every column (margin blocks do), walking the
// columns fiber by fiber keeps the intermediate bases far smaller than
// ascending index order. Among full partitions prefer small fibers, then
// wide index spread, so the leading variables of the order get revisited
// early instead of last. Any traversal is correct; this only buys speed.
inline std::vector<std::size_t> saturation_order(const IntMatrix& A) {
    const std::size_t d = A.cols;
    std::vector<std::size_t> ascending(d);
    std::iota(ascending.begin(), ascending.end(), 0);
    struct Group {
        std::vector<char> covered;
        std::vector<std::vector<std::size_t>> fibers;
        std::size_t maxFiber = 0;
        long long spread = 0;
    };
    std::vector<Group> groups;
    for (std::size_t r = 0; r < A.rows; ++r) {
        std::vector<std::size_t> sup;
        for (std::size_t c = 0; c < d; ++c)
            if (A.at(r, c) != 0) sup.push_back(c);
        if (sup.empty()) continue;
        Group* home = nullptr;
        for (Group& g : groups) {
            bool clash = false;
            for (std::size_t c : sup)
                if (g.covered[c]) { clash = true; break; }
            if (!clash) { home = &g; break; }
        }
        if (!home) {
            groups.push_back(Group{std::vector<char>(d, 0), {}, 0, 0});
            home = &groups.back();
        }
        for (std::size_t c : sup) home->covered[c] = 1;
        home->maxFiber = std::max(home->maxFiber, sup.size());
        home->spread +=
            static_cast<long long>(sup.back()) - static_cast<long long>(sup.front());
        home->fibers.push_back(std::move(sup));
    }
    const Group* best = nullptr;
    for (const Group& g : groups) {
        if (std::count(g.covered.begin(), g.covered.end(), char(1)) !=
            long(d))
            continue;
        if (!best || g.maxFiber < best->maxFiber ||
            (g.maxFiber == best->maxFiber && g.spread > best->spread))
            best = &g;
    }
    if (!best) return ascending;
    auto fibers = best->fibers;
    std::sort(fibers.begin(), fibers.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<std::size_t> out;
    out.reserve(d);
    for (const auto& f : fibers) out.insert(out.end(), f.begin(), f.end());
    return out;
}

}  // namespace detail

inline Monomial normal_form(const Monomial& m, const GroebnerBasis& basis) {
    if (m.size() != basis.order.size())
        throw std::invalid_argument("normal form: length mismatch");
    auto elems = detail::to_elems(basis.elements);
    return Monomial{detail::monomial_normal_form(m.exponents, elems)};
}

// Zero is returned with both parts equal to the common normal form.
inline Binomial normal_form(const Binomial& b, const GroebnerBasis& basis) {
    if (b.positivePart.size() != basis.order.size() ||
        b.negativePart.size() != basis.order.size())
        throw std::invalid_argument("normal form: length mismatch");
    auto elems = detail::to_elems(basis.elements);
    detail::Comparator cmp{&basis.order, false};
    auto u = detail::monomial_normal_form(b.positivePart.exponents, elems);
    auto v = detail::monomial_normal_form(b.negativePart.exponents, elems);
    if (u == v) return Binomial{Monomial{u}, Monomial{std::move(u)}};
    auto e = detail::orient(std::move(u), std::move(v), cmp);
    return detail::to_binomial(*e);
}

inline bool reduces_to_zero(const Binomial& b, const GroebnerBasis& basis) {
    return is_zero(normal_form(b, basis));
}

inline GroebnerBasis buchberger(const std::vector<Binomial>& generators,
                                const TermOrder& order,
                                const BuchbergerLimits& limits = {}) {
    for (const Binomial& b : generators)
        if (b.positivePart.size() != order.size() ||
            b.negativePart.size() != order.size())
            throw std::invalid_argument("buchberger: length mismatch");
    detail::Comparator cmp{&order, false};
    auto G = detail::buchberger_elements(detail::to_elems(generators), cmp, limits);
    return detail::pack_basis(std::move(G), order);
}

// True when every S-pair of the set reduces to zero against the set, i.e.
// the elements are a basis of the ideal they generate.
inline bool is_groebner_basis(const std::vector<Binomial>& elements,
                              const TermOrder& order) {
    detail::Comparator cmp{&order, false};
    std::vector<detail::Elem> G;
    for (const Binomial& b : elements)
        if (auto e = detail::orient(b.positivePart.exponents,
                                    b.negativePart.exponents, cmp))
            G.push_back(std::move(*e));
    return detail::spairs_vanish(G, cmp);
}

inline Binomial move_binomial(const std::vector<Integer>& move) {
    Monomial pos, neg;
    pos.exponents.resize(move.size());
    neg.exponents.resize(move.size());
    for (std::size_t i = 0; i < move.size(); ++i) {
        int e = detail::small_int(move[i]);
        pos.exponents[i] = std::max(e, 0);
        neg.exponents[i] = std::max(-e, 0);
    }
    return Binomial{std::move(pos), std::move(neg)};
}

inline std::vector<Integer> binomial_move(const Binomial& b) {
    std::vector<Integer> m(b.positivePart.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = Integer(b.positivePart.exponents[i] - b.negativePart.exponents[i]);
    return m;
}

inline bool margin_preserving(const IntMatrix& A, const std::vector<Integer>& move) {
    if (move.size() != A.cols) return false;
    for (std::size_t r = 0; r < A.rows; ++r) {
        Integer s = 0;
        for (std::size_t c = 0; c < A.cols; ++c)
            if (A.at(r, c) != 0) s += A.at(r, c) * move[c];
        if (s != 0) return false;
    }
    return true;
}

inline GroebnerBasis saturate(const std::vector<Binomial>& generators,
                              const Monomial& f, const TermOrder& order,
                              const BuchbergerLimits& limits = {}) {
    if (f.size() != order.size())
        throw std::invalid_argument("saturate: length mismatch");
    auto G = detail::buchberger_elements(detail::to_elems(generators),
                                         detail::Comparator{&order, false}, limits);
    std::vector<std::size_t> vars;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.exponents[i] > 0) vars.push_back(i);
    G = detail::saturate_variables(std::move(G), vars, order, limits);
    return detail::pack_basis(std::move(G), order);
}

// One quotient step (I : f): adjoin t, take {t*g} with t*f - f, eliminate t,
// then divide the surviving elements by f. Every survivor lies in I
// intersected with (f), so the division is exact.
inline GroebnerBasis ideal_quotient(const std::vector<Binomial>& generators,
                                    const Monomial& f, const TermOrder& order,
                                    const BuchbergerLimits& limits = {}) {
    if (f.size() != order.size())
        throw std::invalid_argument("ideal quotient: length mismatch");
    const std::size_t d = order.size();
    if (f.is_one()) return buchberger(generators, order, limits);
    std::vector<detail::Elem> lifted;
    for (const Binomial& b : generators) {
        if (is_zero(b)) continue;
        detail::Expo l(d + 1, 0), t(d + 1, 0);
        l[0] = t[0] = 1;
        std::copy(b.positivePart.exponents.begin(), b.positivePart.exponents.end(),
                  l.begin() + 1);
        std::copy(b.negativePart.exponents.begin(), b.negativePart.exponents.end(),
                  t.begin() + 1);
        lifted.push_back(detail::Elem{std::move(l), std::move(t)});
    }
    detail::Expo tf(d + 1, 0), ff(d + 1, 0);
    tf[0] = 1;
    std::copy(f.exponents.begin(), f.exponents.end(), tf.begin() + 1);
    std::copy(f.exponents.begin(), f.exponents.end(), ff.begin() + 1);
    lifted.push_back(detail::Elem{std::move(tf), std::move(ff)});
    BuchbergerLimits lifting = limits;
    lifting.degreeCap = limits.degreeCap + 2 * f.degree() + 1;
    detail::Comparator cmp{&order, true};
    auto G = detail::buchberger_elements(lifted, cmp, lifting);
    std::vector<detail::Elem> divided;
    for (const detail::Elem& g : G) {
        if (g.lead[0] != 0 || g.trail[0] != 0) continue;
        detail::Expo l(g.lead.begin() + 1, g.lead.end());
        detail::Expo t(g.trail.begin() + 1, g.trail.end());
        if (!detail::expo_divides(f.exponents, l) ||
            !detail::expo_divides(f.exponents, t))
            throw std::logic_error("ideal quotient: survivor not divisible");
        for (std::size_t i = 0; i < d; ++i) {
            l[i] -= f.exponents[i];
            t[i] -= f.exponents[i];
        }
        divided.push_back(detail::Elem{std::move(l), std::move(t)});
    }
    auto R = detail::buchberger_elements(divided, detail::Comparator{&order, false},
                                         limits);
    return detail::pack_basis(std::move(R), order);
}

// Reduced basis of {x^u - x^v : Au = Av} under `order`: integer kernel basis,
// the corresponding lattice binomials, then saturation by every supported
// variable. Each output move is rechecked against the kernel.
inline GroebnerBasis toric_ideal(const IntMatrix& A, const TermOrder& order,
                                 const BuchbergerLimits& limits = {}) {
    if (order.size() != A.cols)
        throw std::invalid_argument("toric ideal: order size != columns");
    auto kernel = integer_kernel_basis(A);
    std::vector<detail::Elem> gens;
    for (const auto& m : kernel) {
        Binomial b = move_binomial(m);
        if (!is_zero(b)) gens.push_back(detail::to_elem(b));
    }
    std::vector<char> inSupport(A.cols, 0);
    for (std::size_t v : detail::support_union(gens, A.cols)) inSupport[v] = 1;
    std::vector<std::size_t> vars;
    for (std::size_t v : detail::saturation_order(A))
        if (inSupport[v]) vars.push_back(v);
    auto G = detail::saturate_variables(std::move(gens), vars, order, limits);
    G = detail::reduce_elements(G, detail::Comparator{&order, false});
    GroebnerBasis out = detail::pack_basis(std::move(G), order);
    for (const Binomial& b : out.elements)
        if (!margin_preserving(A, binomial_move(b)))
            throw std::logic_error("toric ideal: element leaves the kernel");
    return out;
}

inline GroebnerBasis toric_ideal(const ConstraintSystem& sys, const TermOrder& order,
                                 const BuchbergerLimits& limits = {}) {
    return toric_ideal(sys.matrix, order, limits);
}

// Scan of a lex basis: each element must have exponent <= 1 on the first
// variable its two monomials touch. A pass certifies gap-free sequential
// cell supports for every margin vector; the witness fields locate the
// offending element otherwise.
struct IntervalCheckReport {
    CheckOutcome outcome = CheckOutcome::inconclusive;
    GroebnerBasis basis;
    std::size_t witnessElement = kNoWitness;
    std::size_t witnessVariable = kNoWitness;
    int witnessExponent = 0;
};

namespace detail {

// index of the first variable with a nonzero exponent on either side
inline std::size_t first_support(const Binomial& b) {
    for (std::size_t i = 0; i < b.positivePart.size(); ++i)
        if (b.positivePart.exponents[i] || b.negativePart.exponents[i]) return i;
    return kNoWitness;
}

inline void scan_first_support(const std::vector<Binomial>& elems,
                               IntervalCheckReport& rep) {
    rep.outcome = CheckOutcome::pass;
    for (std::size_t i = 0; i < elems.size(); ++i) {
        std::size_t v = first_support(elems[i]);
        if (v == kNoWitness) continue;
        int e = std::max(elems[i].positivePart.exponents[v],
                         elems[i].negativePart.exponents[v]);
        if (e > 1) {
            rep.outcome = CheckOutcome::fail;
            rep.witnessElement = i;
            rep.witnessVariable = v;
            rep.witnessExponent = e;
            return;
        }
    }
}

}  // namespace detail

inline IntervalCheckReport check_interval_property(const GroebnerBasis& lexBasis) {
    if (lexBasis.order.kind != OrderKind::lex ||
        lexBasis.order != lex_order(lexBasis.order.size()))
        throw std::invalid_argument("interval check needs the plain lex basis");
    IntervalCheckReport rep;
    rep.basis = lexBasis;
    detail::scan_first_support(lexBasis.elements, rep);
    return rep;
}

inline IntervalCheckReport check_interval_property(const ConstraintSystem& sys,
                                                   const BuchbergerLimits& limits = {}) {
    IntervalCheckReport rep;
    try {
        rep.basis = toric_ideal(sys.matrix, lex_order(sys.matrix.cols), limits);
    } catch (const BudgetExceeded&) {
        rep.outcome = CheckOutcome::inconclusive;
        return rep;
    }
    detail::scan_first_support(rep.basis.elements, rep);
    return rep;
}

// Margin-specific certificate for a move subset G, each condition reported
// on its own: (1) G is a basis of the ideal it generates, (2) the
// first-support exponent scan, (3) for each variable, saturating by it adds
// nothing supported purely on the later variables.
struct SubbasisCheckReport {
    CheckOutcome selfBasis = CheckOutcome::inconclusive;
    CheckOutcome squareFree = CheckOutcome::inconclusive;
    CheckOutcome saturationClosed = CheckOutcome::inconclusive;
    std::size_t witnessElement = kNoWitness;   // squareFree failure
    std::size_t witnessVariable = kNoWitness;  // squareFree / saturation failure
    bool certified() const {
        return selfBasis == CheckOutcome::pass && squareFree == CheckOutcome::pass &&
               saturationClosed == CheckOutcome::pass;
    }
};

inline SubbasisCheckReport check_subbasis_intervals(const MoveSet& moves,
                                                    const ConstraintSystem& sys,
                                                    const BuchbergerLimits& limits = {}) {
    const std::size_t d = sys.matrix.cols;
    for (const auto& m : moves.moves)
        if (!margin_preserving(sys.matrix, m))
            throw std::invalid_argument("subbasis check: move not in the kernel");
    TermOrder order = lex_order(d);
    std::vector<Binomial> G;
    for (const auto& m : moves.moves) {
        Binomial b = move_binomial(m);
        if (!is_zero(b)) G.push_back(std::move(b));
    }
    SubbasisCheckReport rep;
    rep.selfBasis =
        is_groebner_basis(G, order) ? CheckOutcome::pass : CheckOutcome::fail;
    IntervalCheckReport scan;
    detail::scan_first_support(G, scan);
    rep.squareFree = scan.outcome;
    rep.witnessElement = scan.witnessElement;
    rep.witnessVariable = scan.witnessVariable;

    // the membership reducer must be lead-oriented under the scan order
    GroebnerBasis base;
    base.order = order;
    detail::Comparator plain{&order, false};
    for (const Binomial& b : G)
        if (auto e = detail::orient(b.positivePart.exponents,
                                    b.negativePart.exponents, plain))
            base.elements.push_back(detail::to_binomial(*e));
    auto elems = detail::to_elems(G);
    rep.saturationClosed = CheckOutcome::pass;
    for (std::size_t v = 0; v + 1 < d; ++v) {
        std::vector<detail::Elem> sat;
        try {
            sat = detail::saturate_one_variable(elems, v, order, limits);
        } catch (const BudgetExceeded&) {
            rep.saturationClosed = CheckOutcome::inconclusive;
            rep.witnessVariable = v;
            break;
        }
        bool ok = true;
        for (const auto& g : sat) {
            bool tailOnly = true;
            for (std::size_t i = 0; i <= v && tailOnly; ++i)
                if (g.lead[i] || g.trail[i]) tailOnly = false;
            if (!tailOnly) continue;
            if (!reduces_to_zero(detail::to_binomial(g), base)) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            rep.saturationClosed = CheckOutcome::fail;
            rep.witnessVariable = v;
            break;
        }
    }
    return rep;
}

// True when one quotient of the move ideal by the product of the support
// cells already equals the full toric ideal.
inline bool is_markov_subbasis(const MoveSet& moves, const ConstraintSystem& sys,
                               const PositivitySupport& support,
                               const BuchbergerLimits& limits = {}) {
    const std::size_t d = sys.matrix.cols;
    for (const auto& m : moves.moves)
        if (!margin_preserving(sys.matrix, m))
            throw std::invalid_argument("subbasis check: move not in the kernel");
    Monomial f;
    f.exponents.assign(d, 0);
    for (std::size_t s : support.indices) {
        if (s >= d) throw std::invalid_argument("support index out of range");
        f.exponents[s] = 1;
    }
    std::vector<Binomial> G;
    for (const auto& m : moves.moves) {
        Binomial b = move_binomial(m);
        if (!is_zero(b)) G.push_back(std::move(b));
    }
    TermOrder order = lex_order(d);
    GroebnerBasis quotient = ideal_quotient(G, f, order, limits);
    GroebnerBasis full = toric_ideal(sys.matrix, order, limits);
    return quotient.elements == full.elements;
}

// Rounded-LP exactness certificate. Lower: the plain lex basis has fully
// square-free lead monomials. Upper: for every suffix of the cell order,
// the reversed-variable grevlex basis of the suffix matrix has square-free
// lead monomials; scanning stops at the first failing suffix.
struct LpExactnessReport {
    CheckOutcome lower = CheckOutcome::inconclusive;
    CheckOutcome upper = CheckOutcome::inconclusive;
    std::size_t lowerWitness = kNoWitness;  // element with a non-square-free lead
    std::size_t upperFailCell = kNoWitness;
};

namespace detail {

inline std::size_t square_free_leads(const std::vector<Binomial>& elems) {
    for (std::size_t i = 0; i < elems.size(); ++i)
        for (int e : elems[i].positivePart.exponents)
            if (e > 1) return i;
    return kNoWitness;
}

}  // namespace detail

inline LpExactnessReport check_lp_exactness(const IntMatrix& A,
                                            const BuchbergerLimits& limits = {}) {
    const std::size_t d = A.cols;
    LpExactnessReport rep;
    try {
        auto lexBasis = toric_ideal(A, lex_order(d), limits);
        rep.lowerWitness = detail::square_free_leads(lexBasis.elements);
        rep.lower = rep.lowerWitness == kNoWitness ? CheckOutcome::pass
                                                   : CheckOutcome::fail;
    } catch (const BudgetExceeded&) {
        rep.lower = CheckOutcome::inconclusive;
    }
    rep.upper = CheckOutcome::pass;
    for (std::size_t j = 0; j < d; ++j) {
        IntMatrix suffix(A.rows, d - j);
        for (std::size_t r = 0; r < A.rows; ++r)
            for (std::size_t c = j; c < d; ++c)
                suffix.at(r, c - j) = A.at(r, c);
        try {
            auto g = toric_ideal(suffix, reversed_grevlex_order(d - j), limits);
            if (detail::square_free_leads(g.elements) != kNoWitness) {
                rep.upper = CheckOutcome::fail;
                rep.upperFailCell = j;
                break;
            }
        } catch (const BudgetExceeded&) {
            rep.upper = CheckOutcome::inconclusive;
            rep.upperFailCell = j;
            break;
        }
    }
    return rep;
}

inline LpExactnessReport check_lp_exactness(const ConstraintSystem& sys,
                                            const BuchbergerLimits& limits = {}) {
    return check_lp_exactness(sys.matrix, limits);
}

// Cells whose LP minimum over the fiber polytope is strictly positive,
// decided by exact rational comparison.
inline PositivitySupport positive_support(const ConstraintSystem& sys,
                                          const std::vector<Integer>& t) {
    auto state = make_prefix_state(sys, t);
    BoundEngine engine(sys, {BoundMethod::lp});
    PositivitySupport out;
    for (std::size_t j = 0; j < sys.matrix.cols; ++j) {
        auto b = engine.bounds(state, j);
        if (!b.feasible) throw std::domain_error("positive support: empty fiber");
        if (b.lpLower > 0) out.indices.push_back(j);
    }
    return out;
}

// Union-find over the enumerated fiber with edges n <-> n + m; true when the
// moves connect every table to every other.
inline bool connectivity_check(const MoveSet& moves, const ConstraintSystem& sys,
                               const std::vector<Integer>& t,
                               std::size_t enumerationBudget = 2000000) {
    for (const auto& m : moves.moves)
        if (!margin_preserving(sys.matrix, m))
            throw std::invalid_argument("connectivity check: move not in the kernel");
    auto fiber = enumerate_fiber(sys, t, enumerationBudget);
    if (fiber.size() <= 1) return true;
    std::map<std::vector<Integer>, std::size_t> index;
    for (std::size_t i = 0; i < fiber.size(); ++i) index[fiber[i].counts] = i;
    std::vector<std::size_t> parent(fiber.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = fiber.size();
    for (std::size_t i = 0; i < fiber.size() && components > 1; ++i) {
        for (const auto& m : moves.moves) {
            std::vector<Integer> neighbor = fiber[i].counts;
            bool ok = true;
            for (std::size_t c = 0; c < neighbor.size() && ok; ++c) {
                neighbor[c] += m[c];
                if (neighbor[c] < 0) ok = false;
            }
            if (!ok) continue;
            auto it = index.find(neighbor);
            if (it == index.end()) continue;
            std::size_t a = find(i), b = find(it->second);
            if (a != b) {
                parent[a] = b;
                --components;
            }
        }
    }
    return components == 1;
}

// One move per line, whitespace-separated integer entries; blank lines are
// skipped. All rows must agree on length.
inline MoveSet read_move_set(std::istream& in) {
    MoveSet out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::vector<Integer> move;
        long long v = 0;
        while (row >> v) move.emplace_back(v);
        if (!row.eof()) throw std::invalid_argument("move set: bad integer");
        if (move.empty()) continue;
        if (!out.moves.empty() && move.size() != out.moves.front().size())
            throw std::invalid_argument("move set: ragged row lengths");
        out.moves.push_back(std::move(move));
    }
    return out;
}

inline void write_move_set(std::ostream& out, const MoveSet& m) {
    for (const auto& move : m.moves) {
        for (std::size_t i = 0; i < move.size(); ++i) {
            if (i) out << ' ';
            out << move[i];
        }
        out << '\n';
    }
}

}  // namespace sistab
