#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sistab/bounds/bounds.hpp"
#include "sistab/exact/rational.hpp"
#include "sistab/model/model.hpp"

namespace sistab {

enum class ProposalKind { uniform, hypergeometric };

namespace detail {

// Natural log of a positive integer; splits off high bits first so values far
// beyond double range still come out right.
inline double log_integer(const Integer& v) {
    if (v <= 0) throw std::domain_error("log_integer: nonpositive argument");
    const unsigned bits = boost::multiprecision::msb(v);
    if (bits < 900) return std::log(v.convert_to<double>());
    const Integer shifted = v >> (bits - 64);
    return std::log(shifted.convert_to<double>()) +
           static_cast<double>(bits - 64) * std::log(2.0);
}

inline double log_rational(const Rational& v) {
    return log_integer(boost::multiprecision::numerator(v)) -
           log_integer(boost::multiprecision::denominator(v));
}

inline std::size_t to_index(const Integer& v) {
    if (v < 0 || v > Integer(std::numeric_limits<long long>::max()))
        throw std::invalid_argument("to_index: value out of range");
    return v.convert_to<std::size_t>();
}

inline const Integer& factorial(std::size_t n) {
    thread_local std::vector<Integer> cache{Integer(1)};
    while (cache.size() <= n) cache.push_back(cache.back() * Integer(cache.size()));
    return cache[n];
}

inline Integer factorial_product(const std::vector<Integer>& table) {
    Integer prod(1);
    for (const auto& v : table) {
        if (v < 0) throw std::invalid_argument("factorial_product: negative count");
        prod *= factorial(to_index(v));
    }
    return prod;
}

}  // namespace detail

// Unnormalized target density p(n) on the fiber. The built-in families retain
// enough structure to compare two tables' masses exactly, which keeps the
// exact-test indicator correct on ties; custom targets compare through their
// log weights.
class TargetDistribution {
  public:
    enum class Kind { uniform, hypergeometric, hardyWeinberg, custom };

    static TargetDistribution uniform() { return TargetDistribution(Kind::uniform); }

    // p(n) proportional to prod 1/n_j!
    static TargetDistribution hypergeometric() {
        return TargetDistribution(Kind::hypergeometric);
    }

    // p(n) proportional to 2^h / prod n_j! where h sums the counts of the
    // cells flagged in the mask (heterozygote cells of a genotype table)
    static TargetDistribution hardy_weinberg(std::vector<char> heterozygote) {
        TargetDistribution t(Kind::hardyWeinberg);
        t.heterozygote_ = std::move(heterozygote);
        return t;
    }

    static TargetDistribution custom(
        std::function<double(const std::vector<Integer>&)> logWeight) {
        if (!logWeight)
            throw std::invalid_argument("custom target: missing log-weight function");
        TargetDistribution t(Kind::custom);
        t.custom_ = std::move(logWeight);
        return t;
    }

    Kind kind() const { return kind_; }

    // log p(table) up to the family's normalizing constant
    double log_weight(const std::vector<Integer>& table) const {
        switch (kind_) {
            case Kind::uniform:
                return 0.0;
            case Kind::hypergeometric:
                return -log_factorial_sum(table);
            case Kind::hardyWeinberg:
                return het_total(table).convert_to<double>() * std::log(2.0) -
                       log_factorial_sum(table);
            case Kind::custom:
                return custom_(table);
        }
        throw std::logic_error("unreachable");
    }

    // Sign of p(a) - p(b). Doubles decide when the gap is clear; near-ties
    // fall through to a cross-multiplied integer comparison, so equal masses
    // report 0 no matter how the log sums rounded.
    int compare(const std::vector<Integer>& a, const std::vector<Integer>& b) const {
        if (kind_ == Kind::uniform) return 0;
        const double la = log_weight(a);
        const double lb = log_weight(b);
        if (kind_ == Kind::custom) return la < lb ? -1 : la > lb ? 1 : 0;
        const double margin = 1e-6 * std::max({1.0, std::fabs(la), std::fabs(lb)});
        if (la < lb - margin) return -1;
        if (la > lb + margin) return 1;
        Integer lhs = detail::factorial_product(b);
        Integer rhs = detail::factorial_product(a);
        if (kind_ == Kind::hardyWeinberg) {
            lhs <<= het_total(a).convert_to<unsigned>();
            rhs <<= het_total(b).convert_to<unsigned>();
        }
        return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
    }

    // Exact unnormalized mass; defined for the built-in families only.
    Rational exact_mass(const std::vector<Integer>& table) const {
        switch (kind_) {
            case Kind::uniform:
                return Rational(1);
            case Kind::hypergeometric:
                return Rational(Integer(1), detail::factorial_product(table));
            case Kind::hardyWeinberg:
                return Rational(Integer(1) << het_total(table).convert_to<unsigned>(),
                                detail::factorial_product(table));
            case Kind::custom:
                throw std::domain_error("exact_mass: custom target has no exact form");
        }
        throw std::logic_error("unreachable");
    }

  private:
    explicit TargetDistribution(Kind k) : kind_(k) {}

    static double log_factorial_sum(const std::vector<Integer>& table) {
        double s = 0.0;
        for (const auto& v : table) {
            if (v < 0) throw std::invalid_argument("target weight: negative count");
            s += std::lgamma(v.convert_to<double>() + 1.0);
        }
        return s;
    }

    Integer het_total(const std::vector<Integer>& table) const {
        if (heterozygote_.size() != table.size())
            throw std::invalid_argument("heterozygote mask length != table length");
        Integer h(0);
        for (std::size_t j = 0; j < table.size(); ++j)
            if (heterozygote_[j]) h += table[j];
        return h;
    }

    Kind kind_;
    std::vector<char> heterozygote_;
    std::function<double(const std::vector<Integer>&)> custom_;
};

inline double target_log_weight(const TargetDistribution& target,
                                const std::vector<Integer>& table) {
    return target.log_weight(table);
}

// Flat mass 1/(u-l+1) on each integer of [l, u].
inline std::vector<Rational> step_pmf_uniform(const Integer& l, const Integer& u) {
    if (l > u) throw std::invalid_argument("step_pmf_uniform: empty interval");
    const std::size_t width = detail::to_index(u - l) + 1;
    return std::vector<Rational>(width, Rational(Integer(1), Integer(width)));
}

namespace detail {

// p(x) = C(u,x) C(u,l+u-x) / C(2u,l+u) for x in [l, u]. Vandermonde's
// identity makes the masses sum to exactly 1 over that range. Both binomial
// factors advance by one-step recurrences, so the row costs O(width) big-int
// operations.
inline std::vector<Rational> hyper_pmf_fresh(const Integer& l, const Integer& u) {
    const std::size_t width = to_index(u - l) + 1;
    auto binom = [](const Integer& n, Integer k) {
        if (k < 0 || k > n) return Integer(0);
        if (k > n - k) k = n - k;
        Integer r(1);
        for (Integer i(1); i <= k; ++i) {
            r *= n - i + 1;
            r /= i;
        }
        return r;
    };
    const Integer den = binom(2 * u, l + u);
    Integer first = binom(u, l);  // C(u, x), ascending x
    Integer second(1);            // C(u, m) with m = l+u-x, descending m from u
    Integer x = l;
    Integer m = u;
    std::vector<Rational> pmf(width);
    for (std::size_t i = 0; i < width; ++i) {
        pmf[i] = Rational(first * second, den);
        if (i + 1 < width) {
            first *= u - x;
            first /= x + 1;
            second *= m;
            second /= u - m + 1;
            ++x;
            --m;
        }
    }
    return pmf;
}

inline bool fits_ll(const Integer& v) {
    return v >= Integer(std::numeric_limits<long long>::min()) &&
           v <= Integer(std::numeric_limits<long long>::max());
}

inline const std::vector<Rational>& hyper_pmf_cached(long long l, long long u) {
    thread_local std::map<std::pair<long long, long long>, std::vector<Rational>> cache;
    auto [it, inserted] = cache.try_emplace({l, u});
    if (inserted) it->second = hyper_pmf_fresh(Integer(l), Integer(u));
    return it->second;
}

// Masses for one sampling step. Hypergeometric rows are memoized per (l, u);
// scratch backs the paths that cannot hit the cache.
inline const std::vector<Rational>& step_pmf_for(ProposalKind proposal, const Integer& l,
                                                 const Integer& u,
                                                 std::vector<Rational>& scratch) {
    if (proposal == ProposalKind::hypergeometric && fits_ll(l) && fits_ll(u))
        return hyper_pmf_cached(l.convert_to<long long>(), u.convert_to<long long>());
    scratch = proposal == ProposalKind::hypergeometric
                  ? hyper_pmf_fresh(l, u)
                  : std::vector<Rational>(to_index(u - l) + 1,
                                          Rational(Integer(1), u - l + 1));
    return scratch;
}

// Inverse-cdf draw. The variate is the exact dyadic rational (rng >> 11)/2^53,
// so comparisons against the cumulative masses never involve rounding.
inline std::size_t draw_index(const std::vector<Rational>& pmf, std::mt19937_64& rng) {
    if (pmf.size() == 1) return 0;
    const Rational u(Integer(rng() >> 11), Integer(1) << 53);
    Rational cum(0);
    for (std::size_t i = 0; i + 1 < pmf.size(); ++i) {
        cum += pmf[i];
        if (u < cum) return i;
    }
    return pmf.size() - 1;
}

}  // namespace detail

inline std::vector<Rational> step_pmf_hypergeometric(const Integer& l, const Integer& u) {
    if (l < 0) throw std::invalid_argument("step_pmf_hypergeometric: negative lower bound");
    if (l > u) throw std::invalid_argument("step_pmf_hypergeometric: empty interval");
    return detail::hyper_pmf_fresh(l, u);
}

struct SampledTable {
    std::vector<Integer> table;  // full table when the walk completed, else the
                                 // prefix that was placed before the dead end
    double logQ = 0.0;           // sum of step log masses along the walk
    bool valid = false;          // complete and A n = t
};

// One pass of the sequential walk: bound the current cell given the prefix,
// draw it from the step pmf, repeat. An empty interval ends the walk early
// with a zero-weight sample; those still count toward N in the estimators.
inline SampledTable sis_sample_one(const ConstraintSystem& system,
                                   const std::vector<Integer>& t, ProposalKind proposal,
                                   BoundEngine& engine, std::mt19937_64& rng) {
    PrefixState state = make_prefix_state(system, t);
    SampledTable out;
    const std::size_t d = system.matrix.cols;
    out.table.reserve(d);
    std::vector<Rational> scratch;
    for (std::size_t cell = 0; cell < d; ++cell) {
        const BoundInterval iv = engine.bounds(state, cell);
        if (iv.empty()) return out;
        Integer value = iv.intLower;
        if (iv.intLower != iv.intUpper) {
            const std::vector<Rational>& pmf =
                detail::step_pmf_for(proposal, iv.intLower, iv.intUpper, scratch);
            const std::size_t idx = detail::draw_index(pmf, rng);
            out.logQ += detail::log_rational(pmf[idx]);
            value += Integer(idx);
        }
        out.table.push_back(value);
        prefix_push(state, value);
    }
    out.valid = std::all_of(state.residualMargin.begin(), state.residualMargin.end(),
                            [](const Integer& r) { return r == 0; });
    return out;
}

// Recomputes log q(table) by walking the same intervals the sampler would see.
// Returns nullopt if the table escapes an interval or misses the margin; for a
// table produced by sis_sample_one with the same engine configuration the
// result reproduces its logQ bit for bit.
inline std::optional<double> replay_log_q(const ConstraintSystem& system,
                                          const std::vector<Integer>& t,
                                          ProposalKind proposal, BoundEngine& engine,
                                          const std::vector<Integer>& table) {
    if (table.size() != system.matrix.cols) return std::nullopt;
    PrefixState state = make_prefix_state(system, t);
    double logQ = 0.0;
    std::vector<Rational> scratch;
    for (std::size_t cell = 0; cell < table.size(); ++cell) {
        const BoundInterval iv = engine.bounds(state, cell);
        if (iv.empty()) return std::nullopt;
        if (table[cell] < iv.intLower || table[cell] > iv.intUpper) return std::nullopt;
        if (iv.intLower != iv.intUpper) {
            const std::vector<Rational>& pmf =
                detail::step_pmf_for(proposal, iv.intLower, iv.intUpper, scratch);
            logQ += detail::log_rational(pmf[detail::to_index(table[cell] - iv.intLower)]);
        }
        prefix_push(state, table[cell]);
    }
    for (const auto& r : state.residualMargin)
        if (r != 0) return std::nullopt;
    return logQ;
}

struct SISConfig {
    const ConstraintSystem* system = nullptr;
    std::vector<Integer> margin;  // t
    ProposalKind proposal = ProposalKind::uniform;
    TargetDistribution target = TargetDistribution::uniform();
    BoundEngineConfig engine;
    std::size_t sampleCount = 1000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct SISRun {
    SISConfig config;
    std::vector<SampledTable> samples;
};

// Draws config.sampleCount tables. Sample i always uses a generator seeded
// from (seed, i), so the run is reproducible and independent of how many
// worker threads execute it.
inline SISRun run_sis(const SISConfig& cfg) {
    if (!cfg.system) throw std::invalid_argument("run_sis: no constraint system");
    if (cfg.system->matrix.rows != cfg.margin.size())
        throw std::invalid_argument("run_sis: margin length != rows");
    if (cfg.sampleCount == 0) throw std::invalid_argument("run_sis: zero samples");
    SISRun run;
    run.config = cfg;
    run.samples.resize(cfg.sampleCount);
    const unsigned jobs = std::max(1u, cfg.jobs);
    auto worker = [&run, &cfg](std::size_t start, std::size_t stride) {
        BoundEngine engine(*cfg.system, cfg.engine);
        for (std::size_t i = start; i < cfg.sampleCount; i += stride) {
            std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                              static_cast<std::uint32_t>(cfg.seed >> 32),
                              static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
            std::mt19937_64 rng(seq);
            run.samples[i] =
                sis_sample_one(*cfg.system, cfg.margin, cfg.proposal, engine, rng);
        }
    };
    if (jobs == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker, k, jobs);
        for (auto& th : pool) th.join();
    }
    return run;
}

struct EstimateReport {
    double value = 0.0;
    double standardError = 0.0;
    double cvSquared = 0.0;
    double ess = 0.0;
    double goodFraction = 0.0;
};

// Standard errors come from batching one run into this many contiguous,
// near-equal blocks and taking sd(block estimates)/sqrt(blocks).
inline constexpr std::size_t kBatchCount = 20;

namespace detail {

inline double log_sum_exp(const std::vector<double>& xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                                     std::size_t blocks) {
    blocks = std::min(blocks, n);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t at = 0;
    for (std::size_t j = 0; j < blocks; ++j) {
        const std::size_t len = n / blocks + (j < n % blocks ? 1 : 0);
        out.emplace_back(at, at + len);
        at += len;
    }
    return out;
}

inline double sample_sd(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// Population-variance convention: cv^2 = mean((w - wbar)^2) / wbar^2.
inline double weight_cv_squared(const std::vector<double>& w) {
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= static_cast<double>(w.size());
    if (mean == 0.0) return std::numeric_limits<double>::infinity();
    double ss = 0.0;
    for (double x : w) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(w.size()) / (mean * mean);
}

inline std::vector<double> valid_log_weights(const SISRun& run,
                                             const TargetDistribution& target) {
    std::vector<double> logw;
    for (const auto& s : run.samples)
        if (s.valid) logw.push_back(target.log_weight(s.table) - s.logQ);
    return logw;
}

inline std::vector<double> normalize_weights(const std::vector<double>& logw) {
    const double m = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(logw.size());
    for (std::size_t i = 0; i < logw.size(); ++i) w[i] = std::exp(logw[i] - m);
    return w;
}

}  // namespace detail

inline double cv_squared(const SISRun& run, const TargetDistribution& target) {
    const std::vector<double> logw = detail::valid_log_weights(run, target);
    if (logw.size() < 2)
        throw std::domain_error("cv_squared: need at least two valid samples");
    return detail::weight_cv_squared(detail::normalize_weights(logw));
}

inline double effective_sample_size(const SISRun& run, const TargetDistribution& target) {
    return static_cast<double>(run.samples.size()) / (1.0 + cv_squared(run, target));
}

// Fiber-size estimate: the mean over all N draws of 1{valid}/q(n), aggregated
// in log space. A run with no valid draws reports value 0, and goodFraction 0
// is the flag for that outcome.
inline EstimateReport estimate_count(const SISRun& run) {
    const std::size_t n = run.samples.size();
    if (n == 0) throw std::invalid_argument("estimate_count: empty run");
    std::vector<double> logw;
    logw.reserve(n);
    for (const auto& s : run.samples)
        if (s.valid) logw.push_back(-s.logQ);
    EstimateReport rep;
    rep.goodFraction = static_cast<double>(logw.size()) / static_cast<double>(n);
    if (logw.empty()) {
        rep.cvSquared = std::numeric_limits<double>::infinity();
        return rep;
    }
    rep.value = std::exp(detail::log_sum_exp(logw) - std::log(static_cast<double>(n)));
    std::vector<double> blockMeans;
    for (const auto& [b, e] : detail::batch_ranges(n, kBatchCount)) {
        std::vector<double> part;
        for (std::size_t i = b; i < e; ++i)
            if (run.samples[i].valid) part.push_back(-run.samples[i].logQ);
        blockMeans.push_back(
            part.empty() ? 0.0
                         : std::exp(detail::log_sum_exp(part) -
                                    std::log(static_cast<double>(e - b))));
    }
    rep.standardError = detail::sample_sd(blockMeans) /
                        std::sqrt(static_cast<double>(blockMeans.size()));
    rep.cvSquared =
        logw.size() >= 2 ? detail::weight_cv_squared(detail::normalize_weights(logw)) : 0.0;
    rep.ess = static_cast<double>(n) / (1.0 + rep.cvSquared);
    return rep;
}

// Self-normalized estimate of E_p f over the fiber: sum f w / sum w with
// w = p/q over the valid draws. Invalid draws contribute zero to both sums.
inline EstimateReport estimate_mu(const SISRun& run,
                                  const std::function<double(const std::vector<Integer>&)>& f,
                                  const TargetDistribution& target) {
    const std::size_t n = run.samples.size();
    if (n == 0) throw std::invalid_argument("estimate_mu: empty run");
    if (!f) throw std::invalid_argument("estimate_mu: missing statistic");
    std::vector<double> logw(n, -std::numeric_limits<double>::infinity());
    double maxLog = -std::numeric_limits<double>::infinity();
    std::size_t validCount = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!run.samples[i].valid) continue;
        logw[i] = target.log_weight(run.samples[i].table) - run.samples[i].logQ;
        maxLog = std::max(maxLog, logw[i]);
        ++validCount;
    }
    if (validCount == 0) throw std::domain_error("estimate_mu: no valid samples");
    std::vector<double> w(n, 0.0);
    std::vector<double> fv(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!run.samples[i].valid) continue;
        w[i] = std::exp(logw[i] - maxLog);
        fv[i] = f(run.samples[i].table);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += fv[i] * w[i];
        den += w[i];
    }
    EstimateReport rep;
    rep.value = num / den;
    std::vector<double> ratios;
    for (const auto& [b, e] : detail::batch_ranges(n, kBatchCount)) {
        double bn = 0.0;
        double bd = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            bn += fv[i] * w[i];
            bd += w[i];
        }
        if (bd > 0.0) ratios.push_back(bn / bd);
    }
    rep.standardError = ratios.size() >= 2
                            ? detail::sample_sd(ratios) /
                                  std::sqrt(static_cast<double>(ratios.size()))
                            : std::numeric_limits<double>::quiet_NaN();
    std::vector<double> wValid;
    wValid.reserve(validCount);
    for (std::size_t i = 0; i < n; ++i)
        if (run.samples[i].valid) wValid.push_back(w[i]);
    rep.cvSquared = wValid.size() >= 2 ? detail::weight_cv_squared(wValid) : 0.0;
    rep.ess = static_cast<double>(n) / (1.0 + rep.cvSquared);
    rep.goodFraction = static_cast<double>(validCount) / static_cast<double>(n);
    return rep;
}

// Indicator of the exact-test rejection region: tables whose target mass is at
// most the observed table's, ties included.
inline std::function<double(const std::vector<Integer>&)> exact_test_statistic(
    const TargetDistribution& target, std::vector<Integer> observed) {
    return [target, observed = std::move(observed)](const std::vector<Integer>& table) {
        return target.compare(table, observed) <= 0 ? 1.0 : 0.0;
    };
}

// Exact conditional p-value over an explicitly enumerated fiber. Built-in
// targets aggregate in rational arithmetic; custom targets fall back to a
// log-sum-exp of their weights.
inline double exact_p_value(const std::vector<std::vector<Integer>>& fiber,
                            const TargetDistribution& target,
                            const std::vector<Integer>& observed) {
    if (fiber.empty()) throw std::invalid_argument("exact_p_value: empty fiber");
    if (target.kind() == TargetDistribution::Kind::custom) {
        std::vector<double> all;
        std::vector<double> tail;
        for (const auto& tab : fiber) {
            const double lw = target.log_weight(tab);
            all.push_back(lw);
            if (target.compare(tab, observed) <= 0) tail.push_back(lw);
        }
        if (tail.empty()) return 0.0;
        return std::exp(detail::log_sum_exp(tail) - detail::log_sum_exp(all));
    }
    Rational total(0);
    Rational tail(0);
    for (const auto& tab : fiber) {
        const Rational mass = target.exact_mass(tab);
        total += mass;
        if (target.compare(tab, observed) <= 0) tail += mass;
    }
    return (tail / total).convert_to<double>();
}

}  // namespace sistab
