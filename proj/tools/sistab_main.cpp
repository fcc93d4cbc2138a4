// Command-line front end: loads a dataset (embedded fixture name or file
// path), builds its constraint system, and runs the requested analysis.
// Reports are deterministic for a given dataset + seed + flags.
//
// Exit codes: 0 success / all checks pass, 1 usage or data error or a
// failed check, 2 budget exhausted or inconclusive, 3 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sistab/bounds/bounds.hpp"
#include "sistab/data/data.hpp"
#include "sistab/model/model.hpp"
#include "sistab/sampler/sampler.hpp"
#include "sistab/toric/toric.hpp"

namespace {

using namespace sistab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitInternal = 3;

// Collects key/value lines and renders them as either machine-readable
// "key=value" pairs or aligned human-readable text.
class Report {
  public:
    explicit Report(bool machine) : machine_(machine) {}

    void title(const std::string& t) {
        if (!machine_) out_ << t << "\n";
    }
    void kv(const std::string& key, const std::string& value) {
        if (machine_) {
            out_ << key << "=" << value << "\n";
        } else {
            out_ << "  " << key;
            for (std::size_t i = key.size(); i < 16; ++i) out_ << ' ';
            out_ << value << "\n";
        }
    }
    void kv(const std::string& key, const Integer& value) { kv(key, value.str()); }
    void kv(const std::string& key, std::size_t value) { kv(key, std::to_string(value)); }
    void kv(const std::string& key, double value) { kv(key, num(value)); }
    void raw(const std::string& line) { out_ << line << "\n"; }

    std::string num(double v) const {
        char buf[64];
        std::snprintf(buf, sizeof buf, machine_ ? "%.17g" : "%.6g", v);
        return buf;
    }
    bool machine() const { return machine_; }
    void print() const { std::cout << out_.str(); }

  private:
    bool machine_;
    std::ostringstream out_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::invalid_argument("cannot read \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Dataset load_dataset(const std::string& nameOrPath) {
    const auto& names = fixture_names();
    if (std::find(names.begin(), names.end(), nameOrPath) != names.end())
        return fixture_dataset(nameOrPath);
    return parse_dataset(read_file(nameOrPath));
}

std::vector<std::size_t> read_order_file(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::size_t> order;
    long long v = 0;
    while (in >> v) {
        if (v < 0) throw std::invalid_argument("order file: negative cell index");
        order.push_back(static_cast<std::size_t>(v));
    }
    if (!in.eof()) throw std::invalid_argument("order file: non-integer token");
    if (order.empty()) throw std::invalid_argument("order file: empty");
    return order;
}

// Common state: dataset resolved, order override applied, system built.
struct Loaded {
    Dataset ds;
    ConstraintSystem sys;
    TableVector observed;
};

Loaded load(const std::string& nameOrPath, const std::string& orderFile) {
    Loaded L;
    L.ds = load_dataset(nameOrPath);
    if (!orderFile.empty()) L.ds.order = read_order_file(orderFile);
    L.sys = dataset_system(L.ds);
    L.observed = dataset_table(L.ds, L.sys);
    return L;
}

ProposalKind proposal_kind(const std::string& name) {
    if (name == "uniform") return ProposalKind::uniform;
    if (name == "hyper" || name == "hypergeometric") return ProposalKind::hypergeometric;
    throw std::invalid_argument("unknown proposal \"" + name + "\"");
}

TargetDistribution target_for(const std::string& name, const ConstraintSystem& sys) {
    if (name == "uniform") return TargetDistribution::uniform();
    if (name == "hyper" || name == "hypergeometric")
        return TargetDistribution::hypergeometric();
    if (name == "hw" || name == "hardy-weinberg")
        return TargetDistribution::hardy_weinberg(allele_heterozygote_mask(sys.matrix));
    throw std::invalid_argument("unknown target \"" + name + "\"");
}

BoundMethod engine_kind(const std::string& name) {
    if (name == "lp") return BoundMethod::lp;
    if (name == "ip") return BoundMethod::ip;
    if (name == "shuttle") return BoundMethod::shuttle;
    throw std::invalid_argument("unknown bound engine \"" + name + "\"");
}

// flag > dataset default > command default
std::string resolve(const std::string& flag, const std::string& fromDataset,
                    const std::string& fallback) {
    if (!flag.empty()) return flag;
    if (!fromDataset.empty()) return fromDataset;
    return fallback;
}

std::string outcome_str(CheckOutcome o) {
    switch (o) {
        case CheckOutcome::pass: return "PASS";
        case CheckOutcome::fail: return "FAIL";
        case CheckOutcome::inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

int outcome_exit(std::initializer_list<CheckOutcome> outcomes) {
    int worst = kExitOk;
    for (CheckOutcome o : outcomes) {
        if (o == CheckOutcome::fail) worst = std::max(worst, kExitUsage);
        if (o == CheckOutcome::inconclusive) worst = std::max(worst, kExitInconclusive);
    }
    return worst;
}

std::string join_counts(const std::vector<Integer>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += v[i].str();
    }
    return s;
}

std::string join_labels(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += v[i];
    }
    return s;
}

struct SamplingFlags {
    std::string dataset;
    std::string order;
    std::string proposal;
    std::string target;
    std::string engine = "lp";
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::string format = "text";
};

void add_common(CLI::App* cmd, SamplingFlags& f, bool withTarget) {
    cmd->add_option("dataset", f.dataset, "fixture name or dataset file")->required();
    cmd->add_option("--samples", f.samples, "number of sampled tables");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--proposal", f.proposal, "uniform | hyper");
    if (withTarget) cmd->add_option("--target", f.target, "uniform | hyper | hw");
    cmd->add_option("--engine", f.engine, "lp | ip | shuttle");
    cmd->add_option("--order", f.order, "cell-order permutation file");
    cmd->add_option("--jobs", f.jobs, "worker threads");
    cmd->add_option("--format", f.format, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}));
}

SISRun sample(const Loaded& L, const SamplingFlags& f, const std::string& proposal,
              const TargetDistribution& target) {
    SISConfig cfg;
    cfg.system = &L.sys;
    cfg.margin = L.observed.margin;
    cfg.proposal = proposal_kind(proposal);
    cfg.target = target;
    cfg.engine.method = engine_kind(f.engine);
    cfg.sampleCount = f.samples;
    cfg.seed = f.seed;
    cfg.jobs = f.jobs;
    return run_sis(cfg);
}

void report_run(Report& rep, const Loaded& L, const SamplingFlags& f,
                const std::string& proposal, const SISRun& run,
                const EstimateReport& est) {
    std::size_t valid = 0;
    for (const auto& s : run.samples) valid += s.valid;
    rep.kv("dataset", L.ds.name);
    rep.kv("cells", L.sys.matrix.cols);
    rep.kv("constraints", L.sys.matrix.rows);
    rep.kv("samples", f.samples);
    rep.kv("valid", valid);
    rep.kv("seed", std::to_string(f.seed));
    rep.kv("proposal", proposal);
    rep.kv("engine", f.engine);
    rep.kv("good_fraction", est.goodFraction);
    rep.kv("cv2", est.cvSquared);
    rep.kv("ess", est.ess);
}

int cmd_count(const SamplingFlags& f) {
    Loaded L = load(f.dataset, f.order);
    Report rep(f.format == "machine");
    const std::string proposal = resolve(f.proposal, L.ds.proposal, "uniform");
    SISRun run = sample(L, f, proposal, TargetDistribution::uniform());
    EstimateReport est = estimate_count(run);
    rep.title("table count estimate");
    if (rep.machine()) rep.kv("command", "count");
    report_run(rep, L, f, proposal, run, est);
    rep.kv("estimate", est.value);
    rep.kv("se", est.standardError);
    rep.print();
    return kExitOk;
}

int cmd_pvalue(const SamplingFlags& f) {
    Loaded L = load(f.dataset, f.order);
    Report rep(f.format == "machine");
    const std::string proposal = resolve(f.proposal, L.ds.proposal, "hypergeometric");
    const std::string targetName = resolve(f.target, L.ds.target, "hypergeometric");
    TargetDistribution target = target_for(targetName, L.sys);
    SISRun run = sample(L, f, proposal, target);
    auto stat = exact_test_statistic(target, L.observed.counts);
    EstimateReport est = estimate_mu(run, stat, target);
    rep.title("exact-test p-value estimate");
    if (rep.machine()) rep.kv("command", "pvalue");
    report_run(rep, L, f, proposal, run, est);
    rep.kv("target", targetName);
    rep.kv("pvalue", est.value);
    rep.kv("se", est.standardError);
    rep.print();
    return kExitOk;
}

int cmd_enumerate(const std::string& dataset, const std::string& orderFile,
                  std::size_t budget, const std::string& format, bool sizeOnly) {
    Loaded L = load(dataset, orderFile);
    Report rep(format == "machine");
    auto fiber = enumerate_fiber(L.sys, L.observed.margin, budget);
    rep.title("fiber enumeration");
    if (rep.machine()) rep.kv("command", "enumerate");
    rep.kv("dataset", L.ds.name);
    rep.kv("cell_order", join_labels(L.sys.cellLabels));
    if (!sizeOnly)
        for (const auto& t : fiber)
            rep.kv("table", join_counts(t.counts));
    rep.kv("fiber_size", fiber.size());
    rep.print();
    return kExitOk;
}

// The default move set for subbasis checks: the lex-basis elements that pass
// the first-support exponent scan (for a basis that fails the interval
// check, this drops exactly the offending elements).
MoveSet interval_subset_moves(const GroebnerBasis& basis, std::size_t* dropped) {
    MoveSet moves;
    *dropped = 0;
    for (const auto& b : basis.elements) {
        std::size_t v = 0;
        while (v < b.positivePart.size() && b.positivePart.exponents[v] == 0 &&
               b.negativePart.exponents[v] == 0)
            ++v;
        const bool squareFree =
            v == b.positivePart.size() || (b.positivePart.exponents[v] <= 1 &&
                                           b.negativePart.exponents[v] <= 1);
        if (squareFree) moves.moves.push_back(binomial_move(b));
        else ++*dropped;
    }
    return moves;
}

int cmd_check(const std::string& dataset, const std::string& which,
              const std::string& orderFile, const std::string& movesFile,
              std::size_t budget, const std::string& format) {
    Loaded L = load(dataset, orderFile);
    Report rep(format == "machine");
    rep.title("condition check: " + which);
    if (rep.machine()) {
        rep.kv("command", "check");
        rep.kv("which", which);
    }
    rep.kv("dataset", L.ds.name);
    BuchbergerLimits limits;
    limits.pairBudget = budget;

    auto load_moves = [&](std::size_t* dropped) {
        *dropped = 0;
        if (!movesFile.empty()) {
            std::istringstream in(read_file(movesFile));
            rep.kv("moves_source", movesFile);
            return read_move_set(in);
        }
        auto basis = toric_ideal(L.sys, lex_order(L.sys.matrix.cols), limits);
        rep.kv("moves_source", "square-free subset of the lex basis");
        return interval_subset_moves(basis, dropped);
    };

    if (which == "intervals") {
        auto r = check_interval_property(L.sys, limits);
        rep.kv("outcome", outcome_str(r.outcome));
        if (r.outcome != CheckOutcome::inconclusive)
            rep.kv("basis_size", r.basis.elements.size());
        if (r.outcome == CheckOutcome::fail) {
            rep.kv("witness_element", r.witnessElement);
            rep.kv("witness_cell", L.sys.cellLabels[r.witnessVariable]);
            rep.kv("witness_exponent", std::to_string(r.witnessExponent));
        }
        rep.print();
        return outcome_exit({r.outcome});
    }
    if (which == "subbasis") {
        std::size_t dropped = 0;
        MoveSet moves = load_moves(&dropped);
        rep.kv("moves", moves.moves.size());
        if (movesFile.empty()) rep.kv("dropped_elements", dropped);
        auto r = check_subbasis_intervals(moves, L.sys, limits);
        rep.kv("self_basis", outcome_str(r.selfBasis));
        rep.kv("square_free", outcome_str(r.squareFree));
        rep.kv("saturation_closed", outcome_str(r.saturationClosed));
        rep.kv("certified", r.certified() ? "true" : "false");
        if (r.witnessElement != kNoWitness) rep.kv("witness_element", r.witnessElement);
        if (r.witnessVariable != kNoWitness)
            rep.kv("witness_cell", L.sys.cellLabels[r.witnessVariable]);
        rep.print();
        return outcome_exit({r.selfBasis, r.squareFree, r.saturationClosed});
    }
    if (which == "markov") {
        std::size_t dropped = 0;
        MoveSet moves = load_moves(&dropped);
        rep.kv("moves", moves.moves.size());
        auto support = positive_support(L.sys, L.observed.margin);
        rep.kv("support_size", support.indices.size());
        const bool ok = is_markov_subbasis(moves, L.sys, support, limits);
        rep.kv("markov_subbasis", ok ? "true" : "false");
        rep.print();
        return ok ? kExitOk : kExitUsage;
    }
    if (which == "lpexact") {
        auto r = check_lp_exactness(L.sys, limits);
        rep.kv("lower", outcome_str(r.lower));
        rep.kv("upper", outcome_str(r.upper));
        if (r.lower == CheckOutcome::fail) rep.kv("lower_witness", r.lowerWitness);
        if (r.upper == CheckOutcome::fail)
            rep.kv("upper_fail_cell", L.sys.cellLabels[r.upperFailCell]);
        rep.print();
        return outcome_exit({r.lower, r.upper});
    }
    if (which == "bruteforce") {
        auto r = verify_sequential_interval(L.sys, L.observed.margin, budget);
        rep.kv("fiber_size", r.fiberSize);
        rep.kv("holds", r.holds ? "true" : "false");
        if (!r.holds) {
            rep.kv("fail_depth", r.failDepth);
            rep.kv("fail_prefix", join_counts(r.failPrefix));
            rep.kv("observed_values", join_counts(r.observedValues));
        }
        rep.print();
        return r.holds ? kExitOk : kExitUsage;
    }
    throw std::invalid_argument(
        "unknown check \"" + which +
        "\" (intervals | subbasis | markov | lpexact | bruteforce)");
}

int cmd_bounds(const std::string& dataset, const std::string& orderFile,
               const std::string& prefixCsv, const std::string& engine,
               const std::string& format) {
    Loaded L = load(dataset, orderFile);
    Report rep(format == "machine");
    std::vector<Integer> prefix;
    if (!prefixCsv.empty()) {
        std::istringstream in(prefixCsv);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            try {
                prefix.emplace_back(tok);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad prefix entry \"" + tok + "\"");
            }
            if (prefix.back() < 0)
                throw std::invalid_argument("prefix entries must be non-negative");
        }
    }
    if (prefix.size() > L.sys.matrix.cols)
        throw std::invalid_argument("prefix longer than the table");
    rep.title("cell bounds");
    if (rep.machine()) rep.kv("command", "bounds");
    rep.kv("dataset", L.ds.name);
    rep.kv("engine", engine);
    rep.kv("prefix_cells", prefix.size());
    BoundEngineConfig cfg;
    cfg.method = engine_kind(engine);
    BoundEngine eng(L.sys, cfg);
    PrefixState st = make_prefix_state(L.sys, L.observed.margin, prefix);
    for (std::size_t c = prefix.size(); c < L.sys.matrix.cols; ++c) {
        auto b = eng.bounds(st, c);
        std::string line = L.sys.cellLabels[c];
        line += b.feasible ? " " + b.intLower.str() + " " + b.intUpper.str()
                           : " infeasible";
        if (rep.machine()) rep.raw("interval=" + line);
        else rep.kv(L.sys.cellLabels[c],
                    b.feasible ? "[" + b.intLower.str() + ", " + b.intUpper.str() + "]"
                               : "infeasible");
    }
    rep.print();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequential importance sampling for constrained tables"};
    app.require_subcommand(1);

    SamplingFlags countF, pvalueF;
    add_common(app.add_subcommand("count", "estimate the number of tables"), countF,
               false);
    add_common(app.add_subcommand("pvalue", "estimate the exact-test p-value"),
               pvalueF, true);

    std::string enumDataset, enumOrder, enumFormat = "text";
    std::size_t enumBudget = 1000000;
    bool enumSizeOnly = false;
    auto* en = app.add_subcommand("enumerate", "list the whole fiber");
    en->add_option("dataset", enumDataset, "fixture name or dataset file")->required();
    en->add_option("--budget", enumBudget, "max tables before giving up");
    en->add_option("--order", enumOrder, "cell-order permutation file");
    en->add_flag("--size-only", enumSizeOnly, "print the size, not every table");
    en->add_option("--format", enumFormat, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}));

    std::string checkDataset, checkWhich, checkOrder, checkMoves, checkFormat = "text";
    std::size_t checkBudget = BuchbergerLimits{}.pairBudget;
    auto* ck = app.add_subcommand("check", "verify sampling-order conditions");
    ck->add_option("dataset", checkDataset, "fixture name or dataset file")->required();
    ck->add_option("which", checkWhich,
                   "intervals | subbasis | markov | lpexact | bruteforce")
        ->required();
    ck->add_option("--budget", checkBudget, "s-pair / enumeration budget");
    ck->add_option("--moves", checkMoves, "move-set file (one move per line)");
    ck->add_option("--order", checkOrder, "cell-order permutation file");
    ck->add_option("--format", checkFormat, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}));

    std::string bDataset, bOrder, bPrefix, bEngine = "lp", bFormat = "text";
    auto* bd = app.add_subcommand("bounds", "interval bounds given a prefix");
    bd->add_option("dataset", bDataset, "fixture name or dataset file")->required();
    bd->add_option("--prefix", bPrefix, "comma-separated leading cell values");
    bd->add_option("--engine", bEngine, "lp | ip | shuttle");
    bd->add_option("--order", bOrder, "cell-order permutation file");
    bd->add_option("--format", bFormat, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand("count")) return cmd_count(countF);
        if (app.got_subcommand("pvalue")) return cmd_pvalue(pvalueF);
        if (app.got_subcommand("enumerate"))
            return cmd_enumerate(enumDataset, enumOrder, enumBudget, enumFormat,
                                 enumSizeOnly);
        if (app.got_subcommand("check"))
            return cmd_check(checkDataset, checkWhich, checkOrder, checkMoves,
                             checkBudget, checkFormat);
        if (app.got_subcommand("bounds"))
            return cmd_bounds(bDataset, bOrder, bPrefix, bEngine, bFormat);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
