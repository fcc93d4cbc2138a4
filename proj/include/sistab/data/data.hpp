#pragma once

#include <json.hpp>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sistab/model/model.hpp"

namespace sistab {

// One observed table plus the model that fixes its margins, as stored on
// disk. The file is a versioned JSON object; parse_dataset validates
// everything it reads and serialize_dataset emits a canonical form (fixed
// key order, two-space indent, trailing newline), so parse -> serialize ->
// parse is a fixpoint and canonical files are byte-stable.
struct Dataset {
    std::string name;
    std::string description;
    LoglinearModelSpec model;
    std::vector<Integer> counts;     // declared cell order
    std::vector<std::size_t> order;  // sampling permutation; empty = as declared
    std::vector<Integer> margin;     // stored sufficient statistic; empty = none
    std::string proposal;            // "", "uniform", "hypergeometric"
    std::string target;              // "", "uniform", "hypergeometric", "hardy-weinberg"
};

namespace detail {

using djson = nlohmann::ordered_json;

inline Integer json_count(const djson& v, const char* what) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw std::invalid_argument(std::string("dataset: ") + what +
                                    " must be a non-negative integer");
    return Integer(v.get<long long>());
}

inline void require_keys(const djson& obj, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("dataset: unknown key \"" + key + "\"");
    }
}

}  // namespace detail

// Constraint system in the order the sampler walks: the declared model,
// columns permuted by the order field when present.
inline ConstraintSystem dataset_system(const Dataset& ds) {
    ConstraintSystem sys = build_constraint_system(ds.model);
    if (!ds.order.empty()) sys = reorder_cells(sys, ds.order);
    return sys;
}

// Observed table in the system's cell order, margin filled in.
inline TableVector dataset_table(const Dataset& ds, const ConstraintSystem& sys) {
    if (ds.counts.size() != sys.matrix.cols)
        throw std::invalid_argument("dataset: counts length != cell count");
    TableVector tv;
    tv.counts.resize(sys.matrix.cols);
    for (std::size_t j = 0; j < sys.matrix.cols; ++j)
        tv.counts[j] = ds.counts[sys.order[j]];
    tv.margin = compute_margin(sys, tv);
    return tv;
}

inline Dataset parse_dataset(const std::string& text) {
    detail::djson j;
    try {
        j = detail::djson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("dataset: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("dataset: not a JSON object");
    detail::require_keys(j, {"format", "version", "name", "description", "factors",
                             "margin_sets", "matrix", "cell_labels", "order",
                             "proposal", "target", "counts", "margin"});
    if (j.value("format", "") != "sistab-dataset")
        throw std::invalid_argument("dataset: missing format tag \"sistab-dataset\"");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != 1)
        throw std::invalid_argument("dataset: unsupported format version");

    Dataset ds;
    if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
        throw std::invalid_argument("dataset: name required");
    ds.name = j["name"].get<std::string>();
    ds.description = j.value("description", "");

    const bool hasFactors = j.contains("factors");
    const bool hasMatrix = j.contains("matrix");
    if (hasFactors == hasMatrix)
        throw std::invalid_argument("dataset: need exactly one of factors, matrix");
    if (hasFactors) {
        if (j.contains("cell_labels"))
            throw std::invalid_argument("dataset: cell_labels only valid with matrix");
        if (!j.contains("margin_sets"))
            throw std::invalid_argument("dataset: factors need margin_sets");
        for (const auto& f : j["factors"]) {
            if (!f.is_array() || f.size() != 2 || !f[0].is_string() ||
                !f[1].is_number_integer() || f[1].get<int>() < 1)
                throw std::invalid_argument(
                    "dataset: each factor is [name, cardinality >= 1]");
            ds.model.factors.emplace_back(f[0].get<std::string>(), f[1].get<int>());
        }
        auto factor_index = [&](const std::string& name) {
            for (std::size_t i = 0; i < ds.model.factors.size(); ++i)
                if (ds.model.factors[i].first == name) return i;
            throw std::invalid_argument("dataset: unknown factor \"" + name + "\"");
        };
        for (const auto& set : j["margin_sets"]) {
            if (!set.is_array() || set.empty())
                throw std::invalid_argument("dataset: margin set must list factor names");
            std::vector<std::size_t> idx;
            for (const auto& nm : set) {
                if (!nm.is_string())
                    throw std::invalid_argument("dataset: margin set entries are names");
                idx.push_back(factor_index(nm.get<std::string>()));
            }
            std::sort(idx.begin(), idx.end());
            if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
                throw std::invalid_argument("dataset: duplicate factor in margin set");
            ds.model.marginSets.push_back(std::move(idx));
        }
    } else {
        if (j.contains("margin_sets"))
            throw std::invalid_argument("dataset: margin_sets only valid with factors");
        const auto& rows = j["matrix"];
        if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
            throw std::invalid_argument("dataset: matrix must be an array of rows");
        IntMatrix A(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < A.rows; ++i) {
            if (!rows[i].is_array() || rows[i].size() != A.cols)
                throw std::invalid_argument("dataset: ragged matrix");
            for (std::size_t k = 0; k < A.cols; ++k)
                A.at(i, k) = detail::json_count(rows[i][k], "matrix entry");
        }
        ds.model.weightMatrixOverride = std::move(A);
        if (j.contains("cell_labels")) {
            for (const auto& l : j["cell_labels"]) {
                if (!l.is_string())
                    throw std::invalid_argument("dataset: cell labels are strings");
                ds.model.cellLabels.push_back(l.get<std::string>());
            }
        }
    }

    ConstraintSystem sys = build_constraint_system(ds.model);
    const std::size_t d = sys.matrix.cols;

    if (!j.contains("counts") || !j["counts"].is_array())
        throw std::invalid_argument("dataset: counts required");
    for (const auto& v : j["counts"]) ds.counts.push_back(detail::json_count(v, "count"));
    if (ds.counts.size() != d)
        throw std::invalid_argument("dataset: counts length != cell count");

    if (j.contains("order")) {
        std::vector<bool> seen(d, false);
        for (const auto& v : j["order"]) {
            if (!v.is_number_integer() || v.get<long long>() < 0 ||
                v.get<unsigned long long>() >= d)
                throw std::invalid_argument("dataset: order entries are cell indices");
            const std::size_t p = v.get<unsigned long long>();
            if (seen[p]) throw std::invalid_argument("dataset: order repeats a cell");
            seen[p] = true;
            ds.order.push_back(p);
        }
        if (ds.order.size() != d)
            throw std::invalid_argument("dataset: order must list every cell");
    }

    ds.proposal = j.value("proposal", "");
    if (!ds.proposal.empty() && ds.proposal != "uniform" &&
        ds.proposal != "hypergeometric")
        throw std::invalid_argument("dataset: unknown proposal \"" + ds.proposal + "\"");
    ds.target = j.value("target", "");
    if (!ds.target.empty() && ds.target != "uniform" &&
        ds.target != "hypergeometric" && ds.target != "hardy-weinberg")
        throw std::invalid_argument("dataset: unknown target \"" + ds.target + "\"");

    if (j.contains("margin")) {
        for (const auto& v : j["margin"]) ds.margin.push_back(detail::json_count(v, "margin"));
        TableVector tv;
        tv.counts = ds.counts;
        if (ds.margin != compute_margin(sys, tv))
            throw std::invalid_argument(
                "dataset: stored margin does not match the counts");
    }
    return ds;
}

inline std::string serialize_dataset(const Dataset& ds) {
    detail::djson j;
    j["format"] = "sistab-dataset";
    j["version"] = 1;
    j["name"] = ds.name;
    if (!ds.description.empty()) j["description"] = ds.description;
    if (ds.model.weightMatrixOverride) {
        const IntMatrix& A = *ds.model.weightMatrixOverride;
        detail::djson rows = detail::djson::array();
        for (std::size_t i = 0; i < A.rows; ++i) {
            detail::djson row = detail::djson::array();
            for (std::size_t k = 0; k < A.cols; ++k)
                row.push_back(A.at(i, k).convert_to<long long>());
            rows.push_back(std::move(row));
        }
        j["matrix"] = std::move(rows);
        if (!ds.model.cellLabels.empty()) j["cell_labels"] = ds.model.cellLabels;
    } else {
        detail::djson factors = detail::djson::array();
        for (const auto& [name, card] : ds.model.factors)
            factors.push_back(detail::djson::array({name, card}));
        j["factors"] = std::move(factors);
        detail::djson sets = detail::djson::array();
        for (const auto& set : ds.model.marginSets) {
            detail::djson names = detail::djson::array();
            for (std::size_t f : set) names.push_back(ds.model.factors[f].first);
            sets.push_back(std::move(names));
        }
        j["margin_sets"] = std::move(sets);
    }
    if (!ds.order.empty()) j["order"] = ds.order;
    if (!ds.proposal.empty()) j["proposal"] = ds.proposal;
    if (!ds.target.empty()) j["target"] = ds.target;
    detail::djson counts = detail::djson::array();
    for (const auto& v : ds.counts) counts.push_back(v.convert_to<long long>());
    j["counts"] = std::move(counts);
    if (!ds.margin.empty()) {
        detail::djson margin = detail::djson::array();
        for (const auto& v : ds.margin) margin.push_back(v.convert_to<long long>());
        j["margin"] = std::move(margin);
    }
    return j.dump(2) + "\n";
}

// Heterozygote cells of an allele-count system: a column with one entry 2 is
// a homozygote, a column with two entries 1 is a heterozygote. Anything else
// is not an allele-count column and the hardy-weinberg target is undefined.
inline std::vector<char> allele_heterozygote_mask(const IntMatrix& A) {
    std::vector<char> mask(A.cols, 0);
    for (std::size_t j = 0; j < A.cols; ++j) {
        int ones = 0, twos = 0, other = 0;
        for (std::size_t i = 0; i < A.rows; ++i) {
            const Integer& v = A.at(i, j);
            if (v == 0) continue;
            if (v == 1) ++ones;
            else if (v == 2) ++twos;
            else ++other;
        }
        if (other == 0 && twos == 1 && ones == 0) mask[j] = 0;
        else if (other == 0 && twos == 0 && ones == 2) mask[j] = 1;
        else throw std::domain_error("column " + std::to_string(j) +
                                     " is not an allele-count column");
    }
    return mask;
}

namespace detail {

inline std::vector<Integer> counts_of(std::initializer_list<long long> xs) {
    std::vector<Integer> out;
    out.reserve(xs.size());
    for (long long x : xs) out.emplace_back(x);
    return out;
}

// Oesophageal cancer case/control study, ages 35-44: response (control,
// case) by tobacco and alcohol consumption levels, all two-way margins
// fixed. Fiber has 25 tables.
inline Dataset fixture_breslow() {
    Dataset ds;
    ds.name = "breslow-day-35-44";
    ds.description =
        "Oesophageal cancer case/control data, ages 35-44 (Breslow-Day, "
        "Ille-et-Vilaine study); all two-way margins fixed.";
    ds.model.factors = {{"response", 2}, {"tobacco", 4}, {"alcohol", 4}};
    ds.model.marginSets = {{1, 2}, {0, 2}, {0, 1}};
    ds.counts = counts_of({60, 35, 11, 1, 13, 20, 6, 3, 7, 13, 2, 2, 8, 8, 1, 0,
                           0, 0, 0, 2, 1, 3, 0, 0, 0, 1, 0, 2, 0, 0, 0, 0});
    return ds;
}

// Abortion opinion survey: race, sex, opinion, age band; all four three-way
// margins fixed (the all-three-way-interaction model).
inline Dataset fixture_abortion() {
    Dataset ds;
    ds.name = "abortion-opinion";
    ds.description =
        "Abortion opinion survey (Christensen): race by sex by opinion by "
        "age band; all four three-way margins fixed.";
    ds.model.factors = {{"race", 2}, {"sex", 2}, {"opinion", 3}, {"age", 6}};
    ds.model.marginSets = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    ds.counts = counts_of(
        {96,  138, 117, 75,  72,  83,  44, 64, 56, 48, 49, 60, 1,  2,  6,  5,  6,  8,
         140, 171, 152, 101, 102, 111, 43, 65, 58, 51, 58, 67, 1,  4,  9,  9,  10, 16,
         24,  18,  16,  12,  6,   4,   5,  7,  7,  6,  8,  10, 2,  1,  3,  4,  3,  4,
         21,  25,  20,  17,  14,  13,  4,  6,  5,  5,  5,  5,  1,  2,  1,  1,  1,  1});
    return ds;
}

// Six binary risk factors for coronary thrombosis in a cohort of 1841
// autoworkers; three five-way and three four-way margins fixed. Fiber has
// 841 tables.
inline Dataset fixture_czech() {
    Dataset ds;
    ds.name = "czech-autoworkers";
    ds.description =
        "Czech autoworker coronary thrombosis risk-factor study: six binary "
        "factors; margins F.E.D.C.A, F.E.D.B.A, E.D.C.B.A, F.D.C.B, F.C.B.A, "
        "F.E.C.B fixed.";
    ds.model.factors = {{"F", 2}, {"E", 2}, {"D", 2}, {"C", 2}, {"B", 2}, {"A", 2}};
    ds.model.marginSets = {{0, 1, 2, 3, 5}, {0, 1, 2, 4, 5}, {1, 2, 3, 4, 5},
                           {0, 2, 3, 4},    {0, 3, 4, 5},    {0, 1, 3, 4}};
    ds.counts = counts_of(
        {44, 40, 112, 67, 129, 145, 12, 23, 35, 12, 80, 33, 109, 67, 7,  9,
         23, 32, 70,  66, 50,  80,  7,  13, 24, 25, 73, 57, 51,  63, 7,  16,
         5,  7,  21,  9,  9,   17,  1,  4,  4,  3,  11, 8,  14,  17, 5,  2,
         7,  3,  14,  14, 9,   16,  2,  3,  4,  0,  13, 11, 5,   14, 4,  4});
    return ds;
}

// 3x3x3 table under the no-three-way-interaction model: all three two-way
// margins (line sums) fixed. Fiber has 1,919,899,782,953 tables.
inline Dataset fixture_dsmall() {
    Dataset ds;
    ds.name = "dsmall-3x3x3";
    ds.description =
        "3x3x3 table (Diaconis-Sturmfels example) under no-three-way "
        "interaction; all line sums fixed.";
    ds.model.factors = {{"A", 3}, {"B", 3}, {"C", 3}};
    ds.model.marginSets = {{0, 1}, {0, 2}, {1, 2}};
    ds.counts = counts_of({9,  16, 41, 8,  8,  46, 11, 14, 38, 85, 52, 105, 35, 29,
                           54, 47, 35, 115, 77, 30, 38, 37, 15, 22, 25, 21, 42});
    return ds;
}

// Rhesus blood-group genotype counts over nine alleles. Constraints are the
// nine allele counts (diagonal cells weighted twice). The order field walks
// diagonal cells first and then the below-diagonal cells column by column,
// which keeps the sampling intervals gap-free.
inline Dataset fixture_rhesus() {
    Dataset ds;
    ds.name = "rhesus-genotype";
    ds.description =
        "Rhesus genotype pair counts, nine alleles (Cavalli-Sforza-Bodmer "
        "data); allele-count constraints for a Hardy-Weinberg test. Order: "
        "diagonal first, then below-diagonal by columns.";
    const int k = 9;
    ds.model.weightMatrixOverride = genotype_allele_matrix(k);
    ds.model.cellLabels = genotype_cell_labels(k);
    ds.counts = counts_of({1236,
                           120,  3,
                           18,   0,   0,
                           982,  55,  7,    249,
                           32,   1,   0,    12,   0,
                           2582, 132, 20,   1162, 29, 1312,
                           6,    0,   0,    4,    0,  4,    0,
                           2,    0,   0,    0,    0,  0,    0, 0,
                           115,  5,   2,    53,   1,  149,  0, 0, 4});
    auto declared = [](int i, int j) {  // 1-based (row, col), row-major triangle
        return static_cast<std::size_t>(i * (i - 1) / 2 + (j - 1));
    };
    for (int i = 1; i <= k; ++i) ds.order.push_back(declared(i, i));
    for (int j = 1; j < k; ++j)
        for (int i = j + 1; i <= k; ++i) ds.order.push_back(declared(i, j));
    ds.target = "hardy-weinberg";
    return ds;
}

// Synthetic route counts on a triangle network: two directed routes per
// edge, then one slack cell per edge, so the constraint matrix is the
// routing block next to an identity. The counts are made up for testing,
// not measurements.
inline Dataset fixture_routing() {
    Dataset ds;
    ds.name = "routing-synthetic";
    ds.description =
        "Synthetic traffic on a triangle network: per-edge aggregate counts "
        "constrain two directed routes per edge plus one slack cell per "
        "edge. Counts are synthetic test data.";
    IntMatrix A(3, 9);
    const int edgeOf[6] = {0, 0, 1, 1, 2, 2};
    for (int r = 0; r < 6; ++r) A.at(edgeOf[r], r) = 1;
    for (int e = 0; e < 3; ++e) A.at(e, 6 + e) = 1;
    ds.model.weightMatrixOverride = std::move(A);
    ds.model.cellLabels = {"r12", "r21", "r13", "r31", "r23", "r32",
                           "s12", "s13", "s23"};
    ds.counts = counts_of({3, 1, 2, 0, 4, 2, 1, 2, 0});
    return ds;
}

}  // namespace detail

inline const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = {
        "breslow-day-35-44", "abortion-opinion", "czech-autoworkers",
        "dsmall-3x3x3",      "rhesus-genotype",  "routing-synthetic"};
    return names;
}

// Embedded copy of fixtures/<name>.json. The margin field is filled from
// the counts here; the files carry it spelled out so hand edits that break
// the counts/margin pairing fail at parse time.
inline Dataset fixture_dataset(const std::string& name) {
    Dataset ds;
    if (name == "breslow-day-35-44") ds = detail::fixture_breslow();
    else if (name == "abortion-opinion") ds = detail::fixture_abortion();
    else if (name == "czech-autoworkers") ds = detail::fixture_czech();
    else if (name == "dsmall-3x3x3") ds = detail::fixture_dsmall();
    else if (name == "rhesus-genotype") ds = detail::fixture_rhesus();
    else if (name == "routing-synthetic") ds = detail::fixture_routing();
    else throw std::invalid_argument("unknown fixture \"" + name + "\"");
    TableVector tv;
    tv.counts = ds.counts;
    ds.margin = compute_margin(build_constraint_system(ds.model), tv);
    return ds;
}

}  // namespace sistab
