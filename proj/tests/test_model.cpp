#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sistab/model/model.hpp"

using namespace sistab;

namespace {

LoglinearModelSpec two_by_two() {
    LoglinearModelSpec spec;
    spec.factors = {{"R", 2}, {"C", 2}};
    spec.marginSets = {{0}, {1}};
    return spec;
}

std::vector<Integer> ints(std::initializer_list<int> v) {
    return std::vector<Integer>(v.begin(), v.end());
}

}  // namespace

TEST_CASE("2x2 with row and column sums: four indicator rows, rank 3", "[model]") {
    auto sys = build_constraint_system(two_by_two());
    REQUIRE(sys.matrix.rows == 4);
    REQUIRE(sys.matrix.cols == 4);
    // cells row-major (0,0),(0,1),(1,0),(1,1); margin rows in declared order
    std::vector<std::vector<int>> expect = {
        {1, 1, 0, 0}, {0, 0, 1, 1}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(sys.matrix.at(i, j) == expect[i][j]);
    CHECK(exact_rank(sys.matrix) == 3);
    CHECK(sys.cellLabels[1] == "0.1");
}

TEST_CASE("3x3 independence has rank 5; 3x3x3 line sums give 27x27", "[model]") {
    LoglinearModelSpec ind;
    ind.factors = {{"R", 3}, {"C", 3}};
    ind.marginSets = {{0}, {1}};
    CHECK(exact_rank(build_constraint_system(ind).matrix) == 5);

    LoglinearModelSpec line;
    line.factors = {{"X", 3}, {"Y", 3}, {"Z", 3}};
    line.marginSets = {{0, 1}, {0, 2}, {1, 2}};
    auto sys = build_constraint_system(line);
    CHECK(sys.matrix.rows == 27);
    CHECK(sys.matrix.cols == 27);
}

TEST_CASE("override passes through verbatim; grand-total system", "[model]") {
    LoglinearModelSpec spec;
    IntMatrix ones(1, 5);
    for (auto& v : ones.a) v = 1;
    spec.weightMatrixOverride = ones;
    auto sys = build_constraint_system(spec);
    REQUIRE(sys.matrix.rows == 1);
    REQUIRE(sys.matrix.cols == 5);
    for (std::size_t j = 0; j < 5; ++j) CHECK(sys.matrix.at(0, j) == 1);
}

TEST_CASE("construction errors", "[model]") {
    LoglinearModelSpec empty;
    empty.factors = {{"A", 2}};
    CHECK_THROWS_AS(build_constraint_system(empty), std::invalid_argument);

    LoglinearModelSpec neg;
    IntMatrix m(1, 2);
    m.at(0, 0) = 1;
    m.at(0, 1) = -1;
    neg.weightMatrixOverride = m;
    CHECK_THROWS_AS(build_constraint_system(neg), std::invalid_argument);

    // column 1 is in no constraint: fiber unbounded, construction must refuse
    LoglinearModelSpec unbounded;
    IntMatrix u(1, 2);
    u.at(0, 0) = 1;
    unbounded.weightMatrixOverride = u;
    CHECK_THROWS_AS(build_constraint_system(unbounded), std::invalid_argument);
}

TEST_CASE("compute_margin basics", "[model]") {
    auto sys = build_constraint_system(two_by_two());
    TableVector zero{ints({0, 0, 0, 0}), {}};
    CHECK(compute_margin(sys, zero) == ints({0, 0, 0, 0}));

    TableVector tab{ints({1, 2, 3, 4}), {}};
    CHECK(compute_margin(sys, tab) == ints({3, 7, 4, 6}));

    LoglinearModelSpec idspec;
    idspec.weightMatrixOverride = IntMatrix::identity(3);
    auto id = build_constraint_system(idspec);
    TableVector t3{ints({5, 6, 7}), {}};
    CHECK(compute_margin(id, t3) == ints({5, 6, 7}));

    TableVector shortv{ints({1, 2}), {}};
    CHECK_THROWS_AS(compute_margin(sys, shortv), std::invalid_argument);
}

TEST_CASE("reorder_cells permutes columns and labels consistently", "[model]") {
    auto sys = build_constraint_system(two_by_two());
    std::vector<std::size_t> identityPerm = {0, 1, 2, 3};
    auto same = reorder_cells(sys, identityPerm);
    CHECK(same.matrix.a == sys.matrix.a);
    CHECK(same.order == sys.order);

    std::vector<std::size_t> rev = {3, 2, 1, 0};
    auto r = reorder_cells(sys, rev);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(r.matrix.at(i, j) == sys.matrix.at(i, 3 - j));
    CHECK(r.cellLabels[0] == "1.1");
    CHECK(r.order == std::vector<std::size_t>{3, 2, 1, 0});

    std::vector<std::size_t> bad = {0, 0, 1, 2};
    CHECK_THROWS_AS(reorder_cells(sys, bad), std::invalid_argument);
}

TEST_CASE("margin invariance under cell reordering", "[model][property]") {
    LoglinearModelSpec spec;
    spec.factors = {{"A", 2}, {"B", 3}};
    spec.marginSets = {{0}, {1}};
    auto sys = build_constraint_system(spec);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        TableVector n{std::vector<Integer>(6), {}};
        for (auto& v : n.counts) v = static_cast<int>(rng() % 9);
        TableVector permuted{std::vector<Integer>(6), {}};
        for (std::size_t j = 0; j < 6; ++j) permuted.counts[j] = n.counts[perm[j]];
        CHECK(compute_margin(reorder_cells(sys, perm), permuted) == compute_margin(sys, n));
    }
}

TEST_CASE("genotype diagonal-first order", "[model][genotype]") {
    CHECK(genotype_diagonal_first_order(1) == std::vector<std::size_t>{0});
    // k=3 row-major base: (1,1),(2,1),(2,2),(3,1),(3,2),(3,3)
    // diagonal-first: (1,1),(2,2),(3,3),(2,1),(3,1),(3,2)
    CHECK(genotype_diagonal_first_order(3) ==
          std::vector<std::size_t>{0, 2, 5, 1, 3, 4});
    auto p9 = genotype_diagonal_first_order(9);
    REQUIRE(p9.size() == 45);
    // homozygotes first
    for (int i = 1; i <= 9; ++i)
        CHECK(p9[i - 1] == static_cast<std::size_t>(i * (i - 1) / 2 + i - 1));
    // first column of heterozygotes fills positions 10..17: (2,1),(3,1),...,(9,1)
    CHECK(p9[9] == 1);   // (2,1)
    CHECK(p9[10] == 3);  // (3,1)
    CHECK(p9[16] == 36); // (9,1)
    CHECK(p9[17] == 4);  // (3,2) opens column 2
    CHECK(p9[44] == 43); // (9,8) closes the order
    std::vector<bool> seen(45, false);
    for (auto v : p9) {
        REQUIRE(v < 45);
        REQUIRE(!seen[v]);
        seen[v] = true;
    }
}

TEST_CASE("genotype allele matrix counts each allele's copies", "[model][genotype]") {
    auto A = genotype_allele_matrix(3);
    REQUIRE(A.rows == 3);
    REQUIRE(A.cols == 6);
    // cells: (1,1),(2,1),(2,2),(3,1),(3,2),(3,3)
    std::vector<std::vector<int>> expect = {
        {2, 1, 0, 1, 0, 0}, {0, 1, 2, 0, 1, 0}, {0, 0, 0, 1, 1, 2}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(A.at(i, j) == expect[i][j]);
    // every column sums to 2: a genotype carries two allele copies
    for (std::size_t j = 0; j < 6; ++j) {
        Integer s = 0;
        for (std::size_t i = 0; i < 3; ++i) s += A.at(i, j);
        CHECK(s == 2);
    }
    CHECK(genotype_cell_labels(3)[1] == "g21");
}
