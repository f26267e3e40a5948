#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "triage/errors.hpp"

using namespace triage;
using testing_support::make_matrix;

TEST_SUITE("corpus") {

TEST_CASE("parse a small table") {
    std::istringstream in(",a,b,c\nx,1,0,1\ny,0,0,1\n");
    const auto m = parse_symptom_table(in);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(0, 2) == 1);
    CHECK(m.at(1, 2) == 1);
    CHECK(m.chemical_names() == std::vector<std::string>{"x", "y"});
    CHECK(m.symptom_names() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("round trip through CSV keeps quoted names") {
    auto m = make_matrix({{1, 0}, {0, 1}}, {"fever, high", "rash \"mild\""});
    std::ostringstream out;
    write_symptom_table(out, m);
    std::istringstream in(out.str());
    CHECK(parse_symptom_table(in) == m);
}

TEST_CASE("bad cells name their location") {
    std::istringstream in(",a,b\nx,1,0\ny,2,1\n");
    try {
        parse_symptom_table(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("'a'") != std::string::npos);
    }
}

TEST_CASE("ragged rows and duplicate names are rejected") {
    std::istringstream ragged(",a,b\nx,1\n");
    CHECK_THROWS_AS(parse_symptom_table(ragged), ParseError);
    std::istringstream dup_chem(",a,b\nx,1,0\nx,0,1\n");
    CHECK_THROWS_AS(parse_symptom_table(dup_chem), ValidationError);
    std::istringstream dup_symptom(",a,a\nx,1,0\n");
    CHECK_THROWS_AS(parse_symptom_table(dup_symptom), ValidationError);
}

TEST_CASE("dedup keeps distinct matrices intact") {
    auto m = make_matrix({{1, 0}, {0, 1}, {1, 1}});
    const auto r = deduplicate_profiles(m);
    CHECK(r.matrix == m);
    for (const auto& members : r.summary.members) CHECK(members.size() == 1);
}

TEST_CASE("dedup collapses identical rows onto the first") {
    auto m = make_matrix({{1, 0, 1}, {0, 1, 1}, {1, 1, 0}, {0, 1, 1}});
    const auto r = deduplicate_profiles(m);
    REQUIRE(r.matrix.rows() == 3);
    CHECK(r.summary.kept == std::vector<std::size_t>{0, 1, 2});
    CHECK(r.summary.members[1] == std::vector<std::size_t>{1, 3});
    CHECK(r.summary.member_names[1] == std::vector<std::string>{"chem1", "chem3"});
    // Exhaustive pairwise check: no two retained rows match.
    for (std::size_t a = 0; a < r.matrix.rows(); ++a)
        for (std::size_t b = a + 1; b < r.matrix.rows(); ++b)
            CHECK(r.matrix.values().row(a) != r.matrix.values().row(b));
}

TEST_CASE("replication") {
    auto m = make_matrix({{1, 0}, {0, 1}, {1, 1}});
    const auto p = replicate_rows(m, 2);
    REQUIRE(p.rows() == 6);
    std::multiset<std::size_t> labels(p.labels().begin(), p.labels().end());
    CHECK(labels == std::multiset<std::size_t>{0, 0, 1, 1, 2, 2});
    const auto once = replicate_rows(m, 1);
    CHECK(once.labels() == std::vector<std::size_t>{0, 1, 2});
    CHECK(once.features() == m.values());
    CHECK_THROWS_AS(replicate_rows(m, 0), ArgumentError);
}

TEST_CASE("split sizes, determinism and partition") {
    auto big = synth_matrix(311, 12, std::vector<double>(12, 0.5), 1);
    const auto p = replicate_rows(big, 5);
    const auto s = split_train_test(p, 0.7, 9);
    CHECK(s.train.rows() == 1088);
    CHECK(s.test.rows() == 467);

    auto small = replicate_rows(make_matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}}), 2);
    const auto a = split_train_test(small, 0.7, 42);
    const auto b = split_train_test(small, 0.7, 42);
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.test_rows == b.test_rows);
    std::vector<std::size_t> all = a.train_rows;
    all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(a.train.rows() == 7);

    CHECK_THROWS_AS(split_train_test(PatientSet(BinaryMatrix(0, 2), {}, 1, 0.0, 0), 0.7, 1), ArgumentError);
}

TEST_CASE("patient sets") {
    auto m = make_matrix({{1, 0, 1}, {0, 1, 1}});
    const auto clean = generate_patient_set(m, 4, 0.0, 3);
    REQUIRE(clean.rows() == 8);
    for (std::size_t i = 0; i < clean.rows(); ++i) {
        CHECK(clean.features().row(i) == m.values().row(clean.labels()[i]));
    }
    const auto d = flip_density_summary(clean, m);
    CHECK(d.mean == 0.0);
    CHECK(d.histogram[0] == 1.0);
    CHECK_THROWS_AS(generate_patient_set(m, 4, 1.5, 3), ArgumentError);
    CHECK(generate_patient_set(m, 4, 0.3, 3).features() == generate_patient_set(m, 4, 0.3, 3).features());
}

TEST_CASE("flip density counts Hamming distance") {
    auto m = make_matrix({{1, 0, 1, 0}, {0, 0, 0, 0}});
    BinaryMatrix f(2, 4);
    f << 1, 0, 1, 0,
         1, 1, 0, 0;
    PatientSet p(f, {0, 1}, 2, 0.0, 0);
    const auto d = flip_density_summary(p, m);
    CHECK(d.counts == std::vector<std::size_t>{0, 2});
    CHECK(d.histogram.size() == 5);
    CHECK(d.histogram[0] == doctest::Approx(0.5));
    CHECK(d.histogram[2] == doctest::Approx(0.5));
    CHECK_THROWS_AS(flip_density_summary(p, make_matrix({{1, 0}})), ShapeError);
}

TEST_CASE("flip counts at rate 0.10 match the binomial mean") {
    auto m = synth_matrix(311, 79, default_marginals(79, 4), 4);
    const auto p = generate_patient_set(m, 100, 0.10, 17);
    REQUIRE(p.rows() == 31100);
    const auto d = flip_density_summary(p, m);
    const double se = std::sqrt(79 * 0.1 * 0.9 / 31100.0);
    CHECK(std::abs(d.mean - 7.9) < 3 * se);
}

TEST_CASE("synthetic matrices") {
    auto m = synth_matrix(311, 79, std::vector<double>(79, 0.5), 8);
    CHECK(deduplicate_profiles(m).matrix.rows() == 311);

    auto tiny = synth_matrix(2, 1, std::vector<double>{0.5}, 1);
    std::set<int> seen{tiny.at(0, 0), tiny.at(1, 0)};
    CHECK(seen == std::set<int>{0, 1});
    CHECK_THROWS_AS(synth_matrix(3, 1, std::vector<double>{0.5}, 1), GenerationError);

    std::vector<double> marg(10, 0.3);
    auto col = synth_matrix(311, 10, marg, 12);
    const double mean = col.to_real().col(0).mean();
    CHECK(std::abs(mean - 0.3) < 3 * std::sqrt(0.3 * 0.7 / 311));

    CHECK(synth_matrix(50, 10, marg, 3) == synth_matrix(50, 10, marg, 3));
}

TEST_CASE("patient CSV round trip") {
    auto m = make_matrix({{1, 0, 1}, {0, 1, 1}});
    const auto p = generate_patient_set(m, 3, 0.2, 1);
    std::ostringstream out;
    write_patient_set(out, p, m);
    std::istringstream in(out.str());
    const auto back = parse_patient_set(in, 2, 0.2);
    CHECK(back.patients.features() == p.features());
    CHECK(back.patients.labels() == p.labels());
    CHECK(back.symptom_names == m.symptom_names());
    CHECK(back.source_chemicals.front() == "chem0");
}

}
