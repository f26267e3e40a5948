#include <cmath>
#include <limits>

#include "doctest.h"
#include "support.hpp"
#include "triage/errors.hpp"
#include "triage/reduce.hpp"

using namespace triage;
using testing_support::make_matrix;

namespace {

double brute_cov(const SymptomMatrix& m, std::size_t a, std::size_t b) {
    const std::size_t n = m.rows();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += m.at(i, a);
        mb += m.at(i, b);
    }
    ma /= n;
    mb /= n;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (m.at(i, a) - ma) * (m.at(i, b) - mb);
    return s / (n - 1);
}

} // namespace

TEST_SUITE("reduce") {

TEST_CASE("hand covariances") {
    const auto same = covariance_matrix(make_matrix({{0, 0}, {1, 1}}));
    CHECK(same(0, 1) == doctest::Approx(0.5));
    const auto opposite = covariance_matrix(make_matrix({{0, 1}, {1, 0}}));
    CHECK(opposite(0, 1) == doctest::Approx(-0.5));

    const auto c = covariance_matrix(make_matrix({{1, 0, 1}, {1, 1, 0}, {1, 0, 0}}));
    for (int j = 0; j < 3; ++j) CHECK(c(0, j) == 0.0);
    CHECK_THROWS_AS(covariance_matrix(make_matrix({{1, 0}})), ArgumentError);
}

TEST_CASE("covariance matches a double loop") {
    std::mt19937_64 gen(11);
    const auto m = testing_support::random_matrix(10, 6, gen);
    const auto c = covariance_matrix(m);
    for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = 0; b < 6; ++b) CHECK(std::abs(c(a, b) - brute_cov(m, a, b)) <= 1e-12);
    const auto general = covariance_matrix(m.to_real());
    CHECK((general - c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pearson edge cases") {
    const auto r = pearson_matrix(make_matrix({{0, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 0, 1}}));
    CHECK(r.r(0, 1) == doctest::Approx(1.0));
    CHECK(r.r(0, 2) == doctest::Approx(-1.0));
    CHECK(r.zero_variance[3]);
    CHECK(std::isnan(r.r(0, 3)));
    CHECK_FALSE(r.defined(0, 3));
    CHECK((r.r.topLeftCorner(3, 3) - r.r.topLeftCorner(3, 3).transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(pearson_matrix(make_matrix({{1, 0}, {1, 0}})), DegenerateInputError);
}

TEST_CASE("top variance selection") {
    // Column variances: 0, 0.25*4/3, 0.1875*4/3, 0.25*4/3 (n = 4).
    const auto m = make_matrix({{1, 0, 0, 1}, {1, 1, 0, 0}, {1, 0, 0, 1}, {1, 1, 1, 0}});
    const auto r = select_top_variance(m, 2);
    CHECK(r.selected_columns == std::vector<std::size_t>{1, 3});
    CHECK(select_top_variance(m, 4).selected_columns.size() == 4);
    CHECK_THROWS_AS(select_top_variance(m, 5), ArgumentError);
    CHECK_THROWS_AS(select_top_variance(m, 0), ArgumentError);
}

TEST_CASE("least correlated: duplicate column") {
    // c0 == c1, c2 independent of both.
    const auto m = make_matrix({{0, 0, 0}, {0, 0, 1}, {1, 1, 0}, {1, 1, 1}});
    const auto s = select_least_correlated(m, 2);
    CHECK(s.reducer.selected_columns == std::vector<std::size_t>{0, 2});
    CHECK(s.max_surviving_abs_r == doctest::Approx(0.0));
    CHECK(s.elimination_order == std::vector<std::size_t>{1});
}

TEST_CASE("least correlated: uncorrelated columns and zero variance") {
    const auto m = make_matrix({{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
    const auto s = select_least_correlated(m, 2, 0.1);
    CHECK(s.dropped_zero_variance == std::vector<std::size_t>{2});
    CHECK(s.reducer.selected_columns == std::vector<std::size_t>{0, 1});
    CHECK(s.max_surviving_abs_r == 0.0);
    REQUIRE(s.within_threshold.has_value());
    CHECK(*s.within_threshold);
}

TEST_CASE("least correlated never leaves a pair worse than a removed one") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = testing_support::random_matrix(30, 8, gen);
        bool any = false;
        for (std::size_t j = 0; j < m.cols(); ++j) any = any || m.to_real().col(j).minCoeff() != m.to_real().col(j).maxCoeff();
        if (!any) continue;
        const auto s = select_least_correlated(m, 4);
        CHECK(s.reducer.selected_columns.size() == 4);
        CHECK(std::is_sorted(s.reducer.selected_columns.begin(), s.reducer.selected_columns.end()));
        CHECK(s.elimination_order.size() == 4);
    }
}

TEST_CASE("first and random k") {
    const auto m = make_matrix({{1, 0, 1}, {0, 1, 1}}, {"c", "a", "b"});
    const auto first = select_first_or_random_k(m, 2, SubsetMode::alphabetical_first, 0);
    CHECK(first.selected_columns == std::vector<std::size_t>{1, 2});
    const auto all = select_first_or_random_k(m, 3, SubsetMode::alphabetical_first, 0);
    CHECK(all.selected_columns == std::vector<std::size_t>{0, 1, 2});
    const auto all_random = select_first_or_random_k(m, 3, SubsetMode::random, 9);
    CHECK(all_random.selected_columns == std::vector<std::size_t>{0, 1, 2});
    const auto r1 = select_first_or_random_k(m, 2, SubsetMode::random, 9);
    const auto r2 = select_first_or_random_k(m, 2, SubsetMode::random, 9);
    CHECK(r1.selected_columns == r2.selected_columns);
    CHECK_THROWS_AS(select_first_or_random_k(m, 4, SubsetMode::random, 9), ArgumentError);
}

TEST_CASE("pca on a rank one matrix") {
    const auto m = make_matrix({{1, 1, 0}, {0, 0, 0}, {1, 1, 0}, {0, 0, 0}});
    const auto fit = pca_fit(m, 2);
    CHECK(fit.rank == 1);
    CHECK(fit.variance_explained[0] == doctest::Approx(1.0));
    CHECK(fit.null_component == std::vector<bool>{false, true});
    CHECK_THROWS_AS(pca_fit(m, 4), ArgumentError);
}

TEST_CASE("pca properties over random matrices") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 25; ++trial) {
        const auto m = testing_support::random_matrix(12 + trial, 7, gen);
        bool constant = true;
        for (std::size_t j = 0; j < m.cols(); ++j) constant = constant && m.to_real().col(j).minCoeff() == m.to_real().col(j).maxCoeff();
        if (constant) continue;
        const auto fit = pca_fit(m, 5);
        const auto& w = fit.reducer.projection;
        const Eigen::MatrixXd gram = w.transpose() * w;
        CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
        double total = 0;
        for (double v : fit.variance_explained) total += v;
        CHECK(std::abs(total - 1.0) <= 1e-9);
        for (std::size_t i = 1; i < fit.cumulative.size(); ++i) CHECK(fit.cumulative[i] >= fit.cumulative[i - 1]);
        // Every column has its largest-magnitude entry positive.
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            Eigen::Index idx;
            w.col(c).cwiseAbs().maxCoeff(&idx);
            CHECK(w(idx, c) > 0.0);
        }
    }
}

TEST_CASE("apply reducer") {
    const auto m = make_matrix({{1, 0, 1}, {0, 1, 1}});
    Eigen::MatrixXd row(1, 3);
    row << 1, 0, 1;
    auto subset = select_all_features(m);
    subset.kind = ReducerKind::first_k;
    subset.k = 2;
    subset.selected_columns = {0, 2};
    const auto out = apply_reducer(subset, row);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 1.0);
    CHECK(apply_reducer(select_all_features(m), row) == row);

    FeatureReducer identity;
    identity.kind = ReducerKind::pca;
    identity.k = 3;
    identity.symptom_names = m.symptom_names();
    identity.projection = Eigen::MatrixXd::Identity(3, 3);
    identity.column_means = Eigen::VectorXd::Zero(3);
    CHECK(apply_reducer(identity, row) == row);
    CHECK_THROWS_AS(apply_reducer(identity, Eigen::MatrixXd::Zero(1, 2)), ShapeError);
}

TEST_CASE("reducer JSON round trip and id binding") {
    std::mt19937_64 gen(8);
    const auto m = testing_support::random_matrix(20, 6, gen);
    for (auto kind : {ReducerKind::all_features, ReducerKind::first_k, ReducerKind::random_k,
                      ReducerKind::variance, ReducerKind::correlation, ReducerKind::pca}) {
        const auto r = fit_reducer(m, kind, 3, 5);
        const auto back = reducer_from_json(reducer_to_json(r));
        CHECK(back.id() == r.id());
        CHECK(apply_reducer(back, m.to_real()).isApprox(apply_reducer(r, m.to_real())));
    }
    auto j = reducer_to_json(fit_reducer(m, ReducerKind::variance, 3, 0));
    j["k"] = 2;
    j["selected_columns"] = {0, 1};
    CHECK_THROWS_AS(reducer_from_json(j), ValidationError);
    CHECK_THROWS_AS(parse_reducer_kind("svd"), ArgumentError);
}

}
