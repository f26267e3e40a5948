#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "triage/errors.hpp"
#include "triage/mlp.hpp"
#include "triage/reduce.hpp"

using namespace triage;

namespace {

Eigen::VectorXd random_params(const MlpDims& d, std::mt19937_64& gen) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd p(d.parameter_count());
    for (auto& v : p) v = g(gen);
    return p;
}

MlpModel xor_model(std::uint64_t seed) { return init_model(2, 4, 2, seed); }

Eigen::MatrixXd xor_x() {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 1, 1, 0, 1, 1;
    return x;
}

const std::vector<std::size_t> kXorLabels{0, 1, 1, 0};

} // namespace

TEST_SUITE("mlp") {

TEST_CASE("init shapes, bounds and determinism") {
    const auto m = init_model(79, 40, 311, 7);
    CHECK(m.w1().rows() == 40);
    CHECK(m.w1().cols() == 79);
    CHECK(m.b1().size() == 40);
    CHECK(m.w2().rows() == 311);
    CHECK(m.w2().cols() == 40);
    CHECK(m.b2().size() == 311);
    CHECK(m.w1().cwiseAbs().maxCoeff() < 1.0 / std::sqrt(79.0));
    CHECK(m.w2().cwiseAbs().maxCoeff() < 1.0 / std::sqrt(40.0));
    CHECK(m.b1().isZero());
    CHECK(m.params() == init_model(79, 40, 311, 7).params());
    CHECK(m.params() != init_model(79, 40, 311, 8).params());
    CHECK_THROWS_AS(init_model(0, 4, 2, 1), ArgumentError);
}

TEST_CASE("zero model is uniform") {
    MlpModel m(MlpDims{3, 2, 5}, Eigen::VectorXd::Zero(MlpDims{3, 2, 5}.parameter_count()));
    const auto p = forward(m, Eigen::VectorXd::Ones(3));
    for (auto v : p) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("hand evaluated 2-2-2 forward pass") {
    // W1 = [[0.5,-1],[2,0.25]], b1 = [0.1,-0.2], W2 = [[1,-1],[0.5,2]], b2 = [0,0.3]
    Eigen::VectorXd params(12);
    params << 0.5, -1, 2, 0.25, 0.1, -0.2, 1, -1, 0.5, 2, 0, 0.3;
    const MlpModel m(MlpDims{2, 2, 2}, params);
    Eigen::VectorXd x(2);
    x << 1, -0.5;
    const double h0 = std::tanh(0.5 * 1 + -1 * -0.5 + 0.1);
    const double h1 = std::tanh(2 * 1 + 0.25 * -0.5 - 0.2);
    const double z0 = h0 - h1;
    const double z1 = 0.5 * h0 + 2 * h1 + 0.3;
    const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
    const auto p = forward(m, x);
    CHECK(std::abs(p(0) - p0) <= 1e-12);
    CHECK(std::abs(p(1) - (1 - p0)) <= 1e-12);
}

TEST_CASE("forward normalizes, survives large logits and rejects bad input") {
    std::mt19937_64 gen(2);
    const MlpDims d{4, 3, 6};
    for (int t = 0; t < 20; ++t) {
        MlpModel m(d, 50.0 * random_params(d, gen));
        const Eigen::VectorXd x = Eigen::VectorXd::Random(4);
        const auto p = forward(m, x);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.allFinite());
    }
    MlpModel m(d, random_params(d, gen));
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(m, bad), ArgumentError);
    CHECK_THROWS_AS(forward(m, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("softmax shift invariance") {
    std::mt19937_64 gen(4);
    const MlpDims d{3, 4, 5};
    Eigen::VectorXd params = random_params(d, gen);
    MlpModel a(d, params);
    params.tail(5).array() += 3.7;  // b2 shifts every output pre-activation
    MlpModel b(d, params);
    const Eigen::VectorXd x = Eigen::VectorXd::Random(3);
    CHECK((forward(a, x) - forward(b, x)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("loss values") {
    const MlpDims d{2, 2, 4};
    MlpModel uniform(d, Eigen::VectorXd::Zero(d.parameter_count()));
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
    const std::vector<std::size_t> labels{0, 3, 1};
    CHECK(loss_and_gradient(uniform, x, one_hot(labels, 4)).loss == doctest::Approx(std::log(4.0)));

    Eigen::VectorXd confident = Eigen::VectorXd::Zero(d.parameter_count());
    confident.tail(4) << 100, 0, 0, 0;
    MlpModel sure(d, confident);
    CHECK(loss_and_gradient(sure, x, one_hot(std::vector<std::size_t>{0, 0, 0}, 4)).loss < 1e-12);
    // Wrong and confident: the clamp caps the per-row loss at -log(1e-12).
    const double capped = loss_and_gradient(sure, x, one_hot(std::vector<std::size_t>{1, 1, 1}, 4)).loss;
    CHECK(capped == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(loss_and_gradient(uniform, x, one_hot(std::vector<std::size_t>{0, 2, 1}, 3)), ShapeError);
}

TEST_CASE("gradient matches central differences on a 3-4-3 net") {
    std::mt19937_64 gen(6);
    const MlpDims d{3, 4, 3};
    MlpModel m(d, random_params(d, gen));
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
    const auto y = one_hot(std::vector<std::size_t>{0, 2, 1, 1, 0}, 3);
    const auto g = loss_and_gradient(m, x, y).gradient;
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Eigen::VectorXd plus = m.params(), minus = m.params();
        plus(i) += h;
        minus(i) -= h;
        const double fd = (loss_and_gradient(MlpModel(d, plus), x, y).loss -
                           loss_and_gradient(MlpModel(d, minus), x, y).loss) /
                          (2 * h);
        worst = std::max(worst, std::abs(fd - g(i)) / std::max({1e-8, std::abs(fd), std::abs(g(i))}));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("scg solves XOR and classifies every point") {
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TrainConfig cfg;
        cfg.max_epochs = 500;
        const auto r = scg_train(xor_model(seed), xor_x(), one_hot(kXorLabels, 2), cfg);
        if (!r.history.loss.empty() && r.history.loss.back() < 1e-2) {
            ++solved;
            CHECK(accuracy(r.model, xor_x(), kXorLabels) == 1.0);
        }
    }
    CHECK(solved >= 9);
}

TEST_CASE("scg is deterministic and its accepted loss never rises") {
    TrainConfig cfg;
    cfg.max_epochs = 200;
    const auto a = scg_train(xor_model(3), xor_x(), one_hot(kXorLabels, 2), cfg);
    const auto b = scg_train(xor_model(3), xor_x(), one_hot(kXorLabels, 2), cfg);
    CHECK(a.model.params() == b.model.params());
    CHECK(a.history.loss == b.history.loss);
    double prev = a.history.initial_loss;
    for (double l : a.history.loss) {
        CHECK(l <= prev);
        prev = l;
    }
}

TEST_CASE("scg separates linear blobs") {
    std::mt19937_64 gen(10);
    std::normal_distribution<double> g(0.0, 0.3);
    Eigen::MatrixXd x(40, 2);
    std::vector<std::size_t> labels(40);
    for (int i = 0; i < 40; ++i) {
        const double c = i < 20 ? -1.0 : 1.0;
        x(i, 0) = c + g(gen);
        x(i, 1) = c + g(gen);
        labels[i] = i < 20 ? 0 : 1;
    }
    TrainConfig cfg;
    cfg.max_epochs = 300;
    const auto r = scg_train(init_model(2, 3, 2, 5), x, one_hot(labels, 2), cfg);
    CHECK(accuracy(r.model, x, labels) == 1.0);
}

TEST_CASE("epoch limits") {
    TrainConfig cfg;
    cfg.max_epochs = 1;
    const auto r = scg_train(xor_model(1), xor_x(), one_hot(kXorLabels, 2), cfg);
    CHECK(r.history.loss.size() == 1);
    CHECK(r.history.stop_reason == StopReason::max_epochs);
    cfg.max_epochs = 0;
    CHECK_THROWS_AS(scg_train(xor_model(1), xor_x(), one_hot(kXorLabels, 2), cfg), ArgumentError);
}

TEST_CASE("accuracy counts and ties") {
    // Output bias alone decides the prediction: every row predicts class 1.
    const MlpDims d{1, 1, 3};
    Eigen::VectorXd p = Eigen::VectorXd::Zero(d.parameter_count());
    p.tail(3) << 0, 1, 0;
    const MlpModel m(d, p);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 1);
    std::vector<std::size_t> labels{1, 1, 1, 1, 1, 1, 1, 0, 2, 0};
    CHECK(accuracy(m, x, labels) == doctest::Approx(0.7));
    CHECK(accuracy(m, x, std::vector<std::size_t>(10, 1)) == 1.0);
    CHECK(accuracy(m, x, std::vector<std::size_t>(10, 2)) == 0.0);

    const MlpModel flat(d, Eigen::VectorXd::Zero(d.parameter_count()));
    CHECK(accuracy(flat, x, std::vector<std::size_t>(10, 0)) == 1.0);
}

TEST_CASE("evaluate accuracy through a reducer") {
    const auto sm = testing_support::make_matrix({{1, 0, 1}, {0, 1, 1}});
    const auto reducer = select_all_features(sm);
    MlpModel m = init_model(3, 2, 2, 1);
    m.reducer_ref = reducer.id();
    const auto p = generate_patient_set(sm, 2, 0.0, 1);
    const double acc = evaluate_accuracy(m, reducer, p);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    m.reducer_ref = "0000000000000000";
    CHECK_THROWS_AS(evaluate_accuracy(m, reducer, p), ArgumentError);
    m.reducer_ref = reducer.id();
    const auto wide = generate_patient_set(testing_support::make_matrix({{1, 0}, {0, 1}}), 1, 0.0, 1);
    CHECK_THROWS_AS(evaluate_accuracy(m, reducer, wide), ShapeError);
}

TEST_CASE("model JSON round trip") {
    MlpModel m = init_model(3, 4, 2, 9);
    m.reducer_ref = "abc";
    m.class_names = {"x", "y"};
    const auto back = model_from_json(model_to_json(m));
    CHECK(back.params() == m.params());
    CHECK(back.reducer_ref == "abc");
    CHECK(back.init_seed == 9);
    CHECK(back.class_names == m.class_names);
    auto j = model_to_json(m);
    j["format_version"] = 99;
    CHECK_THROWS_AS(model_from_json(j), ValidationError);
}

}
