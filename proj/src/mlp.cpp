#include "triage/mlp.hpp"

#include <cmath>
#include <limits>

#include "triage/random.hpp"

namespace triage {

namespace {

constexpr double kProbabilityFloor = 1e-12;

struct Offsets {
    Eigen::Index w1, b1, w2, b2;
};

Offsets offsets(const MlpDims& d) {
    const auto in = static_cast<Eigen::Index>(d.input);
    const auto h = static_cast<Eigen::Index>(d.hidden);
    const auto out = static_cast<Eigen::Index>(d.output);
    return {0, h * in, h * in + h, h * in + h + out * h};
}

/// Loss and (optionally) gradient at an arbitrary parameter vector.
class Objective {
public:
    Objective(const MlpDims& dims, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
        : dims_(dims), off_(offsets(dims)), x_(x), y_(y) {}

    double operator()(const Eigen::VectorXd& w, Eigen::VectorXd* grad) const {
        const auto in = static_cast<Eigen::Index>(dims_.input);
        const auto h = static_cast<Eigen::Index>(dims_.hidden);
        const auto c = static_cast<Eigen::Index>(dims_.output);
        const Eigen::Map<const RowMatrixXd> w1(w.data() + off_.w1, h, in);
        const Eigen::Map<const Eigen::VectorXd> b1(w.data() + off_.b1, h);
        const Eigen::Map<const RowMatrixXd> w2(w.data() + off_.w2, c, h);
        const Eigen::Map<const Eigen::VectorXd> b2(w.data() + off_.b2, c);

        const Eigen::Index n = x_.rows();
        Eigen::MatrixXd hidden = x_ * w1.transpose();
        hidden.rowwise() += b1.transpose();
        hidden = hidden.array().tanh();

        Eigen::MatrixXd logits = hidden * w2.transpose();
        logits.rowwise() += b2.transpose();

        // Log-softmax with max subtraction; `logits` becomes probabilities.
        const double log_floor = std::log(kProbabilityFloor);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto row = logits.row(i);
            const double top = row.maxCoeff();
            row.array() -= top;
            const double log_z = std::log(row.array().exp().sum());
            for (Eigen::Index k = 0; k < c; ++k) {
                const double target = y_(i, k);
                if (target != 0.0) loss -= target * std::max(row(k) - log_z, log_floor);
            }
            row = (row.array() - log_z).exp();
        }
        loss /= static_cast<double>(n);
        if (!grad) return loss;

        grad->resize(w.size());
        // d loss / d logits = (p * sum(y) - y) / n
        Eigen::MatrixXd delta_out = logits.array().colwise() * y_.rowwise().sum().array();
        delta_out -= y_;
        delta_out /= static_cast<double>(n);

        Eigen::Map<RowMatrixXd>(grad->data() + off_.w2, c, h) = delta_out.transpose() * hidden;
        Eigen::Map<Eigen::VectorXd>(grad->data() + off_.b2, c) = delta_out.colwise().sum().transpose();

        const Eigen::MatrixXd delta_hidden =
            ((delta_out * w2).array() * (1.0 - hidden.array().square())).matrix();
        Eigen::Map<RowMatrixXd>(grad->data() + off_.w1, h, in) = delta_hidden.transpose() * x_;
        Eigen::Map<Eigen::VectorXd>(grad->data() + off_.b1, h) = delta_hidden.colwise().sum().transpose();
        return loss;
    }

private:
    MlpDims dims_;
    Offsets off_;
    const Eigen::MatrixXd& x_;
    const Eigen::MatrixXd& y_;
};

void check_training_shapes(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (static_cast<std::size_t>(x.cols()) != model.dims().input) {
        throw ShapeError("inputs have " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.dims().input));
    }
    if (static_cast<std::size_t>(y.cols()) != model.dims().output) {
        throw ShapeError("targets have " + std::to_string(y.cols()) + " columns, model has " +
                         std::to_string(model.dims().output) + " outputs");
    }
    if (x.rows() != y.rows()) throw ShapeError("inputs and targets differ in row count");
}

} // namespace

MlpModel::MlpModel(MlpDims dims, Eigen::VectorXd params) : dims_(dims), params_(std::move(params)) {
    if (dims_.input == 0 || dims_.hidden == 0 || dims_.output == 0) {
        throw ArgumentError("model dimensions must be positive");
    }
    if (static_cast<std::size_t>(params_.size()) != dims_.parameter_count()) {
        throw ShapeError("expected " + std::to_string(dims_.parameter_count()) + " parameters, got " +
                         std::to_string(params_.size()));
    }
    if (!params_.allFinite()) throw ValidationError("model weights must be finite");
}

void MlpModel::set_params(Eigen::VectorXd params) {
    params_ = MlpModel(dims_, std::move(params)).params_;
}

MlpModel::ConstMatrixMap MlpModel::w1() const {
    return ConstMatrixMap(params_.data() + offsets(dims_).w1, static_cast<Eigen::Index>(dims_.hidden),
                          static_cast<Eigen::Index>(dims_.input));
}
MlpModel::ConstVectorMap MlpModel::b1() const {
    return ConstVectorMap(params_.data() + offsets(dims_).b1, static_cast<Eigen::Index>(dims_.hidden));
}
MlpModel::ConstMatrixMap MlpModel::w2() const {
    return ConstMatrixMap(params_.data() + offsets(dims_).w2, static_cast<Eigen::Index>(dims_.output),
                          static_cast<Eigen::Index>(dims_.hidden));
}
MlpModel::ConstVectorMap MlpModel::b2() const {
    return ConstVectorMap(params_.data() + offsets(dims_).b2, static_cast<Eigen::Index>(dims_.output));
}

MlpModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                    std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
        throw ArgumentError("model dimensions must be positive");
    }
    const MlpDims dims{input_dim, hidden_dim, output_dim};
    const Offsets off = offsets(dims);
    Eigen::VectorXd params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.parameter_count()));
    Rng rng(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (Eigen::Index i = off.w1; i < off.b1; ++i) params(i) = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (Eigen::Index i = off.w2; i < off.b2; ++i) params(i) = rng.uniform(-bound2, bound2);
    MlpModel model(dims, std::move(params));
    model.init_seed = seed;
    return model;
}

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.cols()) != model.dims().input) {
        throw ShapeError("input has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(model.dims().input));
    }
    if (!x.allFinite()) throw ArgumentError("input contains non-finite values");
    Eigen::MatrixXd hidden = x * model.w1().transpose();
    hidden.rowwise() += model.b1().transpose();
    hidden = hidden.array().tanh();
    Eigen::MatrixXd out = hidden * model.w2().transpose();
    out.rowwise() += model.b2().transpose();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
    return out;
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x) {
    return forward_batch(model, x.transpose()).row(0).transpose();
}

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y_onehot) {
    check_training_shapes(model, x, y_onehot);
    if (x.rows() == 0) throw ArgumentError("loss needs at least one sample");
    if (!x.allFinite()) throw ArgumentError("input contains non-finite values");
    LossGradient out;
    out.loss = Objective(model.dims(), x, y_onehot)(model.params(), &out.gradient);
    return out;
}

Eigen::MatrixXd one_hot(std::span<const std::size_t> labels, std::size_t n_classes) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                              static_cast<Eigen::Index>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) throw ArgumentError("label outside class range");
        y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
    }
    return y;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ArgumentError("max_epochs must be at least 1");
    if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
    if (!(lambda_init >= 0.0)) throw ArgumentError("lambda_init must be nonnegative");
    if (!(min_gradient_norm >= 0.0)) throw ArgumentError("min_gradient_norm must be nonnegative");
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::gradient: return "gradient";
    case StopReason::goal: return "goal";
    }
    return "unknown";
}

TrainResult scg_train(MlpModel model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_onehot,
                      const TrainConfig& config) {
    config.validate();
    check_training_shapes(model, x, y_onehot);
    if (x.rows() == 0) throw ArgumentError("training needs at least one sample");
    if (!x.allFinite()) throw ArgumentError("input contains non-finite values");

    const Objective objective(model.dims(), x, y_onehot);
    const auto n_weights = model.dims().parameter_count();

    TrainHistory history;
    Eigen::VectorXd w = model.params();
    Eigen::VectorXd grad;
    double loss = objective(w, &grad);
    history.initial_loss = loss;
    if (!std::isfinite(loss)) throw TrainingDivergedError("initial loss is not finite", history);

    Eigen::VectorXd r = -grad;  // steepest descent direction
    Eigen::VectorXd p = r;      // search direction
    double lambda = config.lambda_init;
    double lambda_bar = 0.0;
    double delta = 0.0;
    bool success = true;

    auto finish = [&](StopReason reason) {
        history.stop_reason = reason;
        model.set_params(w);
        return TrainResult{std::move(model), std::move(history)};
    };

    if (loss <= config.goal_loss) return finish(StopReason::goal);
    if (r.norm() < config.min_gradient_norm) return finish(StopReason::gradient);

    Eigen::VectorXd grad_probe, grad_new;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        if (p.dot(r) <= 0.0) {
            // Lost conjugacy; fall back to steepest descent.
            p = r;
            success = true;
        }
        const double p_sq = p.squaredNorm();

        if (success) {
            // Curvature along p from a one-sided gradient difference.
            const double sigma_k = config.sigma / std::sqrt(p_sq);
            objective(w + sigma_k * p, &grad_probe);
            delta = p.dot(grad_probe - grad) / sigma_k;
        }

        // Levenberg-Marquardt scaling keeps the local quadratic model positive definite.
        delta += (lambda - lambda_bar) * p_sq;
        if (delta <= 0.0) {
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }

        const double mu = p.dot(r);
        const double alpha = mu / delta;
        if (!std::isfinite(alpha)) {
            history.loss.push_back(loss);
            throw TrainingDivergedError("step size became non-finite at epoch " + std::to_string(epoch),
                                        history);
        }

        const Eigen::VectorXd w_new = w + alpha * p;
        const double loss_new = objective(w_new, &grad_new);
        const double comparison = std::isfinite(loss_new)
                                      ? 2.0 * delta * (loss - loss_new) / (mu * mu)
                                      : -std::numeric_limits<double>::infinity();

        if (comparison >= 0.0) {
            w = w_new;
            loss = loss_new;
            grad.swap(grad_new);
            const Eigen::VectorXd r_new = -grad;
            lambda_bar = 0.0;
            success = true;
            ++history.successful_steps;
            if (epoch % n_weights == 0) {
                p = r_new;
            } else {
                const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
                p = r_new + beta * p;
            }
            r = r_new;
            if (comparison >= 0.75) lambda *= 0.5;
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if (comparison < 0.25) lambda *= 4.0;

        history.loss.push_back(loss);
        if (loss <= config.goal_loss) return finish(StopReason::goal);
        if (r.norm() < config.min_gradient_norm) return finish(StopReason::gradient);
    }
    return finish(StopReason::max_epochs);
}

double accuracy(const MlpModel& model, const Eigen::MatrixXd& reduced_rows,
                std::span<const std::size_t> labels) {
    if (static_cast<std::size_t>(reduced_rows.rows()) != labels.size()) {
        throw ShapeError("row count and label count differ");
    }
    if (labels.empty()) return 0.0;
    const Eigen::MatrixXd probs = forward_batch(model, reduced_rows);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c) {
            if (probs(i, c) > probs(i, best)) best = c;
        }
        correct += static_cast<std::size_t>(best) == labels[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate_accuracy(const MlpModel& model, const FeatureReducer& reducer, const PatientSet& p) {
    if (!model.reducer_ref.empty() && model.reducer_ref != reducer.id()) {
        throw ArgumentError("model expects reducer " + model.reducer_ref + ", got " + reducer.id());
    }
    if (p.cols() != reducer.input_dim()) {
        throw ShapeError("patient set has " + std::to_string(p.cols()) + " columns, reducer expects " +
                         std::to_string(reducer.input_dim()));
    }
    if (reducer.k != model.dims().input) {
        throw ShapeError("reducer emits " + std::to_string(reducer.k) + " features, model expects " +
                         std::to_string(model.dims().input));
    }
    return accuracy(model, apply_reducer(reducer, p.to_real()), p.labels());
}

nlohmann::json model_to_json(const MlpModel& model) {
    auto flat = [](const auto& block) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(block.size()));
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            for (Eigen::Index c = 0; c < block.cols(); ++c) out.push_back(block(i, c));
        }
        return out;
    };
    const auto& d = model.dims();
    return {{"format_version", 1},
            {"dims", {{"input", d.input}, {"hidden", d.hidden}, {"output", d.output}}},
            {"w1", flat(model.w1())},
            {"b1", flat(model.b1())},
            {"w2", flat(model.w2())},
            {"b2", flat(model.b2())},
            {"reducer_ref", model.reducer_ref},
            {"init_seed", model.init_seed},
            {"class_names", model.class_names}};
}

MlpModel model_from_json(const nlohmann::json& j) {
    try {
        const auto version = j.at("format_version").get<int>();
        if (version != 1) throw ValidationError("unsupported model format_version " + std::to_string(version));
        MlpDims dims{j.at("dims").at("input").get<std::size_t>(),
                     j.at("dims").at("hidden").get<std::size_t>(),
                     j.at("dims").at("output").get<std::size_t>()};
        if (dims.input == 0 || dims.hidden == 0 || dims.output == 0) {
            throw ValidationError("model dimensions must be positive");
        }
        const std::pair<const char*, std::size_t> blocks[] = {{"w1", dims.hidden * dims.input},
                                                              {"b1", dims.hidden},
                                                              {"w2", dims.output * dims.hidden},
                                                              {"b2", dims.output}};
        Eigen::VectorXd params(static_cast<Eigen::Index>(dims.parameter_count()));
        Eigen::Index at = 0;
        for (const auto& [name, size] : blocks) {
            const auto values = j.at(name).get<std::vector<double>>();
            if (values.size() != size) {
                throw ValidationError(std::string("model block ") + name + " has " +
                                      std::to_string(values.size()) + " values, expected " +
                                      std::to_string(size));
            }
            for (double v : values) params(at++) = v;
        }
        MlpModel model(dims, std::move(params));
        model.reducer_ref = j.at("reducer_ref").get<std::string>();
        model.init_seed = j.at("init_seed").get<std::uint64_t>();
        if (j.contains("class_names")) {
            model.class_names = j.at("class_names").get<std::vector<std::string>>();
            if (!model.class_names.empty() && model.class_names.size() != dims.output) {
                throw ValidationError("class_names length does not match output dimension");
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
}

} // namespace triage
