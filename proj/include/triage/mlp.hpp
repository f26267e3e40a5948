#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/errors.hpp"
#include "triage/reduce.hpp"

namespace triage {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MlpDims {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::size_t output = 0;

    std::size_t parameter_count() const { return hidden * input + hidden + output * hidden + output; }
    bool operator==(const MlpDims&) const = default;
};

/// Single-hidden-layer classifier: tanh hidden units, softmax outputs.
///
/// Parameters live in one flat vector laid out as W1 (hidden x input,
/// row-major), b1, W2 (output x hidden, row-major), b2. The optimizer works on
/// that vector directly; the accessors below are views into it.
class MlpModel {
public:
    using ConstMatrixMap = Eigen::Map<const RowMatrixXd>;
    using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

    MlpModel() = default;
    MlpModel(MlpDims dims, Eigen::VectorXd params);

    const MlpDims& dims() const { return dims_; }
    const Eigen::VectorXd& params() const { return params_; }
    void set_params(Eigen::VectorXd params);

    ConstMatrixMap w1() const;
    ConstVectorMap b1() const;
    ConstMatrixMap w2() const;
    ConstVectorMap b2() const;

    std::string reducer_ref;
    std::uint64_t init_seed = 0;
    /// Optional display names for the output classes.
    std::vector<std::string> class_names;

private:
    MlpDims dims_;
    Eigen::VectorXd params_;
};

/// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
MlpModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                    std::uint64_t seed);

Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x);
/// Row-wise forward pass; returns n x output probabilities.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

struct LossGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient;
};

/// Mean cross-entropy against one-hot targets and its exact gradient.
LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y_onehot);

Eigen::MatrixXd one_hot(std::span<const std::size_t> labels, std::size_t n_classes);

struct TrainConfig {
    std::size_t max_epochs = 1000;
    double min_gradient_norm = 1e-6;
    double goal_loss = 0.0;
    double sigma = 5e-5;
    double lambda_init = 5e-7;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class StopReason { max_epochs, gradient, goal };
std::string_view to_string(StopReason reason);

struct TrainHistory {
    double initial_loss = 0.0;
    /// Full-batch loss after each epoch.
    std::vector<double> loss;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t successful_steps = 0;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& what, TrainHistory history)
        : Error(what), history_(std::move(history)) {}
    const TrainHistory& history() const { return history_; }

private:
    TrainHistory history_;
};

struct TrainResult {
    MlpModel model;
    TrainHistory history;
};

/// Full-batch scaled conjugate gradient (Moller 1993).
TrainResult scg_train(MlpModel model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_onehot,
                      const TrainConfig& config);

/// Fraction of rows whose arg-max class (lowest index on ties) equals the label.
double accuracy(const MlpModel& model, const Eigen::MatrixXd& reduced_rows,
                std::span<const std::size_t> labels);

double evaluate_accuracy(const MlpModel& model, const FeatureReducer& reducer, const PatientSet& p);

nlohmann::json model_to_json(const MlpModel& model);
/// Rejects unknown format versions.
MlpModel model_from_json(const nlohmann::json& j);

} // namespace triage
