#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"

namespace triage {

enum class ReducerKind { all_features, first_k, random_k, variance, correlation, pca };

std::string_view to_string(ReducerKind kind);
/// Accepts the canonical names above. Throws ArgumentError otherwise.
ReducerKind parse_reducer_kind(std::string_view name);

/// A fitted reduction from the symptom space to k features: either a column
/// subset or a centered linear projection.
struct FeatureReducer {
    ReducerKind kind = ReducerKind::all_features;
    std::size_t k = 0;
    /// Names of the input columns the reducer was fitted on.
    std::vector<std::string> symptom_names;
    /// Subset kinds only.
    std::vector<std::size_t> selected_columns;
    /// PCA only: input_dim x k, orthonormal columns.
    Eigen::MatrixXd projection;
    /// PCA only: length input_dim; zero when fitted without centering.
    Eigen::VectorXd column_means;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;

    std::size_t input_dim() const { return symptom_names.size(); }
    bool is_subset() const { return kind != ReducerKind::pca; }

    /// Throws ValidationError if the fields disagree with `kind`.
    void validate() const;

    /// Stable content hash; models record it to bind themselves to a reducer.
    std::string id() const;
};

nlohmann::json reducer_to_json(const FeatureReducer& r);
FeatureReducer reducer_from_json(const nlohmann::json& j);

/// Sample covariance (N - 1 denominator) between every pair of columns.
Eigen::MatrixXd covariance_matrix(const SymptomMatrix& m);
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& data);

/// Pearson correlations. Entries involving a zero-variance column are NaN and
/// the column is flagged in `zero_variance`.
struct CorrelationMatrix {
    Eigen::MatrixXd r;
    std::vector<bool> zero_variance;

    bool defined(std::size_t a, std::size_t b) const { return !zero_variance[a] && !zero_variance[b]; }
};

CorrelationMatrix pearson_matrix(const SymptomMatrix& m);

/// k columns with the largest sample variance; ties go to the lower index.
FeatureReducer select_top_variance(const SymptomMatrix& m, std::size_t k);

struct CorrelationSelection {
    FeatureReducer reducer;
    /// Largest |r| among surviving pairs (0 when fewer than two survive).
    double max_surviving_abs_r = 0.0;
    /// Zero-variance columns removed before the greedy pass.
    std::vector<std::size_t> dropped_zero_variance;
    /// Every removed column, in removal order.
    std::vector<std::size_t> elimination_order;
    /// Set when a threshold was supplied: max_surviving_abs_r <= threshold.
    std::optional<bool> within_threshold;
};

/// Greedy elimination: while more than k columns survive, take the surviving
/// pair with the largest |r| and drop whichever member has the larger mean
/// |r| to the other survivors (ties drop the higher index).
CorrelationSelection select_least_correlated(const SymptomMatrix& m, std::size_t k,
                                             std::optional<double> threshold = std::nullopt);

enum class SubsetMode { alphabetical_first, random };

FeatureReducer select_first_or_random_k(const SymptomMatrix& m, std::size_t k, SubsetMode mode,
                                        std::uint64_t seed);

/// Identity selection over every column.
FeatureReducer select_all_features(const SymptomMatrix& m);

struct PcaFit {
    FeatureReducer reducer;
    /// All singular values of the (centered) data, descending.
    Eigen::VectorXd singular_values;
    /// s_j^2 / sum s_i^2 over every component.
    std::vector<double> variance_explained;
    std::vector<double> cumulative;
    std::size_t rank = 0;
    /// null_component[j] is true when retained component j carries no variance.
    std::vector<bool> null_component;
};

PcaFit pca_fit(const SymptomMatrix& m, std::size_t k, bool center = true);
PcaFit pca_fit(const Eigen::MatrixXd& data, std::size_t k, bool center = true,
               std::vector<std::string> names = {});

/// Rows in the fitted input space -> rows in the reduced space.
Eigen::MatrixXd apply_reducer(const FeatureReducer& r, const Eigen::MatrixXd& rows);

/// Fits the reducer named by `kind` with default options.
FeatureReducer fit_reducer(const SymptomMatrix& m, ReducerKind kind, std::size_t k,
                           std::uint64_t seed);

} // namespace triage
