#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/mlp.hpp"
#include "triage/reduce.hpp"

namespace triage {

/// Grid of (technique, hidden size, replicate) training runs.
struct SweepSpec {
    std::vector<ReducerKind> techniques{ReducerKind::all_features, ReducerKind::first_k,
                                        ReducerKind::variance, ReducerKind::correlation,
                                        ReducerKind::pca};
    std::vector<std::size_t> hidden_sizes{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::size_t models_per_size = 10;
    std::size_t replication_factor = 5;
    double train_fraction = 0.7;
    std::vector<double> perturb_rates{0.05, 0.10, 0.15};
    std::size_t copies_per_chemical = 100;
    std::size_t k = 40;
    std::uint64_t base_seed = 0;
    TrainConfig train;
    /// Replication factors for the resampling curve; empty skips it.
    std::vector<std::size_t> replication_factors;
    std::size_t replication_hidden = 40;

    void validate() const;
};

nlohmann::json spec_to_json(const SweepSpec& spec);
SweepSpec spec_from_json(const nlohmann::json& j);

/// Per-model seed; any single cell can be rerun in isolation.
std::uint64_t cell_seed(std::uint64_t base_seed, ReducerKind technique, std::size_t hidden_size,
                        std::size_t replicate);

struct SweepCell {
    ReducerKind technique = ReducerKind::all_features;
    std::size_t hidden_size = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double train_accuracy = 0.0;
    /// Accuracy on the held-out split of the replicated corpus.
    double clean_accuracy = 0.0;
    /// Aligned with SweepSpec::perturb_rates.
    std::vector<double> perturbed_accuracy;
    double final_loss = 0.0;
    std::size_t epochs = 0;
    std::string stop_reason;
    bool diverged = false;
    std::string error;
};

struct SeriesStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample standard deviation over the non-diverged replicates of one cell.
struct CellAggregate {
    ReducerKind technique = ReducerKind::all_features;
    std::size_t hidden_size = 0;
    std::size_t replicates = 0;
    SeriesStats train;
    SeriesStats clean;
    std::vector<SeriesStats> perturbed;
};

struct TechniqueSummary {
    ReducerKind technique = ReducerKind::all_features;
    std::string reducer_id;
    std::size_t input_features = 0;
    std::size_t reduced_features = 0;
    /// Equal-weight mean of the per-size means.
    double overall_train = 0.0;
    double overall_clean = 0.0;
    std::vector<double> overall_perturbed;
    std::optional<std::size_t> best_hidden;
    std::size_t diverged_cells = 0;
};

struct ReplicationPoint {
    std::size_t factor = 0;
    std::size_t hidden_size = 0;
    std::vector<double> accuracies;
    double mean = 0.0;
    double std = 0.0;
};

struct SweepReport {
    SweepSpec spec;
    std::size_t n_chemicals = 0;
    std::size_t n_symptoms = 0;
    /// Sorted by (technique order in spec, hidden size, replicate).
    std::vector<SweepCell> cells;
    std::vector<CellAggregate> aggregates;
    std::vector<TechniqueSummary> techniques;
    std::vector<ReplicationPoint> replication;
};

/// Recomputes aggregates and technique summaries from the raw cells.
void aggregate(SweepReport& report);

nlohmann::json report_to_json(const SweepReport& report);
/// Aggregates are rebuilt from the stored cells.
SweepReport report_from_json(const nlohmann::json& j);

struct ReplicationOptions {
    std::size_t models = 10;
    std::size_t hidden_size = 40;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    TrainConfig train;
    std::size_t workers = 1;
};

/// Mean clean-test accuracy of all-feature models trained on factor-replicated
/// 70/30 splits, per factor. The matrix is deduplicated first.
std::vector<ReplicationPoint> replication_curve(const SymptomMatrix& m,
                                                const std::vector<std::size_t>& factors,
                                                const ReplicationOptions& options);

/// Runs the full grid. Training failures are recorded per cell and excluded
/// from aggregates. `workers` > 1 trains cells concurrently; results do not
/// depend on it.
SweepReport run_sweep(const SymptomMatrix& m, const SweepSpec& spec, std::size_t workers = 1);

/// One row of a rendered table; values are accuracies in [0, 1].
struct TableRow {
    std::string model;
    std::optional<std::size_t> best_hidden;
    std::vector<double> values;
};

struct Table {
    std::vector<std::string> header;
    std::vector<TableRow> rows;
};

struct SummaryTables {
    /// Overall mean per technique: training, then each perturbation rate.
    Table overall;
    /// Same columns at each technique's best hidden size.
    Table best_hidden;
};

SummaryTables summarize_tables(const SweepReport& report);

/// Table as CSV with accuracies in percent to one decimal.
std::string table_to_csv(const Table& table);

enum class PlotView { fig4, fig8, fig9, fig10 };
PlotView parse_plot_view(std::string_view name);
std::string_view to_string(PlotView view);

struct PlotRow {
    std::string technique;
    /// Hidden size, or "all" for rows pooled across sizes.
    std::string hidden_size;
    std::string series;
    double mean = 0.0;
    double std = 0.0;
};

/// Long-format plot data. `techniques` restricts the output; an explicitly
/// empty filter is an error.
std::vector<PlotRow> emit_plot_data(const SweepReport& report, PlotView view,
                                    const std::optional<std::vector<ReducerKind>>& techniques = std::nullopt);

/// CSV with header technique,hidden_size,series,mean,std.
std::string plot_rows_to_csv(const std::vector<PlotRow>& rows);

/// Series label for a perturbation rate, e.g. "rate_0.05".
std::string rate_series(double rate);

} // namespace triage
