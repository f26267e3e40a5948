#include "triage/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

namespace {

constexpr ReducerKind kTableOrder[] = {ReducerKind::all_features, ReducerKind::first_k,
                                       ReducerKind::random_k,     ReducerKind::variance,
                                       ReducerKind::correlation,  ReducerKind::pca};

SeriesStats stats(const std::vector<double>& xs) {
    SeriesStats s;
    if (xs.empty()) return s;
    double total = 0.0;
    for (double x : xs) total += x;
    s.mean = total / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

/// Runs job(i) for i in [0, n) on up to `workers` threads. Rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::size_t technique_rank(const SweepSpec& spec, ReducerKind kind) {
    const auto it = std::find(spec.techniques.begin(), spec.techniques.end(), kind);
    return static_cast<std::size_t>(it - spec.techniques.begin());
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string percent_label(double rate) { return format_double("%g%%", rate * 100.0); }

std::string table_label(ReducerKind kind, std::size_t p, std::size_t k, bool best_table) {
    const std::string ks = std::to_string(k);
    switch (kind) {
    case ReducerKind::all_features: return "All " + std::to_string(p) + " SSx";
    case ReducerKind::first_k: return "First " + ks + " SSx";
    case ReducerKind::random_k: return "Random " + ks + " SSx";
    case ReducerKind::variance: return best_table ? "Cov/Var " + ks + " SSx" : ks + " SSx Var/Cov";
    case ReducerKind::correlation: return best_table ? "Corr " + ks + " SSx" : ks + " SSx Corr";
    case ReducerKind::pca: return best_table ? "PCA " + ks + " PCs" : "PCA (First " + ks + ")";
    }
    return "unknown";
}

} // namespace

void SweepSpec::validate() const {
    if (techniques.empty()) throw ArgumentError("sweep needs at least one technique");
    for (std::size_t i = 0; i < techniques.size(); ++i) {
        for (std::size_t j = i + 1; j < techniques.size(); ++j) {
            if (techniques[i] == techniques[j]) {
                throw ArgumentError("technique '" + std::string(to_string(techniques[i])) + "' listed twice");
            }
        }
    }
    if (hidden_sizes.empty()) throw ArgumentError("sweep needs at least one hidden size");
    for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
        if (hidden_sizes[i] == 0) throw ArgumentError("hidden sizes must be positive");
        if (i > 0 && hidden_sizes[i] <= hidden_sizes[i - 1]) {
            throw ArgumentError("hidden sizes must be strictly ascending");
        }
    }
    if (models_per_size == 0) throw ArgumentError("models_per_size must be at least 1");
    if (replication_factor == 0) throw ArgumentError("replication_factor must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ArgumentError("train_fraction must lie strictly between 0 and 1");
    }
    for (double r : perturb_rates) {
        if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("perturbation rates must lie in [0, 1]");
    }
    if (copies_per_chemical == 0) throw ArgumentError("copies_per_chemical must be at least 1");
    if (k == 0) throw ArgumentError("k must be at least 1");
    for (std::size_t f : replication_factors) {
        if (f == 0) throw ArgumentError("replication factors must be at least 1");
    }
    if (replication_hidden == 0) throw ArgumentError("replication_hidden must be positive");
    train.validate();
}

nlohmann::json spec_to_json(const SweepSpec& spec) {
    std::vector<std::string> techniques;
    for (auto t : spec.techniques) techniques.emplace_back(to_string(t));
    return {{"techniques", techniques},
            {"hidden_sizes", spec.hidden_sizes},
            {"models_per_size", spec.models_per_size},
            {"replication_factor", spec.replication_factor},
            {"train_fraction", spec.train_fraction},
            {"perturb_rates", spec.perturb_rates},
            {"copies_per_chemical", spec.copies_per_chemical},
            {"k", spec.k},
            {"base_seed", spec.base_seed},
            {"train",
             {{"max_epochs", spec.train.max_epochs},
              {"min_gradient_norm", spec.train.min_gradient_norm},
              {"goal_loss", spec.train.goal_loss},
              {"sigma", spec.train.sigma},
              {"lambda_init", spec.train.lambda_init}}},
            {"replication_factors", spec.replication_factors},
            {"replication_hidden", spec.replication_hidden}};
}

SweepSpec spec_from_json(const nlohmann::json& j) {
    SweepSpec spec;
    spec.techniques.clear();
    for (const auto& t : j.at("techniques")) spec.techniques.push_back(parse_reducer_kind(t.get<std::string>()));
    spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.models_per_size = j.at("models_per_size").get<std::size_t>();
    spec.replication_factor = j.at("replication_factor").get<std::size_t>();
    spec.train_fraction = j.at("train_fraction").get<double>();
    spec.perturb_rates = j.at("perturb_rates").get<std::vector<double>>();
    spec.copies_per_chemical = j.at("copies_per_chemical").get<std::size_t>();
    spec.k = j.at("k").get<std::size_t>();
    spec.base_seed = j.at("base_seed").get<std::uint64_t>();
    const auto& t = j.at("train");
    spec.train.max_epochs = t.at("max_epochs").get<std::size_t>();
    spec.train.min_gradient_norm = t.at("min_gradient_norm").get<double>();
    spec.train.goal_loss = t.at("goal_loss").get<double>();
    spec.train.sigma = t.at("sigma").get<double>();
    spec.train.lambda_init = t.at("lambda_init").get<double>();
    spec.replication_factors = j.at("replication_factors").get<std::vector<std::size_t>>();
    spec.replication_hidden = j.at("replication_hidden").get<std::size_t>();
    spec.validate();
    return spec;
}

std::uint64_t cell_seed(std::uint64_t base_seed, ReducerKind technique, std::size_t hidden_size,
                        std::size_t replicate) {
    std::uint64_t s = derive_seed(base_seed, "cell");
    s = derive_seed(s, to_string(technique));
    s = derive_seed(s, static_cast<std::uint64_t>(hidden_size));
    return derive_seed(s, static_cast<std::uint64_t>(replicate));
}

std::string rate_series(double rate) { return format_double("rate_%.2f", rate); }

void aggregate(SweepReport& report) {
    const SweepSpec& spec = report.spec;
    std::stable_sort(report.cells.begin(), report.cells.end(), [&](const SweepCell& a, const SweepCell& b) {
        const auto ra = technique_rank(spec, a.technique), rb = technique_rank(spec, b.technique);
        if (ra != rb) return ra < rb;
        if (a.hidden_size != b.hidden_size) return a.hidden_size < b.hidden_size;
        return a.replicate < b.replicate;
    });

    std::map<ReducerKind, TechniqueSummary> previous;
    for (auto& t : report.techniques) previous[t.technique] = t;

    const std::size_t n_rates = spec.perturb_rates.size();
    report.aggregates.clear();
    report.techniques.clear();
    for (ReducerKind technique : spec.techniques) {
        TechniqueSummary summary = previous.count(technique) ? previous[technique] : TechniqueSummary{};
        summary.technique = technique;
        summary.overall_perturbed.assign(n_rates, 0.0);
        summary.overall_train = summary.overall_clean = 0.0;
        summary.best_hidden.reset();
        summary.diverged_cells = 0;

        std::size_t valid_sizes = 0;
        double best_clean = -1.0;
        for (std::size_t hidden : spec.hidden_sizes) {
            std::vector<double> train, clean;
            std::vector<std::vector<double>> perturbed(n_rates);
            bool present = false;
            for (const auto& cell : report.cells) {
                if (cell.technique != technique || cell.hidden_size != hidden) continue;
                present = true;
                if (cell.diverged) {
                    ++summary.diverged_cells;
                    continue;
                }
                train.push_back(cell.train_accuracy);
                clean.push_back(cell.clean_accuracy);
                for (std::size_t r = 0; r < n_rates; ++r) perturbed[r].push_back(cell.perturbed_accuracy.at(r));
            }
            if (!present) continue;
            CellAggregate agg;
            agg.technique = technique;
            agg.hidden_size = hidden;
            agg.replicates = clean.size();
            agg.train = stats(train);
            agg.clean = stats(clean);
            for (const auto& series : perturbed) agg.perturbed.push_back(stats(series));
            report.aggregates.push_back(agg);

            if (agg.replicates == 0) continue;
            ++valid_sizes;
            summary.overall_train += agg.train.mean;
            summary.overall_clean += agg.clean.mean;
            for (std::size_t r = 0; r < n_rates; ++r) summary.overall_perturbed[r] += agg.perturbed[r].mean;
            // Strict comparison keeps the smaller size on ties.
            if (agg.clean.mean > best_clean) {
                best_clean = agg.clean.mean;
                summary.best_hidden = hidden;
            }
        }
        if (valid_sizes > 0) {
            const double n = static_cast<double>(valid_sizes);
            summary.overall_train /= n;
            summary.overall_clean /= n;
            for (auto& v : summary.overall_perturbed) v /= n;
        }
        report.techniques.push_back(summary);
    }
}

nlohmann::json report_to_json(const SweepReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"technique", to_string(c.technique)},
                         {"hidden_size", c.hidden_size},
                         {"replicate", c.replicate},
                         {"seed", c.seed},
                         {"train_accuracy", c.train_accuracy},
                         {"clean_accuracy", c.clean_accuracy},
                         {"perturbed_accuracy", c.perturbed_accuracy},
                         {"final_loss", c.final_loss},
                         {"epochs", c.epochs},
                         {"stop_reason", c.stop_reason},
                         {"diverged", c.diverged},
                         {"error", c.error}});
    }
    auto series = [](const SeriesStats& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
    nlohmann::json aggregates = nlohmann::json::array();
    for (const auto& a : report.aggregates) {
        nlohmann::json perturbed = nlohmann::json::array();
        for (const auto& s : a.perturbed) perturbed.push_back(series(s));
        aggregates.push_back({{"technique", to_string(a.technique)},
                              {"hidden_size", a.hidden_size},
                              {"replicates", a.replicates},
                              {"train", series(a.train)},
                              {"clean", series(a.clean)},
                              {"perturbed", perturbed}});
    }
    nlohmann::json techniques = nlohmann::json::array();
    for (const auto& t : report.techniques) {
        techniques.push_back({{"technique", to_string(t.technique)},
                              {"reducer_id", t.reducer_id},
                              {"input_features", t.input_features},
                              {"reduced_features", t.reduced_features},
                              {"overall_train", t.overall_train},
                              {"overall_clean", t.overall_clean},
                              {"overall_perturbed", t.overall_perturbed},
                              {"best_hidden", t.best_hidden ? nlohmann::json(*t.best_hidden) : nlohmann::json(nullptr)},
                              {"diverged_cells", t.diverged_cells}});
    }
    nlohmann::json replication = nlohmann::json::array();
    for (const auto& r : report.replication) {
        replication.push_back({{"factor", r.factor},
                               {"hidden_size", r.hidden_size},
                               {"accuracies", r.accuracies},
                               {"mean", r.mean},
                               {"std", r.std}});
    }
    return {{"format_version", 1},
            {"spec", spec_to_json(report.spec)},
            {"n_chemicals", report.n_chemicals},
            {"n_symptoms", report.n_symptoms},
            {"cells", cells},
            {"aggregates", aggregates},
            {"techniques", techniques},
            {"replication", replication}};
}

SweepReport report_from_json(const nlohmann::json& j) {
    SweepReport report;
    try {
        if (j.at("format_version").get<int>() != 1) throw ValidationError("unsupported report format_version");
        report.spec = spec_from_json(j.at("spec"));
        report.n_chemicals = j.at("n_chemicals").get<std::size_t>();
        report.n_symptoms = j.at("n_symptoms").get<std::size_t>();
        for (const auto& c : j.at("cells")) {
            SweepCell cell;
            cell.technique = parse_reducer_kind(c.at("technique").get<std::string>());
            cell.hidden_size = c.at("hidden_size").get<std::size_t>();
            cell.replicate = c.at("replicate").get<std::size_t>();
            cell.seed = c.at("seed").get<std::uint64_t>();
            cell.train_accuracy = c.at("train_accuracy").get<double>();
            cell.clean_accuracy = c.at("clean_accuracy").get<double>();
            cell.perturbed_accuracy = c.at("perturbed_accuracy").get<std::vector<double>>();
            cell.final_loss = c.at("final_loss").get<double>();
            cell.epochs = c.at("epochs").get<std::size_t>();
            cell.stop_reason = c.at("stop_reason").get<std::string>();
            cell.diverged = c.at("diverged").get<bool>();
            cell.error = c.at("error").get<std::string>();
            if (!cell.diverged && cell.perturbed_accuracy.size() != report.spec.perturb_rates.size()) {
                throw ValidationError("cell perturbed accuracies do not match the sweep's rates");
            }
            report.cells.push_back(std::move(cell));
        }
        for (const auto& t : j.at("techniques")) {
            TechniqueSummary s;
            s.technique = parse_reducer_kind(t.at("technique").get<std::string>());
            s.reducer_id = t.at("reducer_id").get<std::string>();
            s.input_features = t.at("input_features").get<std::size_t>();
            s.reduced_features = t.at("reduced_features").get<std::size_t>();
            report.techniques.push_back(s);
        }
        for (const auto& r : j.at("replication")) {
            ReplicationPoint point;
            point.factor = r.at("factor").get<std::size_t>();
            point.hidden_size = r.at("hidden_size").get<std::size_t>();
            point.accuracies = r.at("accuracies").get<std::vector<double>>();
            const auto s = stats(point.accuracies);
            point.mean = s.mean;
            point.std = s.std;
            report.replication.push_back(std::move(point));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("report JSON: ") + e.what());
    }
    aggregate(report);
    return report;
}

std::vector<ReplicationPoint> replication_curve(const SymptomMatrix& m,
                                                const std::vector<std::size_t>& factors,
                                                const ReplicationOptions& options) {
    if (options.models == 0) throw ArgumentError("replication curve needs at least one model per factor");
    for (std::size_t f : factors) {
        if (f == 0) throw ArgumentError("replication factors must be at least 1");
    }
    options.train.validate();
    const SymptomMatrix unique = deduplicate_profiles(m).matrix;
    const std::size_t n_classes = unique.rows();

    struct FactorData {
        Eigen::MatrixXd x_train, y_train, x_test;
        std::vector<std::size_t> test_labels;
    };
    std::vector<FactorData> data;
    for (std::size_t f : factors) {
        const auto split = split_train_test(
            replicate_rows(unique, f), options.train_fraction,
            derive_seed(derive_seed(options.base_seed, "replication-split"), static_cast<std::uint64_t>(f)));
        data.push_back({split.train.to_real(), one_hot(split.train.labels(), n_classes), split.test.to_real(),
                        split.test.labels()});
    }

    std::vector<ReplicationPoint> points(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        points[i].factor = factors[i];
        points[i].hidden_size = options.hidden_size;
        points[i].accuracies.assign(options.models, 0.0);
    }
    parallel_for(factors.size() * options.models, options.workers, [&](std::size_t job) {
        const std::size_t fi = job / options.models, rep = job % options.models;
        const std::uint64_t seed =
            derive_seed(derive_seed(derive_seed(options.base_seed, "replication-model"),
                                    static_cast<std::uint64_t>(factors[fi])),
                        static_cast<std::uint64_t>(rep));
        const auto& d = data[fi];
        TrainConfig config = options.train;
        config.seed = seed;
        try {
            auto result = scg_train(init_model(unique.cols(), options.hidden_size, n_classes, seed), d.x_train,
                                    d.y_train, config);
            points[fi].accuracies[rep] = accuracy(result.model, d.x_test, d.test_labels);
        } catch (const TrainingDivergedError& e) {
            throw TrainingDivergedError("replication factor " + std::to_string(factors[fi]) + ", seed " +
                                            std::to_string(seed) + ": " + e.what(),
                                        e.history());
        }
    });
    for (auto& p : points) {
        const auto s = stats(p.accuracies);
        p.mean = s.mean;
        p.std = s.std;
    }
    return points;
}

SweepReport run_sweep(const SymptomMatrix& m, const SweepSpec& spec, std::size_t workers) {
    spec.validate();
    const SymptomMatrix unique = deduplicate_profiles(m).matrix;
    const bool reduces = std::any_of(spec.techniques.begin(), spec.techniques.end(),
                                     [](ReducerKind k) { return k != ReducerKind::all_features; });
    if (reduces && spec.k > unique.cols()) {
        throw ArgumentError("k = " + std::to_string(spec.k) + " exceeds the symptom count " +
                            std::to_string(unique.cols()));
    }
    const std::size_t n_classes = unique.rows();

    const auto split = split_train_test(replicate_rows(unique, spec.replication_factor), spec.train_fraction,
                                        derive_seed(spec.base_seed, "split"));
    const Eigen::MatrixXd train_real = split.train.to_real();
    const Eigen::MatrixXd test_real = split.test.to_real();
    const Eigen::MatrixXd y_train = one_hot(split.train.labels(), n_classes);

    std::vector<PatientSet> patients;
    for (double rate : spec.perturb_rates) {
        patients.push_back(generate_patient_set(unique, spec.copies_per_chemical, rate,
                                                derive_seed(derive_seed(spec.base_seed, "patients"), rate_series(rate))));
    }

    struct TechniqueData {
        FeatureReducer reducer;
        std::string reducer_id;
        Eigen::MatrixXd x_train, x_test;
        std::vector<Eigen::MatrixXd> x_perturbed;
    };
    SweepReport report;
    report.spec = spec;
    report.n_chemicals = unique.rows();
    report.n_symptoms = unique.cols();

    std::vector<TechniqueData> data;
    for (ReducerKind technique : spec.techniques) {
        TechniqueData d;
        // Each reducer is fitted once on the deduplicated matrix and shared by every cell.
        d.reducer = fit_reducer(unique, technique, spec.k,
                                derive_seed(spec.base_seed, "reducer:" + std::string(to_string(technique))));
        d.reducer_id = d.reducer.id();
        d.x_train = apply_reducer(d.reducer, train_real);
        d.x_test = apply_reducer(d.reducer, test_real);
        for (const auto& p : patients) d.x_perturbed.push_back(apply_reducer(d.reducer, p.to_real()));

        TechniqueSummary summary;
        summary.technique = technique;
        summary.reducer_id = d.reducer_id;
        summary.input_features = d.reducer.input_dim();
        summary.reduced_features = d.reducer.k;
        report.techniques.push_back(summary);
        data.push_back(std::move(d));
    }

    const std::size_t per_technique = spec.hidden_sizes.size() * spec.models_per_size;
    report.cells.resize(spec.techniques.size() * per_technique);
    parallel_for(report.cells.size(), workers, [&](std::size_t job) {
        const std::size_t ti = job / per_technique;
        const std::size_t hidden = spec.hidden_sizes[(job % per_technique) / spec.models_per_size];
        const std::size_t rep = job % spec.models_per_size;
        const auto& d = data[ti];

        SweepCell& cell = report.cells[job];
        cell.technique = spec.techniques[ti];
        cell.hidden_size = hidden;
        cell.replicate = rep;
        cell.seed = cell_seed(spec.base_seed, cell.technique, hidden, rep);

        MlpModel model = init_model(d.reducer.k, hidden, n_classes, cell.seed);
        model.reducer_ref = d.reducer_id;
        TrainConfig config = spec.train;
        config.seed = cell.seed;
        try {
            auto result = scg_train(std::move(model), d.x_train, y_train, config);
            cell.final_loss = result.history.loss.empty() ? result.history.initial_loss : result.history.loss.back();
            cell.epochs = result.history.loss.size();
            cell.stop_reason = std::string(to_string(result.history.stop_reason));
            cell.train_accuracy = accuracy(result.model, d.x_train, split.train.labels());
            cell.clean_accuracy = accuracy(result.model, d.x_test, split.test.labels());
            for (std::size_t r = 0; r < patients.size(); ++r) {
                cell.perturbed_accuracy.push_back(accuracy(result.model, d.x_perturbed[r], patients[r].labels()));
            }
        } catch (const TrainingDivergedError& e) {
            cell.diverged = true;
            cell.error = e.what();
            cell.epochs = e.history().loss.size();
            cell.stop_reason = "diverged";
        }
    });

    if (!spec.replication_factors.empty()) {
        ReplicationOptions options;
        options.models = spec.models_per_size;
        options.hidden_size = spec.replication_hidden;
        options.train_fraction = spec.train_fraction;
        options.base_seed = spec.base_seed;
        options.train = spec.train;
        options.workers = workers;
        report.replication = replication_curve(unique, spec.replication_factors, options);
    }

    aggregate(report);
    return report;
}

SummaryTables summarize_tables(const SweepReport& report) {
    if (report.cells.empty()) throw SummarizationError("report has no cells");
    SummaryTables tables;
    tables.overall.header = {"Model", "Training"};
    tables.best_hidden.header = {"Model", "Best# of Hidden Networks", "Training"};
    for (double rate : report.spec.perturb_rates) {
        tables.overall.header.push_back(percent_label(rate));
        tables.best_hidden.header.push_back(percent_label(rate));
    }

    for (ReducerKind kind : kTableOrder) {
        const auto it = std::find_if(report.techniques.begin(), report.techniques.end(),
                                     [&](const TechniqueSummary& t) { return t.technique == kind; });
        if (it == report.techniques.end()) continue;
        if (!it->best_hidden) {
            throw SummarizationError("every cell of technique '" + std::string(to_string(kind)) + "' diverged");
        }
        const std::size_t p = it->input_features ? it->input_features : report.n_symptoms;
        const std::size_t k = it->reduced_features ? it->reduced_features : report.spec.k;

        TableRow overall{table_label(kind, p, k, false), std::nullopt, {it->overall_clean}};
        for (double v : it->overall_perturbed) overall.values.push_back(v);
        tables.overall.rows.push_back(std::move(overall));

        const auto agg = std::find_if(report.aggregates.begin(), report.aggregates.end(), [&](const CellAggregate& a) {
            return a.technique == kind && a.hidden_size == *it->best_hidden;
        });
        TableRow best{table_label(kind, p, k, true), it->best_hidden, {agg->clean.mean}};
        for (const auto& s : agg->perturbed) best.values.push_back(s.mean);
        tables.best_hidden.rows.push_back(std::move(best));
    }
    return tables;
}

std::string table_to_csv(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
    out += '\n';
    for (const auto& row : table.rows) {
        out += row.model;
        if (row.best_hidden) out += "," + std::to_string(*row.best_hidden);
        for (double v : row.values) out += "," + format_double("%.1f", 100.0 * v);
        out += '\n';
    }
    return out;
}

PlotView parse_plot_view(std::string_view name) {
    for (auto view : {PlotView::fig4, PlotView::fig8, PlotView::fig9, PlotView::fig10}) {
        if (to_string(view) == name) return view;
    }
    throw ArgumentError("unknown plot view '" + std::string(name) + "'");
}

std::string_view to_string(PlotView view) {
    switch (view) {
    case PlotView::fig4: return "fig4";
    case PlotView::fig8: return "fig8";
    case PlotView::fig9: return "fig9";
    case PlotView::fig10: return "fig10";
    }
    return "unknown";
}

std::vector<PlotRow> emit_plot_data(const SweepReport& report, PlotView view,
                                    const std::optional<std::vector<ReducerKind>>& techniques) {
    if (techniques && techniques->empty()) throw ArgumentError("technique filter is empty");
    std::vector<ReducerKind> order;
    for (ReducerKind t : report.spec.techniques) {
        if (!techniques || std::find(techniques->begin(), techniques->end(), t) != techniques->end()) {
            order.push_back(t);
        }
    }

    std::vector<std::string> series{"clean"};
    for (double r : report.spec.perturb_rates) series.push_back(rate_series(r));
    auto pick = [](const CellAggregate& a, std::size_t s) { return s == 0 ? a.clean : a.perturbed[s - 1]; };
    auto row = [](ReducerKind t, std::string hidden, const std::string& s, const SeriesStats& st) {
        return PlotRow{std::string(to_string(t)), std::move(hidden), s, st.mean, st.std};
    };

    std::vector<PlotRow> rows;
    switch (view) {
    case PlotView::fig4:
        if (report.replication.empty()) throw ArgumentError("report has no replication curve for fig4");
        if (techniques && std::find(techniques->begin(), techniques->end(), ReducerKind::all_features) ==
                              techniques->end()) {
            return rows;
        }
        for (const auto& p : report.replication) {
            rows.push_back(row(ReducerKind::all_features, std::to_string(p.hidden_size),
                               "factor_" + std::to_string(p.factor), {p.mean, p.std}));
        }
        return rows;
    case PlotView::fig8:
        // One panel per technique: every test set across hidden sizes.
        for (ReducerKind t : order) {
            for (const auto& a : report.aggregates) {
                if (a.technique != t || a.replicates == 0) continue;
                for (std::size_t s = 0; s < series.size(); ++s) {
                    rows.push_back(row(t, std::to_string(a.hidden_size), series[s], pick(a, s)));
                }
            }
        }
        return rows;
    case PlotView::fig9:
        // One panel per test set: every technique across hidden sizes.
        for (std::size_t s = 0; s < series.size(); ++s) {
            for (ReducerKind t : order) {
                for (const auto& a : report.aggregates) {
                    if (a.technique != t || a.replicates == 0) continue;
                    rows.push_back(row(t, std::to_string(a.hidden_size), series[s], pick(a, s)));
                }
            }
        }
        return rows;
    case PlotView::fig10:
        // One bar per technique and test set. The mean is the equal-weight
        // overall mean; the spread is over every pooled replicate.
        for (std::size_t s = 0; s < series.size(); ++s) {
            for (ReducerKind t : order) {
                const auto summary = std::find_if(report.techniques.begin(), report.techniques.end(),
                                                  [&](const TechniqueSummary& x) { return x.technique == t; });
                std::vector<double> pooled;
                for (const auto& c : report.cells) {
                    if (c.technique != t || c.diverged) continue;
                    pooled.push_back(s == 0 ? c.clean_accuracy : c.perturbed_accuracy[s - 1]);
                }
                if (pooled.empty() || summary == report.techniques.end()) continue;
                const double mean = s == 0 ? summary->overall_clean : summary->overall_perturbed[s - 1];
                rows.push_back(row(t, "all", series[s], {mean, stats(pooled).std}));
            }
        }
        return rows;
    }
    throw ArgumentError("unknown plot view");
}

std::string plot_rows_to_csv(const std::vector<PlotRow>& rows) {
    std::string out = "technique,hidden_size,series,mean,std\n";
    for (const auto& r : rows) {
        out += r.technique + "," + r.hidden_size + "," + r.series + "," + format_double("%.6f", r.mean) + "," +
               format_double("%.6f", r.std) + "\n";
    }
    return out;
}

} // namespace triage
