#include "triage/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "triage/bench.hpp"
#include "triage/corpus.hpp"
#include "triage/csv.hpp"
#include "triage/digest.hpp"
#include "triage/errors.hpp"
#include "triage/mlp.hpp"
#include "triage/random.hpp"
#include "triage/reduce.hpp"

namespace triage {

namespace {

namespace fs = std::filesystem;

/// Raised for I/O failures on output artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

/// Everything a subcommand can be configured with. List-valued flags stay as
/// text until the subcommand parses them.
struct RunConfig {
    std::string input;
    std::string synth;
    std::string marginals;
    std::string marginal_range;
    std::size_t k = 40;
    std::string technique;
    std::string hidden;
    std::size_t models_per_size = 10;
    std::string rates = "0.05,0.10,0.15";
    std::size_t copies = 100;
    std::size_t factor = 5;
    double train_fraction = 0.7;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::string out = ".";
    std::size_t max_epochs = 1000;
    double min_gradient = 1e-6;
    double goal = 0.0;
    std::optional<double> threshold;
    std::string replication;
    std::string report;
    std::string model;
    std::string reducer;
    std::size_t top = 5;
    std::string config;
    bool verbose = false;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        T value{};
        if constexpr (std::is_same_v<T, double>) {
            value = std::stod(text, &used);
        } else {
            if (!text.empty() && text.front() == '-') throw std::invalid_argument(text);
            value = static_cast<T>(std::stoull(text, &used));
        }
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ArgumentError("bad " + what + " '" + text + "'");
    }
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<double>(item, what));
    return out;
}

/// "a:b:step", "a,b,c" or a single size.
std::vector<std::size_t> parse_hidden(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split_list(text, ':');
        if (parts.size() != 3) throw ArgumentError("--hidden expects a:b:step");
        const auto lo = parse_number<std::size_t>(parts[0], "hidden size");
        const auto hi = parse_number<std::size_t>(parts[1], "hidden size");
        const auto step = parse_number<std::size_t>(parts[2], "hidden step");
        if (step == 0 || lo == 0 || hi < lo) throw ArgumentError("--hidden range is empty");
        std::vector<std::size_t> out;
        for (std::size_t h = lo; h <= hi; h += step) out.push_back(h);
        return out;
    }
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<std::size_t>(item, "hidden size"));
    if (out.empty()) throw ArgumentError("--hidden is empty");
    return out;
}

ReducerKind parse_technique(const std::string& name) {
    static const std::map<std::string, ReducerKind> aliases{
        {"all", ReducerKind::all_features}, {"first", ReducerKind::first_k},
        {"random", ReducerKind::random_k},  {"variance", ReducerKind::variance},
        {"correlation", ReducerKind::correlation}, {"pca", ReducerKind::pca}};
    const auto it = aliases.find(name);
    if (it != aliases.end()) return it->second;
    return parse_reducer_kind(name);
}

std::uint64_t require_seed(const RunConfig& cfg, const std::string& command) {
    if (!cfg.seed) throw ArgumentError(command + " requires --seed");
    return *cfg.seed;
}

std::ifstream open_input(const std::string& path) {
    if (path.empty()) throw ArgumentError("missing input path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    return in;
}

SymptomMatrix read_matrix(const std::string& path) {
    auto in = open_input(path);
    try {
        return parse_symptom_table(in);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

nlohmann::json read_json(const std::string& path) {
    auto in = open_input(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Writes artifacts into the output directory and remembers their hashes.
class OutputDir {
public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec || !fs::is_directory(root_)) throw IoError("cannot create output directory '" + root_.string() + "'");
    }

    void write(const std::string& name, const std::string& contents) {
        std::ofstream out(root_ / name, std::ios::binary);
        out << contents;
        if (!out) throw IoError("cannot write '" + (root_ / name).string() + "'");
        hashes_[name] = sha256_hex(contents);
    }

    void manifest(const std::string& command, const nlohmann::json& config) {
        nlohmann::json m{{"command", command}, {"config", config}, {"artifacts", hashes_}};
        write("manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path root_;
    std::map<std::string, std::string> hashes_;
};

nlohmann::json resolved(const RunConfig& c) {
    // The output directory is left out so identical runs produce identical trees.
    return {{"input", c.input},
            {"synth", c.synth},
            {"marginals", c.marginals},
            {"marginal_range", c.marginal_range},
            {"k", c.k},
            {"technique", c.technique},
            {"hidden", c.hidden},
            {"models_per_size", c.models_per_size},
            {"rates", c.rates},
            {"copies", c.copies},
            {"factor", c.factor},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr)},
            {"max_epochs", c.max_epochs},
            {"min_gradient", c.min_gradient},
            {"goal", c.goal},
            {"threshold", c.threshold ? nlohmann::json(*c.threshold) : nlohmann::json(nullptr)},
            {"replication", c.replication},
            {"report", c.report},
            {"model", c.model},
            {"reducer", c.reducer},
            {"top", c.top}};
}

std::string to_text(const SymptomMatrix& m) {
    std::ostringstream s;
    write_symptom_table(s, m);
    return s.str();
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    t.max_epochs = c.max_epochs;
    t.min_gradient_norm = c.min_gradient;
    t.goal_loss = c.goal;
    t.seed = c.seed.value_or(0);
    t.validate();
    return t;
}

SymptomMatrix synthesize(const RunConfig& c) {
    const auto dims = split_list(c.synth);
    if (dims.size() != 2) throw ArgumentError("--synth expects n,p");
    const auto n = parse_number<std::size_t>(dims[0], "chemical count");
    const auto p = parse_number<std::size_t>(dims[1], "symptom count");
    const std::uint64_t seed = require_seed(c, "synth");
    std::vector<double> marginals;
    if (!c.marginals.empty()) {
        auto in = open_input(c.marginals);
        std::stringstream text;
        text << in.rdbuf();
        std::string flat = text.str();
        std::replace(flat.begin(), flat.end(), '\n', ',');
        std::replace(flat.begin(), flat.end(), '\r', ',');
        marginals = parse_doubles(flat, "marginal");
    } else if (!c.marginal_range.empty()) {
        const auto range = parse_doubles(c.marginal_range, "marginal range");
        if (range.size() != 2 || !(range[0] > 0.0 && range[0] < range[1] && range[1] < 1.0)) {
            throw ArgumentError("--marginal-range expects lo,hi with 0 < lo < hi < 1");
        }
        Rng rng(derive_seed(seed, "marginals"));
        for (std::size_t j = 0; j < p; ++j) marginals.push_back(rng.uniform(range[0], range[1]));
    } else {
        marginals = default_marginals(p, seed);
    }
    return synth_matrix(n, p, marginals, seed);
}

SymptomMatrix load_corpus(const RunConfig& c) {
    if (c.input.empty() == c.synth.empty()) throw ArgumentError("give exactly one of --input and --synth");
    return c.input.empty() ? synthesize(c) : read_matrix(c.input);
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
    if (c.synth.empty()) throw ArgumentError("synth requires --synth n,p");
    const SymptomMatrix m = synthesize(c);
    OutputDir dir(c.out);
    dir.write("matrix.csv", to_text(m));
    dir.manifest("synth", resolved(c));
    out << "wrote " << m.rows() << "x" << m.cols() << " matrix\n";
    return kExitOk;
}

int cmd_dedup(const RunConfig& c, std::ostream& out) {
    const SymptomMatrix m = read_matrix(c.input);
    const DedupResult result = deduplicate_profiles(m);
    OutputDir dir(c.out);
    dir.write("dedup.csv", to_text(result.matrix));
    dir.write("dedup_summary.json", dedup_summary_to_json(result.summary).dump(2) + "\n");
    dir.manifest("dedup", resolved(c));
    out << m.rows() << " rows reduced to " << result.matrix.rows() << "\n";
    return kExitOk;
}

int cmd_testsets(const RunConfig& c, std::ostream& out) {
    const std::uint64_t seed = require_seed(c, "testsets");
    const SymptomMatrix m = deduplicate_profiles(read_matrix(c.input)).matrix;
    std::vector<double> rates{0.0};
    for (double r : parse_doubles(c.rates, "rate")) rates.push_back(r);

    OutputDir dir(c.out);
    std::string density = "rate,flips,fraction\n";
    for (double rate : rates) {
        const PatientSet p =
            generate_patient_set(m, c.copies, rate, derive_seed(derive_seed(seed, "patients"), rate_series(rate)));
        std::ostringstream text;
        write_patient_set(text, p, m);
        const std::string name = rate == 0.0 ? "patients_clean.csv" : "patients_" + rate_series(rate) + ".csv";
        dir.write(name, text.str());
        const FlipDensity d = flip_density_summary(p, m);
        for (std::size_t k = 0; k < d.histogram.size(); ++k) {
            char line[96];
            std::snprintf(line, sizeof line, "%.2f,%zu,%.6f\n", rate, k, d.histogram[k]);
            density += line;
        }
        out << name << ": " << p.rows() << " patients, mean flips " << d.mean << "\n";
    }
    dir.write("flip_density.csv", density);
    dir.manifest("testsets", resolved(c));
    return kExitOk;
}

int cmd_reduce(const RunConfig& c, std::ostream& out) {
    const SymptomMatrix m = deduplicate_profiles(read_matrix(c.input)).matrix;
    if (c.technique.empty()) throw ArgumentError("reduce requires --technique");
    const ReducerKind kind = parse_technique(c.technique);
    OutputDir dir(c.out);
    FeatureReducer reducer;
    if (kind == ReducerKind::pca) {
        const PcaFit fit = pca_fit(m, c.k, true);
        reducer = fit.reducer;
        std::string csv = "component,variance_explained,cumulative\n";
        for (std::size_t j = 0; j < fit.variance_explained.size(); ++j) {
            char line[96];
            std::snprintf(line, sizeof line, "%zu,%.10f,%.10f\n", j + 1, fit.variance_explained[j], fit.cumulative[j]);
            csv += line;
        }
        dir.write("variance_explained.csv", csv);
        out << "first " << c.k << " components explain " << fit.cumulative[c.k - 1] * 100.0 << "% of variance\n";
    } else if (kind == ReducerKind::correlation) {
        const CorrelationSelection sel = select_least_correlated(m, c.k, c.threshold);
        reducer = sel.reducer;
        out << "largest surviving |r| = " << sel.max_surviving_abs_r;
        if (sel.within_threshold) out << (*sel.within_threshold ? " (within threshold)" : " (exceeds threshold)");
        out << "\n";
    } else {
        if (kind == ReducerKind::random_k) require_seed(c, "reduce --technique random");
        reducer = fit_reducer(m, kind, c.k, c.seed.value_or(0));
    }
    dir.write("reducer.json", reducer_to_json(reducer).dump(2) + "\n");
    dir.manifest("reduce", resolved(c));
    out << "reducer " << reducer.id() << " (" << to_string(reducer.kind) << ", k=" << reducer.k << ")\n";
    return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
    const std::uint64_t seed = require_seed(c, "train");
    const SymptomMatrix m = deduplicate_profiles(read_matrix(c.input)).matrix;
    FeatureReducer reducer;
    if (!c.reducer.empty()) {
        reducer = reducer_from_json(read_json(c.reducer));
        if (reducer.symptom_names != m.symptom_names()) {
            throw ShapeError("reducer was fitted on different symptom columns than '" + c.input + "'");
        }
    } else {
        const ReducerKind kind = c.technique.empty() ? ReducerKind::all_features : parse_technique(c.technique);
        reducer = fit_reducer(m, kind, c.k, derive_seed(seed, "reducer"));
    }
    const auto hidden = parse_hidden(c.hidden.empty() ? "40" : c.hidden);
    if (hidden.size() != 1) throw ArgumentError("train takes a single --hidden size");

    const auto split = split_train_test(replicate_rows(m, c.factor), c.train_fraction, derive_seed(seed, "split"));
    const Eigen::MatrixXd x_train = apply_reducer(reducer, split.train.to_real());
    MlpModel model = init_model(reducer.k, hidden.front(), m.rows(), derive_seed(seed, "init"));
    model.reducer_ref = reducer.id();
    model.class_names = m.chemical_names();
    TrainResult result = scg_train(std::move(model), x_train, one_hot(split.train.labels(), m.rows()), train_config(c));

    OutputDir dir(c.out);
    dir.write("model.json", model_to_json(result.model).dump() + "\n");
    dir.write("reducer.json", reducer_to_json(reducer).dump(2) + "\n");
    std::string history = "epoch,loss\n";
    char line[64];
    std::snprintf(line, sizeof line, "0,%.17g\n", result.history.initial_loss);
    history += line;
    for (std::size_t e = 0; e < result.history.loss.size(); ++e) {
        std::snprintf(line, sizeof line, "%zu,%.17g\n", e + 1, result.history.loss[e]);
        history += line;
    }
    dir.write("history.csv", history);
    dir.manifest("train", resolved(c));
    out << "stopped after " << result.history.loss.size() << " epochs (" << to_string(result.history.stop_reason)
        << "), train accuracy " << evaluate_accuracy(result.model, reducer, split.train)
        << ", test accuracy " << evaluate_accuracy(result.model, reducer, split.test) << "\n";
    return kExitOk;
}

void write_report_views(OutputDir& dir, const SweepReport& report) {
    const SummaryTables tables = summarize_tables(report);
    dir.write("table1.csv", table_to_csv(tables.overall));
    dir.write("table2.csv", table_to_csv(tables.best_hidden));
    for (PlotView view : {PlotView::fig8, PlotView::fig9, PlotView::fig10}) {
        dir.write(std::string(to_string(view)) + ".csv", plot_rows_to_csv(emit_plot_data(report, view)));
    }
    if (!report.replication.empty()) dir.write("fig4.csv", plot_rows_to_csv(emit_plot_data(report, PlotView::fig4)));
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
    SweepSpec spec;
    spec.base_seed = require_seed(c, "sweep");
    if (!c.technique.empty()) {
        spec.techniques.clear();
        for (const auto& t : split_list(c.technique)) spec.techniques.push_back(parse_technique(t));
    }
    if (!c.hidden.empty()) spec.hidden_sizes = parse_hidden(c.hidden);
    spec.models_per_size = c.models_per_size;
    spec.replication_factor = c.factor;
    spec.train_fraction = c.train_fraction;
    spec.perturb_rates = parse_doubles(c.rates, "rate");
    spec.copies_per_chemical = c.copies;
    spec.k = c.k;
    spec.train = train_config(c);
    for (const auto& f : split_list(c.replication)) {
        spec.replication_factors.push_back(parse_number<std::size_t>(f, "replication factor"));
    }
    spec.validate();

    const SymptomMatrix m = load_corpus(c);
    const SweepReport report = run_sweep(m, spec, c.workers);
    OutputDir dir(c.out);
    dir.write("report.json", report_to_json(report).dump(1) + "\n");
    write_report_views(dir, report);
    dir.manifest("sweep", resolved(c));
    out << table_to_csv(summarize_tables(report).overall);
    return kExitOk;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
    if (c.report.empty()) throw ArgumentError("report requires --report");
    const SweepReport report = report_from_json(read_json(c.report));
    OutputDir dir(c.out);
    write_report_views(dir, report);
    dir.manifest("report", resolved(c));
    out << table_to_csv(summarize_tables(report).overall);
    return kExitOk;
}

int cmd_predict(const RunConfig& c, std::ostream& out) {
    if (c.model.empty() || c.reducer.empty()) throw ArgumentError("predict requires --model and --reducer");
    const MlpModel model = model_from_json(read_json(c.model));
    const FeatureReducer reducer = reducer_from_json(read_json(c.reducer));
    if (model.reducer_ref != reducer.id()) {
        throw ValidationError("model expects reducer " + model.reducer_ref + ", got " + reducer.id());
    }

    // Accept either a patient CSV or a symptom table.
    auto in = open_input(c.input);
    std::string first_line;
    std::getline(in, first_line);
    in.seekg(0);
    Eigen::MatrixXd rows;
    std::vector<std::string> names, columns;
    try {
        if (first_line.rfind("source_chemical,", 0) == 0) {
            const ParsedPatients parsed = parse_patient_set(in, model.dims().output);
            rows = parsed.patients.to_real();
            names = parsed.source_chemicals;
            columns = parsed.symptom_names;
        } else {
            const SymptomMatrix m = parse_symptom_table(in);
            rows = m.to_real();
            names = m.chemical_names();
            columns = m.symptom_names();
        }
    } catch (const Error& e) {
        throw ParseError(c.input + ": " + e.what());
    }
    if (columns != reducer.symptom_names) {
        throw ShapeError("input columns of '" + c.input + "' do not match the reducer's symptoms");
    }

    const Eigen::MatrixXd probs = forward_batch(model, apply_reducer(reducer, rows));
    const std::size_t top = std::min<std::size_t>(std::max<std::size_t>(c.top, 1), model.dims().output);
    std::string text = "row,input_name,rank,class_index,class_name,probability\n";
    std::vector<std::size_t> order(model.dims().output);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return probs(i, static_cast<Eigen::Index>(a)) > probs(i, static_cast<Eigen::Index>(b));
        });
        for (std::size_t r = 0; r < top; ++r) {
            const std::size_t cls = order[r];
            const std::string cls_name = model.class_names.empty() ? std::to_string(cls) : model.class_names[cls];
            char prob[32];
            std::snprintf(prob, sizeof prob, "%.9f", probs(i, static_cast<Eigen::Index>(cls)));
            text += std::to_string(i) + "," + csv::escape(names[static_cast<std::size_t>(i)]) + "," +
                   std::to_string(r + 1) + "," + std::to_string(cls) + "," + csv::escape(cls_name) + "," + prob + "\n";
        }
    }
    OutputDir dir(c.out);
    dir.write("predictions.csv", text);
    dir.manifest("predict", resolved(c));
    out << "scored " << probs.rows() << " rows\n";
    return kExitOk;
}

/// Expands `--config file` into --key=value tokens placed ahead of the
/// explicit flags, so flags given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::vector<std::string> from_file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
            continue;
        }
        auto in = open_input(path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line.erase(0, line.find_first_not_of(" \t\r"));
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": expected key = value");
            }
            std::string key = line.substr(0, eq), value = line.substr(eq + 1);
            key.erase(key.find_last_not_of(" \t") + 1);
            value.erase(0, value.find_first_not_of(" \t"));
            std::replace(key.begin(), key.end(), '_', '-');
            if (key.empty() || key == "config") {
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad key");
            }
            from_file.push_back("--" + key + "=" + value);
        }
    }
    if (!out.empty() && !from_file.empty()) out.insert(out.begin() + 1, from_file.begin(), from_file.end());
    return out;
}

} // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Symptom-matrix dimension reduction and scaled conjugate gradient classifier pipeline", "triage"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&, std::ostream&);
    };
    const Command commands[] = {
        {"synth", "Write a synthetic symptom matrix", cmd_synth},
        {"dedup", "Collapse duplicate profiles", cmd_dedup},
        {"testsets", "Write clean and perturbed simulated-patient sets", cmd_testsets},
        {"reduce", "Fit a feature reducer", cmd_reduce},
        {"train", "Train one classifier", cmd_train},
        {"sweep", "Run the hidden-size sweep over reduction techniques", cmd_sweep},
        {"report", "Rebuild tables and plot data from a report", cmd_report},
        {"predict", "Rank chemicals for feature rows", cmd_predict},
    };
    std::map<CLI::App*, const Command*> handlers;
    for (const auto& command : commands) {
        CLI::App* sub = app.add_subcommand(command.name, command.help);
        sub->add_option("--input", cfg.input, "Symptom table or patient CSV");
        sub->add_option("--synth", cfg.synth, "Synthesize n,p instead of reading --input");
        sub->add_option("--marginals", cfg.marginals, "File of per-symptom marginals for --synth");
        sub->add_option("--marginal-range", cfg.marginal_range, "lo,hi range for random marginals");
        sub->add_option("--k", cfg.k, "Reduced feature count");
        sub->add_option("--technique", cfg.technique, "all|first|random|variance|correlation|pca (comma list for sweep)");
        sub->add_option("--hidden", cfg.hidden, "Hidden sizes: a:b:step, a,b,c or one size");
        sub->add_option("--models-per-size", cfg.models_per_size, "Models trained per hidden size");
        sub->add_option("--rates", cfg.rates, "Perturbation rates, comma separated");
        sub->add_option("--copies", cfg.copies, "Simulated patients per chemical");
        sub->add_option("--factor", cfg.factor, "Replication factor before the train/test split");
        sub->add_option("--train-fraction", cfg.train_fraction, "Training share of the split");
        sub->add_option("--seed", cfg.seed, "Seed controlling every random draw");
        sub->add_option("--workers", cfg.workers, "Concurrent training jobs");
        sub->add_option("--out", cfg.out, "Output directory");
        sub->add_option("--max-epochs", cfg.max_epochs, "SCG epoch limit");
        sub->add_option("--min-gradient", cfg.min_gradient, "Stop when the gradient norm falls below this");
        sub->add_option("--goal", cfg.goal, "Stop when the loss reaches this");
        sub->add_option("--threshold", cfg.threshold, "Correlation threshold to check the selection against");
        sub->add_option("--replication", cfg.replication, "Replication factors for the resampling curve");
        sub->add_option("--report", cfg.report, "Sweep report JSON");
        sub->add_option("--model", cfg.model, "Model JSON");
        sub->add_option("--reducer", cfg.reducer, "Reducer JSON");
        sub->add_option("--top", cfg.top, "Classes listed per row");
        sub->add_option("--config", cfg.config, "key = value file; flags override it");
        sub->add_flag("--verbose", cfg.verbose, "Echo the resolved configuration");
        handlers[sub] = &command;
    }

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    const Command* command = nullptr;
    for (const auto& [sub, handler] : handlers) {
        if (sub->parsed()) command = handler;
    }
    if (cfg.verbose) err << resolved(cfg).dump(2) << "\n";
    try {
        return command->run(cfg, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateInputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace triage
