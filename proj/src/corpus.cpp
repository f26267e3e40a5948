#include "triage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "triage/csv.hpp"
#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

namespace {

template <typename Names>
void require_unique(const Names& names, std::string_view what) {
    std::unordered_set<std::string_view> seen;
    for (const auto& name : names) {
        if (!seen.insert(name).second) {
            throw ValidationError("duplicate " + std::string(what) + " name '" + name + "'");
        }
    }
}

bool is_binary(const BinaryMatrix& values) {
    return (values.array() <= 1).all();
}

std::string row_key(const BinaryMatrix& values, Eigen::Index row) {
    std::string key(static_cast<std::size_t>(values.cols()), '0');
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        if (values(row, c)) key[static_cast<std::size_t>(c)] = '1';
    }
    return key;
}

std::uint8_t parse_bit(const std::string& cell, std::size_t line, const std::string& column) {
    std::string_view v = cell;
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    if (v == "0") return 0;
    if (v == "1") return 1;
    throw ParseError("line " + std::to_string(line) + ", column '" + column +
                     "': expected 0 or 1, got '" + cell + "'");
}

} // namespace

SymptomMatrix::SymptomMatrix(std::vector<std::string> chemical_names,
                             std::vector<std::string> symptom_names, BinaryMatrix values)
    : chemical_names_(std::move(chemical_names)),
      symptom_names_(std::move(symptom_names)),
      values_(std::move(values)) {
    if (chemical_names_.size() != rows()) {
        throw ValidationError("chemical name count " + std::to_string(chemical_names_.size()) +
                              " does not match row count " + std::to_string(rows()));
    }
    if (symptom_names_.size() != cols()) {
        throw ValidationError("symptom name count " + std::to_string(symptom_names_.size()) +
                              " does not match column count " + std::to_string(cols()));
    }
    require_unique(chemical_names_, "chemical");
    require_unique(symptom_names_, "symptom");
    if (!is_binary(values_)) throw ValidationError("symptom matrix entries must be 0 or 1");
}

bool SymptomMatrix::operator==(const SymptomMatrix& other) const {
    return chemical_names_ == other.chemical_names_ && symptom_names_ == other.symptom_names_ &&
           values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
           values_ == other.values_;
}

PatientSet::PatientSet(BinaryMatrix features, std::vector<std::size_t> labels,
                       std::size_t n_classes, double perturb_rate, std::uint64_t seed)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      perturb_rate_(perturb_rate),
      seed_(seed) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
        throw ValidationError("patient set has " + std::to_string(features_.rows()) +
                              " rows but " + std::to_string(labels_.size()) + " labels");
    }
    for (std::size_t label : labels_) {
        if (label >= n_classes_) {
            throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(n_classes_) + ")");
        }
    }
    if (!(perturb_rate_ >= 0.0 && perturb_rate_ <= 1.0)) {
        throw ValidationError("perturbation rate must lie in [0, 1]");
    }
    if (!is_binary(features_)) throw ValidationError("patient features must be 0 or 1");
}

PatientSet PatientSet::subset(std::span<const std::size_t> indices) const {
    BinaryMatrix features(static_cast<Eigen::Index>(indices.size()), features_.cols());
    std::vector<std::size_t> labels;
    labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows()) throw ArgumentError("subset index out of range");
        features.row(static_cast<Eigen::Index>(i)) =
            features_.row(static_cast<Eigen::Index>(indices[i]));
        labels.push_back(labels_[indices[i]]);
    }
    return PatientSet(std::move(features), std::move(labels), n_classes_, perturb_rate_, seed_);
}

SymptomMatrix parse_symptom_table(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw ParseError("empty symptom table");
    if (header->fields.size() < 2) {
        throw ParseError("line " + std::to_string(header->line) +
                         ": header needs a caption cell and at least one symptom");
    }
    std::vector<std::string> symptoms(header->fields.begin() + 1, header->fields.end());
    const std::size_t n_cols = symptoms.size();

    std::vector<std::string> chemicals;
    std::vector<std::uint8_t> cells;
    while (auto record = reader.next()) {
        if (record->fields.size() != n_cols + 1) {
            throw ParseError("line " + std::to_string(record->line) + ": expected " +
                             std::to_string(n_cols + 1) + " cells, found " +
                             std::to_string(record->fields.size()));
        }
        chemicals.push_back(record->fields[0]);
        for (std::size_t c = 0; c < n_cols; ++c) {
            cells.push_back(parse_bit(record->fields[c + 1], record->line, symptoms[c]));
        }
    }

    BinaryMatrix values(static_cast<Eigen::Index>(chemicals.size()),
                        static_cast<Eigen::Index>(n_cols));
    std::copy(cells.begin(), cells.end(), values.data());
    return SymptomMatrix(std::move(chemicals), std::move(symptoms), std::move(values));
}

void write_symptom_table(std::ostream& out, const SymptomMatrix& m) {
    std::vector<std::string> fields{""};
    for (const auto& s : m.symptom_names()) fields.push_back(csv::escape(s));
    out << csv::join(fields) << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << csv::escape(m.chemical_names()[r]);
        for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << static_cast<int>(m.at(r, c));
        out << '\n';
    }
}

DedupResult deduplicate_profiles(const SymptomMatrix& m) {
    DedupSummary summary;
    std::unordered_map<std::string, std::size_t> cluster_of;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto [it, inserted] =
            cluster_of.try_emplace(row_key(m.values(), static_cast<Eigen::Index>(r)),
                                   summary.kept.size());
        if (inserted) {
            summary.kept.push_back(r);
            summary.members.emplace_back();
            summary.member_names.emplace_back();
        }
        summary.members[it->second].push_back(r);
        summary.member_names[it->second].push_back(m.chemical_names()[r]);
    }

    BinaryMatrix values(static_cast<Eigen::Index>(summary.kept.size()),
                        static_cast<Eigen::Index>(m.cols()));
    std::vector<std::string> names;
    names.reserve(summary.kept.size());
    for (std::size_t i = 0; i < summary.kept.size(); ++i) {
        values.row(static_cast<Eigen::Index>(i)) =
            m.values().row(static_cast<Eigen::Index>(summary.kept[i]));
        names.push_back(m.chemical_names()[summary.kept[i]]);
    }
    return {SymptomMatrix(std::move(names), m.symptom_names(), std::move(values)),
            std::move(summary)};
}

nlohmann::json dedup_summary_to_json(const DedupSummary& summary) {
    nlohmann::json clusters = nlohmann::json::array();
    for (std::size_t i = 0; i < summary.kept.size(); ++i) {
        clusters.push_back({{"representative", summary.kept[i]},
                            {"name", summary.member_names[i].front()},
                            {"members", summary.members[i]},
                            {"member_names", summary.member_names[i]}});
    }
    std::size_t input_rows = 0;
    for (const auto& m : summary.members) input_rows += m.size();
    return {{"input_rows", input_rows},
            {"kept_rows", summary.kept.size()},
            {"kept", summary.kept},
            {"clusters", std::move(clusters)}};
}

PatientSet replicate_rows(const SymptomMatrix& m, std::size_t factor) {
    if (factor == 0) throw ArgumentError("replication factor must be at least 1");
    const auto n = static_cast<Eigen::Index>(m.rows() * factor);
    BinaryMatrix features(n, static_cast<Eigen::Index>(m.cols()));
    std::vector<std::size_t> labels;
    labels.reserve(static_cast<std::size_t>(n));
    Eigen::Index out = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < factor; ++c, ++out) {
            features.row(out) = m.values().row(static_cast<Eigen::Index>(r));
            labels.push_back(r);
        }
    }
    return PatientSet(std::move(features), std::move(labels), m.rows(), 0.0, 0);
}

TrainTestSplit split_train_test(const PatientSet& p, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ArgumentError("train fraction must lie strictly between 0 and 1");
    }
    if (p.rows() == 0) throw ArgumentError("cannot split an empty patient set");

    std::vector<std::size_t> order(p.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    // The epsilon absorbs representation error in products like 10 * 0.7.
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(p.rows()) * train_fraction + 1e-9));
    TrainTestSplit split;
    split.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    split.train = p.subset(split.train_rows);
    split.test = p.subset(split.test_rows);
    return split;
}

PatientSet generate_patient_set(const SymptomMatrix& m, std::size_t copies, double rate,
                                std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ArgumentError("perturbation rate must lie in [0, 1]");
    if (copies == 0) throw ArgumentError("copies per chemical must be at least 1");

    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(m.rows() * copies);
    const auto p = static_cast<Eigen::Index>(m.cols());
    BinaryMatrix features(n, p);
    std::vector<std::size_t> labels;
    labels.reserve(static_cast<std::size_t>(n));
    Eigen::Index out = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < copies; ++c, ++out) {
            for (Eigen::Index j = 0; j < p; ++j) {
                const std::uint8_t bit = m.values()(static_cast<Eigen::Index>(r), j);
                features(out, j) = rng.bernoulli(rate) ? static_cast<std::uint8_t>(1 - bit) : bit;
            }
            labels.push_back(r);
        }
    }
    return PatientSet(std::move(features), std::move(labels), m.rows(), rate, seed);
}

FlipDensity flip_density_summary(const PatientSet& p, const SymptomMatrix& reference) {
    if (p.cols() != reference.cols()) {
        throw ShapeError("patient set has " + std::to_string(p.cols()) +
                         " columns, reference has " + std::to_string(reference.cols()));
    }
    if (p.n_classes() > reference.rows()) {
        throw ShapeError("patient labels exceed the reference chemical count");
    }
    FlipDensity density;
    density.counts.reserve(p.rows());
    density.histogram.assign(p.cols() + 1, 0.0);
    std::vector<std::size_t> tally(p.cols() + 1, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const auto source = static_cast<Eigen::Index>(p.labels()[i]);
        const auto row = static_cast<Eigen::Index>(i);
        std::size_t d = 0;
        for (Eigen::Index j = 0; j < p.features().cols(); ++j) {
            d += p.features()(row, j) != reference.values()(source, j);
        }
        density.counts.push_back(d);
        ++tally[d];
        total += static_cast<double>(d);
    }
    if (p.rows() > 0) {
        for (std::size_t d = 0; d < tally.size(); ++d) {
            density.histogram[d] = static_cast<double>(tally[d]) / static_cast<double>(p.rows());
        }
        density.mean = total / static_cast<double>(p.rows());
    }
    return density;
}

std::vector<double> default_marginals(std::size_t n_symptoms, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "marginals"));
    std::vector<double> marginals(n_symptoms);
    for (auto& m : marginals) m = rng.uniform(0.1, 0.6);
    return marginals;
}

SymptomMatrix synth_matrix(std::size_t n_chemicals, std::size_t n_symptoms,
                           std::span<const double> marginals, std::uint64_t seed) {
    constexpr std::size_t kRetriesPerRow = 10000;
    if (n_chemicals == 0) throw ArgumentError("need at least one chemical");
    if (n_symptoms == 0) throw ArgumentError("need at least one symptom");
    if (marginals.size() != n_symptoms) {
        throw ArgumentError("expected " + std::to_string(n_symptoms) + " marginals, got " +
                            std::to_string(marginals.size()));
    }
    for (double p : marginals) {
        if (!(p > 0.0 && p < 1.0)) throw ArgumentError("marginals must lie in (0, 1)");
    }
    if (n_symptoms < 63 && n_chemicals > (std::uint64_t{1} << n_symptoms)) {
        throw GenerationError("cannot draw " + std::to_string(n_chemicals) +
                              " distinct rows over " + std::to_string(n_symptoms) + " symptoms");
    }

    Rng rng(seed);
    BinaryMatrix values(static_cast<Eigen::Index>(n_chemicals),
                        static_cast<Eigen::Index>(n_symptoms));
    std::unordered_set<std::string> seen;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        std::size_t attempt = 0;
        for (;; ++attempt) {
            if (attempt == kRetriesPerRow) {
                throw GenerationError("row " + std::to_string(r) + " collided " +
                                      std::to_string(kRetriesPerRow) + " times");
            }
            for (Eigen::Index c = 0; c < values.cols(); ++c) {
                values(r, c) = rng.bernoulli(marginals[static_cast<std::size_t>(c)]) ? 1 : 0;
            }
            if (seen.insert(row_key(values, r)).second) break;
        }
    }

    auto numbered = [](std::string_view prefix, std::size_t count) {
        const std::size_t width = std::to_string(count).size();
        std::vector<std::string> names;
        for (std::size_t i = 1; i <= count; ++i) {
            std::string digits = std::to_string(i);
            names.push_back(std::string(prefix) + std::string(width - digits.size(), '0') + digits);
        }
        return names;
    };
    return SymptomMatrix(numbered("chemical_", n_chemicals), numbered("ssx_", n_symptoms),
                         std::move(values));
}

void write_patient_set(std::ostream& out, const PatientSet& p, const SymptomMatrix& reference) {
    if (p.cols() != reference.cols()) throw ShapeError("patient set and reference disagree on columns");
    std::vector<std::string> header{"source_chemical"};
    for (const auto& s : reference.symptom_names()) header.push_back(csv::escape(s));
    header.emplace_back("label");
    out << csv::join(header) << '\n';
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const std::size_t label = p.labels()[i];
        if (label >= reference.rows()) throw ShapeError("label outside the reference chemical list");
        out << csv::escape(reference.chemical_names()[label]);
        for (Eigen::Index j = 0; j < p.features().cols(); ++j) {
            out << ',' << static_cast<int>(p.features()(static_cast<Eigen::Index>(i), j));
        }
        out << ',' << label << '\n';
    }
}

ParsedPatients parse_patient_set(std::istream& in, std::size_t n_classes, double perturb_rate) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->fields.size() < 3 || header->fields.front() != "source_chemical" ||
        header->fields.back() != "label") {
        throw ParseError("patient CSV header must read source_chemical,<symptoms...>,label");
    }
    ParsedPatients parsed;
    parsed.symptom_names.assign(header->fields.begin() + 1, header->fields.end() - 1);
    const std::size_t n_cols = parsed.symptom_names.size();

    std::vector<std::uint8_t> cells;
    std::vector<std::size_t> labels;
    while (auto record = reader.next()) {
        if (record->fields.size() != n_cols + 2) {
            throw ParseError("line " + std::to_string(record->line) + ": expected " +
                             std::to_string(n_cols + 2) + " cells, found " +
                             std::to_string(record->fields.size()));
        }
        parsed.source_chemicals.push_back(record->fields.front());
        for (std::size_t c = 0; c < n_cols; ++c) {
            cells.push_back(parse_bit(record->fields[c + 1], record->line, parsed.symptom_names[c]));
        }
        const std::string& label = record->fields.back();
        std::size_t value = 0;
        try {
            std::size_t used = 0;
            value = std::stoul(label, &used);
            if (used != label.size()) throw std::invalid_argument(label);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(record->line) + ": bad label '" + label + "'");
        }
        labels.push_back(value);
    }
    BinaryMatrix features(static_cast<Eigen::Index>(labels.size()),
                          static_cast<Eigen::Index>(n_cols));
    std::copy(cells.begin(), cells.end(), features.data());
    parsed.patients = PatientSet(std::move(features), std::move(labels), n_classes, perturb_rate, 0);
    return parsed;
}

} // namespace triage
