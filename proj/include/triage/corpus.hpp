#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace triage {

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named binary matrix: rows are chemicals, columns are signs/symptoms.
class SymptomMatrix {
public:
    SymptomMatrix() = default;

    /// Throws ValidationError if names are not unique, dimensions disagree,
    /// or any entry is not 0/1.
    SymptomMatrix(std::vector<std::string> chemical_names,
                  std::vector<std::string> symptom_names,
                  BinaryMatrix values);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

    const std::vector<std::string>& chemical_names() const { return chemical_names_; }
    const std::vector<std::string>& symptom_names() const { return symptom_names_; }
    const BinaryMatrix& values() const { return values_; }

    std::uint8_t at(std::size_t row, std::size_t col) const {
        return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    Eigen::MatrixXd to_real() const { return values_.cast<double>(); }

    bool operator==(const SymptomMatrix& other) const;

private:
    std::vector<std::string> chemical_names_;
    std::vector<std::string> symptom_names_;
    BinaryMatrix values_;
};

/// Labeled (possibly perturbed) binary feature rows derived from a SymptomMatrix.
class PatientSet {
public:
    PatientSet() = default;

    /// Throws ValidationError on a label outside [0, n_classes), a non-binary
    /// feature, a rate outside [0, 1], or a row/label count mismatch.
    PatientSet(BinaryMatrix features, std::vector<std::size_t> labels, std::size_t n_classes,
               double perturb_rate, std::uint64_t seed);

    std::size_t rows() const { return labels_.size(); }
    std::size_t cols() const { return static_cast<std::size_t>(features_.cols()); }
    std::size_t n_classes() const { return n_classes_; }

    const BinaryMatrix& features() const { return features_; }
    const std::vector<std::size_t>& labels() const { return labels_; }
    double perturb_rate() const { return perturb_rate_; }
    std::uint64_t seed() const { return seed_; }

    Eigen::MatrixXd to_real() const { return features_.cast<double>(); }

    /// Rows at `indices`, in that order.
    PatientSet subset(std::span<const std::size_t> indices) const;

private:
    BinaryMatrix features_;
    std::vector<std::size_t> labels_;
    std::size_t n_classes_ = 0;
    double perturb_rate_ = 0.0;
    std::uint64_t seed_ = 0;
};

struct DedupSummary {
    /// Retained row indices into the input, ascending.
    std::vector<std::size_t> kept;
    /// members[i] lists every input row sharing the profile of kept[i], ascending.
    std::vector<std::vector<std::size_t>> members;
    /// Chemical names matching `members`.
    std::vector<std::vector<std::string>> member_names;
};

struct DedupResult {
    SymptomMatrix matrix;
    DedupSummary summary;
};

struct TrainTestSplit {
    PatientSet train;
    PatientSet test;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

struct FlipDensity {
    /// Hamming distance of each patient row from its source profile.
    std::vector<std::size_t> counts;
    /// histogram[d] = fraction of rows with exactly d flipped bits; length cols + 1.
    std::vector<double> histogram;
    double mean = 0.0;
};

/// Reads the comma-separated chemical-by-symptom table.
SymptomMatrix parse_symptom_table(std::istream& in);
void write_symptom_table(std::ostream& out, const SymptomMatrix& m);

/// Collapses identical profiles to their first occurrence.
DedupResult deduplicate_profiles(const SymptomMatrix& m);
nlohmann::json dedup_summary_to_json(const DedupSummary& summary);

/// factor copies of every row, chemical-major; labels are source row indices.
PatientSet replicate_rows(const SymptomMatrix& m, std::size_t factor);

/// Uniform random permutation under `seed`; the first floor(n * train_fraction)
/// permuted rows form the training set.
TrainTestSplit split_train_test(const PatientSet& p, double train_fraction, std::uint64_t seed);

/// copies simulated patients per chemical, each bit flipped independently with
/// probability `rate`.
PatientSet generate_patient_set(const SymptomMatrix& m, std::size_t copies, double rate,
                                std::uint64_t seed);

FlipDensity flip_density_summary(const PatientSet& p, const SymptomMatrix& reference);

/// Per-column marginals drawn from Uniform(0.1, 0.6).
std::vector<double> default_marginals(std::size_t n_symptoms, std::uint64_t seed);

/// Random binary matrix with pairwise-distinct rows; column j ~ Bernoulli(marginals[j]).
SymptomMatrix synth_matrix(std::size_t n_chemicals, std::size_t n_symptoms,
                           std::span<const double> marginals, std::uint64_t seed);

/// Patient CSV: source_chemical, one column per symptom, label.
void write_patient_set(std::ostream& out, const PatientSet& p, const SymptomMatrix& reference);

struct ParsedPatients {
    PatientSet patients;
    std::vector<std::string> source_chemicals;
    std::vector<std::string> symptom_names;
};

/// Reads a patient CSV. Labels must lie in [0, n_classes).
/// The CSV does not carry the perturbation rate; callers pass it through.
ParsedPatients parse_patient_set(std::istream& in, std::size_t n_classes,
                                 double perturb_rate = 0.0);

} // namespace triage
