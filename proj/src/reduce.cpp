#include "triage/reduce.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "triage/digest.hpp"
#include "triage/errors.hpp"
#include "triage/random.hpp"

namespace triage {

namespace {

void require_k(std::size_t k, std::size_t limit, std::string_view what) {
    if (k < 1 || k > limit) {
        throw ArgumentError("k = " + std::to_string(k) + " outside [1, " + std::to_string(limit) +
                            "] for " + std::string(what));
    }
}

/// Column co-occurrence counts n_ab = #rows with both a and b set; exact in double.
Eigen::MatrixXd cooccurrence(const SymptomMatrix& m) {
    const Eigen::MatrixXd x = m.to_real();
    return x.transpose() * x;
}

FeatureReducer subset_reducer(const SymptomMatrix& m, ReducerKind kind,
                              std::vector<std::size_t> columns) {
    std::sort(columns.begin(), columns.end());
    FeatureReducer r;
    r.kind = kind;
    r.k = columns.size();
    r.symptom_names = m.symptom_names();
    r.selected_columns = std::move(columns);
    return r;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

std::string_view to_string(ReducerKind kind) {
    switch (kind) {
    case ReducerKind::all_features: return "all_features";
    case ReducerKind::first_k: return "first_k";
    case ReducerKind::random_k: return "random_k";
    case ReducerKind::variance: return "variance";
    case ReducerKind::correlation: return "correlation";
    case ReducerKind::pca: return "pca";
    }
    return "unknown";
}

ReducerKind parse_reducer_kind(std::string_view name) {
    for (auto kind : {ReducerKind::all_features, ReducerKind::first_k, ReducerKind::random_k,
                      ReducerKind::variance, ReducerKind::correlation, ReducerKind::pca}) {
        if (to_string(kind) == name) return kind;
    }
    throw ArgumentError("unknown reducer kind '" + std::string(name) + "'");
}

void FeatureReducer::validate() const {
    const std::size_t p = input_dim();
    if (k < 1 || k > p) {
        throw ValidationError("reducer k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(p) + "]");
    }
    if (is_subset()) {
        if (projection.size() != 0 || column_means.size() != 0) {
            throw ValidationError("subset reducer must not carry a projection");
        }
        if (selected_columns.size() != k) {
            throw ValidationError("subset reducer lists " + std::to_string(selected_columns.size()) +
                                  " columns, expected " + std::to_string(k));
        }
        std::vector<bool> used(p, false);
        for (std::size_t c : selected_columns) {
            if (c >= p) throw ValidationError("selected column " + std::to_string(c) + " out of range");
            if (used[c]) throw ValidationError("selected column " + std::to_string(c) + " repeated");
            used[c] = true;
        }
        if (kind == ReducerKind::all_features && k != p) {
            throw ValidationError("all_features reducer must keep every column");
        }
        return;
    }
    if (!selected_columns.empty()) throw ValidationError("pca reducer must not list columns");
    if (static_cast<std::size_t>(projection.rows()) != p ||
        static_cast<std::size_t>(projection.cols()) != k) {
        throw ValidationError("pca projection must be input_dim x k");
    }
    if (static_cast<std::size_t>(column_means.size()) != p) {
        throw ValidationError("pca column_means must have input_dim entries");
    }
    if (!projection.allFinite() || !column_means.allFinite()) {
        throw ValidationError("pca reducer holds non-finite values");
    }
    const Eigen::MatrixXd gram = projection.transpose() * projection;
    const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (off > 1e-10) throw ValidationError("pca projection columns are not orthonormal");
}

std::string FeatureReducer::id() const {
    nlohmann::json j = reducer_to_json(*this);
    j.erase("id");
    return sha256_hex(j.dump()).substr(0, 16);
}

nlohmann::json reducer_to_json(const FeatureReducer& r) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = to_string(r.kind);
    j["k"] = r.k;
    j["symptom_names"] = r.symptom_names;
    if (r.is_subset()) {
        j["selected_columns"] = r.selected_columns;
    } else {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(r.projection.size()));
        for (Eigen::Index i = 0; i < r.projection.rows(); ++i) {
            for (Eigen::Index c = 0; c < r.projection.cols(); ++c) flat.push_back(r.projection(i, c));
        }
        j["projection"] = flat;
        j["column_means"] = std::vector<double>(r.column_means.data(),
                                                r.column_means.data() + r.column_means.size());
    }
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
    j["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr);
    nlohmann::json body = j;
    j["id"] = sha256_hex(body.dump()).substr(0, 16);
    return j;
}

FeatureReducer reducer_from_json(const nlohmann::json& j) {
    FeatureReducer r;
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ValidationError("unsupported reducer format_version " +
                                  j.at("format_version").dump());
        }
        r.kind = parse_reducer_kind(j.at("kind").get<std::string>());
        r.k = j.at("k").get<std::size_t>();
        r.symptom_names = j.at("symptom_names").get<std::vector<std::string>>();
        if (r.is_subset()) {
            r.selected_columns = j.at("selected_columns").get<std::vector<std::size_t>>();
        } else {
            const auto flat = j.at("projection").get<std::vector<double>>();
            const auto means = j.at("column_means").get<std::vector<double>>();
            const auto p = static_cast<Eigen::Index>(r.symptom_names.size());
            const auto k = static_cast<Eigen::Index>(r.k);
            if (static_cast<Eigen::Index>(flat.size()) != p * k) {
                throw ValidationError("pca projection has " + std::to_string(flat.size()) +
                                      " entries, expected input_dim * k");
            }
            r.projection.resize(p, k);
            for (Eigen::Index i = 0; i < p; ++i) {
                for (Eigen::Index c = 0; c < k; ++c) r.projection(i, c) = flat[static_cast<std::size_t>(i * k + c)];
            }
            r.column_means = Eigen::Map<const Eigen::VectorXd>(means.data(),
                                                               static_cast<Eigen::Index>(means.size()));
        }
        if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("threshold").is_null()) r.threshold = j.at("threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("reducer JSON: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("reducer JSON: ") + e.what());
    }
    r.validate();
    if (j.contains("id") && j.at("id").get<std::string>() != r.id()) {
        throw ValidationError("reducer JSON id does not match its contents");
    }
    return r;
}

Eigen::MatrixXd covariance_matrix(const SymptomMatrix& m) {
    if (m.rows() < 2) throw ArgumentError("covariance needs at least 2 rows");
    // Integer counts give exact numerators: cov = (N n_ab - n_a n_b) / (N (N - 1)).
    const Eigen::MatrixXd both = cooccurrence(m);
    const double n = static_cast<double>(m.rows());
    const Eigen::Index p = both.rows();
    Eigen::MatrixXd cov(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a; b < p; ++b) {
            const double numerator = n * both(a, b) - both(a, a) * both(b, b);
            cov(a, b) = cov(b, a) = numerator / (n * (n - 1.0));
        }
    }
    return cov;
}

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& data) {
    if (data.rows() < 2) throw ArgumentError("covariance needs at least 2 rows");
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
    for (Eigen::Index a = 0; a < cov.rows(); ++a) {
        for (Eigen::Index b = a + 1; b < cov.cols(); ++b) cov(b, a) = cov(a, b);
    }
    return cov;
}

CorrelationMatrix pearson_matrix(const SymptomMatrix& m) {
    if (m.rows() < 2) throw ArgumentError("correlation needs at least 2 rows");
    const Eigen::MatrixXd both = cooccurrence(m);
    const double n = static_cast<double>(m.rows());
    const Eigen::Index p = both.rows();

    // Scaled second moments N^2 (N - 1) times the covariance; the factor cancels in r.
    Eigen::MatrixXd moment(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a; b < p; ++b) {
            moment(a, b) = moment(b, a) = n * both(a, b) - both(a, a) * both(b, b);
        }
    }

    CorrelationMatrix out;
    out.zero_variance.resize(static_cast<std::size_t>(p));
    bool any_variance = false;
    for (Eigen::Index a = 0; a < p; ++a) {
        out.zero_variance[static_cast<std::size_t>(a)] = moment(a, a) <= 0.0;
        any_variance |= moment(a, a) > 0.0;
    }
    if (!any_variance) throw DegenerateInputError("every column is constant; correlation undefined");

    const double undefined = std::numeric_limits<double>::quiet_NaN();
    out.r.resize(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a; b < p; ++b) {
            double value = undefined;
            if (out.defined(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) {
                value = a == b ? 1.0
                               : std::clamp(moment(a, b) / std::sqrt(moment(a, a) * moment(b, b)),
                                            -1.0, 1.0);
            }
            out.r(a, b) = out.r(b, a) = value;
        }
    }
    return out;
}

FeatureReducer select_top_variance(const SymptomMatrix& m, std::size_t k) {
    require_k(k, m.cols(), "variance selection");
    const Eigen::VectorXd variance = covariance_matrix(m).diagonal();
    std::vector<std::size_t> order(m.cols());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return variance(static_cast<Eigen::Index>(a)) > variance(static_cast<Eigen::Index>(b));
    });
    order.resize(k);
    return subset_reducer(m, ReducerKind::variance, std::move(order));
}

CorrelationSelection select_least_correlated(const SymptomMatrix& m, std::size_t k,
                                             std::optional<double> threshold) {
    require_k(k, m.cols(), "correlation selection");
    const CorrelationMatrix corr = pearson_matrix(m);
    const std::size_t p = m.cols();
    auto abs_r = [&](std::size_t a, std::size_t b) {
        return std::abs(corr.r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    };

    CorrelationSelection out;
    std::vector<bool> alive(p, true);
    std::size_t survivors = p;

    for (std::size_t c = p; c-- > 0 && survivors > k;) {
        if (corr.zero_variance[c]) {
            alive[c] = false;
            --survivors;
            out.dropped_zero_variance.push_back(c);
            out.elimination_order.push_back(c);
        }
    }

    auto mean_abs_r = [&](std::size_t a) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < p; ++s) {
            if (s == a || !alive[s] || !corr.defined(a, s)) continue;
            total += abs_r(a, s);
            ++count;
        }
        return count ? total / static_cast<double>(count) : 0.0;
    };

    while (survivors > k) {
        double best = -1.0;
        std::size_t best_a = 0, best_b = 0;
        for (std::size_t a = 0; a < p; ++a) {
            if (!alive[a] || corr.zero_variance[a]) continue;
            for (std::size_t b = a + 1; b < p; ++b) {
                if (!alive[b] || corr.zero_variance[b]) continue;
                if (abs_r(a, b) > best) {
                    best = abs_r(a, b);
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // best_a < best_b, so a tie in mean |r| drops best_b.
        const std::size_t drop = mean_abs_r(best_a) > mean_abs_r(best_b) ? best_a : best_b;
        alive[drop] = false;
        --survivors;
        out.elimination_order.push_back(drop);
    }

    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < p; ++c) {
        if (alive[c]) kept.push_back(c);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
            if (corr.defined(kept[i], kept[j])) {
                out.max_surviving_abs_r = std::max(out.max_surviving_abs_r, abs_r(kept[i], kept[j]));
            }
        }
    }
    out.reducer = subset_reducer(m, ReducerKind::correlation, std::move(kept));
    out.reducer.threshold = threshold;
    if (threshold) out.within_threshold = out.max_surviving_abs_r <= *threshold;
    return out;
}

FeatureReducer select_first_or_random_k(const SymptomMatrix& m, std::size_t k, SubsetMode mode,
                                        std::uint64_t seed) {
    require_k(k, m.cols(), "first/random selection");
    std::vector<std::size_t> order(m.cols());
    std::iota(order.begin(), order.end(), 0);
    if (mode == SubsetMode::alphabetical_first) {
        const auto& names = m.symptom_names();
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const std::string la = lower(names[a]), lb = lower(names[b]);
            if (la != lb) return la < lb;
            return names[a] < names[b];
        });
        order.resize(k);
        return subset_reducer(m, ReducerKind::first_k, std::move(order));
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(k);
    FeatureReducer r = subset_reducer(m, ReducerKind::random_k, std::move(order));
    r.seed = seed;
    return r;
}

FeatureReducer select_all_features(const SymptomMatrix& m) {
    if (m.cols() == 0) throw ArgumentError("matrix has no columns");
    std::vector<std::size_t> all(m.cols());
    std::iota(all.begin(), all.end(), 0);
    return subset_reducer(m, ReducerKind::all_features, std::move(all));
}

PcaFit pca_fit(const SymptomMatrix& m, std::size_t k, bool center) {
    return pca_fit(m.to_real(), k, center, m.symptom_names());
}

PcaFit pca_fit(const Eigen::MatrixXd& data, std::size_t k, bool center,
               std::vector<std::string> names) {
    const auto n = static_cast<std::size_t>(data.rows());
    const auto p = static_cast<std::size_t>(data.cols());
    if (names.empty()) {
        for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }
    if (names.size() != p) throw ShapeError("pca: name count does not match column count");
    if (n == 0 || p == 0) throw ArgumentError("pca: empty input");
    const std::size_t limit = std::min(center ? (n > 0 ? n - 1 : 0) : n, p);
    require_k(k, limit, center ? "centered pca" : "uncentered pca");

    Eigen::VectorXd means = Eigen::VectorXd::Zero(data.cols());
    if (center) means = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - means.transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::MatrixXd v = svd.matrixV();
    if (s.size() == 0 || s(0) <= 0.0) throw DegenerateInputError("pca: data has no variance");

    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index arg = 0;
        v.col(c).cwiseAbs().maxCoeff(&arg);
        if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
    }

    PcaFit fit;
    fit.singular_values = s;
    const double tol = s(0) * static_cast<double>(std::max(n, p)) *
                       std::numeric_limits<double>::epsilon();
    for (Eigen::Index j = 0; j < s.size(); ++j) fit.rank += s(j) > tol;

    const double total = s.squaredNorm();
    double running = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        const double share = s(j) * s(j) / total;
        running += share;
        fit.variance_explained.push_back(share);
        fit.cumulative.push_back(running);
    }
    for (std::size_t j = 0; j < k; ++j) fit.null_component.push_back(j >= fit.rank);

    fit.reducer.kind = ReducerKind::pca;
    fit.reducer.k = k;
    fit.reducer.symptom_names = std::move(names);
    fit.reducer.projection = v.leftCols(static_cast<Eigen::Index>(k));
    fit.reducer.column_means = means;
    return fit;
}

Eigen::MatrixXd apply_reducer(const FeatureReducer& r, const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.cols()) != r.input_dim()) {
        throw ShapeError("reducer expects " + std::to_string(r.input_dim()) + " columns, got " +
                         std::to_string(rows.cols()));
    }
    if (!r.is_subset()) return (rows.rowwise() - r.column_means.transpose()) * r.projection;
    Eigen::MatrixXd out(rows.rows(), static_cast<Eigen::Index>(r.k));
    for (std::size_t j = 0; j < r.k; ++j) {
        out.col(static_cast<Eigen::Index>(j)) = rows.col(static_cast<Eigen::Index>(r.selected_columns[j]));
    }
    return out;
}

FeatureReducer fit_reducer(const SymptomMatrix& m, ReducerKind kind, std::size_t k,
                           std::uint64_t seed) {
    switch (kind) {
    case ReducerKind::all_features: return select_all_features(m);
    case ReducerKind::first_k: return select_first_or_random_k(m, k, SubsetMode::alphabetical_first, seed);
    case ReducerKind::random_k: return select_first_or_random_k(m, k, SubsetMode::random, seed);
    case ReducerKind::variance: return select_top_variance(m, k);
    case ReducerKind::correlation: return select_least_correlated(m, k).reducer;
    case ReducerKind::pca: return pca_fit(m, k, true).reducer;
    }
    throw ArgumentError("unhandled reducer kind");
}

} // namespace triage
