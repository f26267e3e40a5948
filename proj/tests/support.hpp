#pragma once

#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "triage/corpus.hpp"

namespace testing_support {

inline triage::SymptomMatrix make_matrix(std::initializer_list<std::initializer_list<int>> rows,
                                         std::vector<std::string> symptom_names = {}) {
    const auto n = rows.size();
    const auto p = rows.begin()->size();
    triage::BinaryMatrix values(n, p);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (int v : row) values(i, j++) = static_cast<std::uint8_t>(v);
        ++i;
    }
    std::vector<std::string> chems;
    for (std::size_t r = 0; r < n; ++r) chems.push_back("chem" + std::to_string(r));
    if (symptom_names.empty()) {
        for (std::size_t c = 0; c < p; ++c) symptom_names.push_back("s" + std::to_string(c));
    }
    return triage::SymptomMatrix(std::move(chems), std::move(symptom_names), std::move(values));
}

/// Random binary matrix with duplicate rows allowed; density varies per column.
inline triage::SymptomMatrix random_matrix(std::size_t n, std::size_t p, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> density(p);
    for (auto& d : density) d = u(gen);
    triage::BinaryMatrix values(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) values(i, j) = u(gen) < density[j] ? 1 : 0;
    std::vector<std::string> chems, names;
    for (std::size_t r = 0; r < n; ++r) chems.push_back("c" + std::to_string(r));
    for (std::size_t c = 0; c < p; ++c) names.push_back("x" + std::to_string(c));
    return triage::SymptomMatrix(std::move(chems), std::move(names), std::move(values));
}

} // namespace testing_support
