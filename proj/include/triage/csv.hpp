#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace triage::csv {

/// One logical CSV record plus the 1-based line it started on.
struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// Comma-separated reader. Fields may be double-quoted with "" as an escaped
/// quote; quoted fields may span lines. Accepts LF and CRLF endings.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next non-blank record, or nullopt at end of input.
    std::optional<Record> next();

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

/// Quotes `field` only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Joins already-escaped fields.
std::string join(const std::vector<std::string>& fields);

} // namespace triage::csv
