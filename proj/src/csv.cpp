#include "triage/csv.hpp"

#include "triage/errors.hpp"

namespace triage::csv {

std::optional<Record> Reader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        Record record;
        record.line = line_;
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        std::size_t i = 0;
        for (;;) {
            if (i == line.size()) {
                if (!quoted) break;
                // Quoted field continues on the next physical line.
                std::string more;
                if (!std::getline(in_, more)) {
                    throw ParseError("line " + std::to_string(record.line) +
                                     ": unterminated quoted field");
                }
                ++line_;
                if (!more.empty() && more.back() == '\r') more.pop_back();
                field += '\n';
                line = std::move(more);
                i = 0;
                continue;
            }
            const char c = line[i++];
            if (quoted) {
                if (c == '"') {
                    if (i < line.size() && line[i] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"' && field.empty() && !was_quoted) {
                quoted = true;
                was_quoted = true;
            } else if (c == ',') {
                record.fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else {
                field += c;
            }
        }
        record.fields.push_back(std::move(field));
        return record;
    }
    return std::nullopt;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

} // namespace triage::csv
