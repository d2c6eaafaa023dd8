#include "synthmean/csv.hpp"

#include "synthmean/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace synthmean {

std::string trim(const std::string &text) {
    const auto *begin = text.data();
    const auto *end = text.data() + text.size();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin)) != 0) {
        ++begin;
    }
    while (end != begin && std::isspace(static_cast<unsigned char>(end[-1])) != 0) {
        --end;
    }
    return std::string(begin, end);
}

std::vector<std::string> split_delimited(const std::string &line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"' && current.empty()) {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

CsvReader::CsvReader(std::istream &in, char delimiter) : in_(in), delimiter_(delimiter) {
    std::string line;
    if (!std::getline(in_, line)) {
        throw SchemaError("empty input: header row required");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    line_ = 1;
    for (auto &name : split_delimited(line, delimiter_)) {
        header_.push_back(trim(name));
    }
}

std::optional<std::size_t> CsvReader::column(const std::string &name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - header_.begin());
}

bool CsvReader::next_row(std::vector<std::string> &fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        fields = split_delimited(line, delimiter_);
        fields.resize(header_.size());
        return true;
    }
    return false;
}

std::string format_double(double value) {
    std::array<char, 32> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), result.ptr);
}

std::optional<double> parse_double(const std::string &text) {
    const std::string cleaned = trim(text);
    if (cleaned.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto *first = cleaned.data();
    const auto *last = cleaned.data() + cleaned.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

} // namespace synthmean
