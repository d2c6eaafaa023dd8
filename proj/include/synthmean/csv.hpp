#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace synthmean {

/// Minimal delimited-text reader: header row required, configurable
/// delimiter, double quotes for fields containing the delimiter.
class CsvReader {
  public:
    CsvReader(std::istream &in, char delimiter = ',');

    const std::vector<std::string> &header() const { return header_; }

    /// Column index for a header name, if present.
    std::optional<std::size_t> column(const std::string &name) const;

    /// Reads the next row into `fields`. Returns false at end of input.
    /// Rows are padded with empty strings up to the header width.
    bool next_row(std::vector<std::string> &fields);

    /// 1-based line number of the row most recently returned.
    std::size_t line_number() const { return line_; }

  private:
    std::istream &in_;
    char delimiter_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

/// Splits one delimited line honoring double-quoted fields.
std::vector<std::string> split_delimited(const std::string &line, char delimiter);

/// Shortest decimal text that round-trips to the same double. Used for every
/// numeric field the tool emits so outputs are byte-reproducible.
std::string format_double(double value);

/// Parses a double, rejecting trailing junk. Returns nullopt on failure.
std::optional<double> parse_double(const std::string &text);

/// Whitespace-trimmed copy.
std::string trim(const std::string &text);

} // namespace synthmean
