/**
 * @file textio.hpp
 * @brief Small CSV reader, number formatting and atomic file writes.
 */

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hydrosense {

/// Raised for unreadable or malformed input files. Message names file and line.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::filesystem::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  ///< 1-based source line of each row

    std::optional<std::size_t> column(std::string_view name) const;
    /// "<path>:<line>" for row r, used in error messages.
    std::string where(std::size_t r) const;
};

/**
 * Reads a comma-separated file with a mandatory header row. Blank lines are
 * skipped, CR line endings tolerated, and every row must have as many
 * fields as the header. No quoting support.
 */
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
/// Whole-field parse; rejects empty fields, trailing junk, NaN and Inf.
std::optional<double> parse_double(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames over path, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace hydrosense
