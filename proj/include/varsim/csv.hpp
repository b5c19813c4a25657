#ifndef VARSIM_CSV_HPP
#define VARSIM_CSV_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 reading and writing. Fields containing a comma, quote, CR
// or LF are quoted; embedded quotes are doubled. Lines end in "\n".
namespace varsim::csv {

using Row = std::vector<std::string>;

std::string escape(std::string_view field);
void append_row(std::string& out, const Row& row);

// Parses a whole document. Accepts "\n" and "\r\n" line endings; a trailing
// newline does not produce an empty row. Throws std::runtime_error for an
// unterminated quoted field.
std::vector<Row> parse(std::string_view text);

// "%.6g": six significant digits.
std::string format_real(double v);

// Whole-file helpers. Both throw IoError naming the path.
std::string read_file(const std::string& path);
std::size_t write_file(const std::string& path, const std::string& content);

}  // namespace varsim::csv

#endif  // VARSIM_CSV_HPP
