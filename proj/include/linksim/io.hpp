#ifndef LINKSIM_IO_HPP
#define LINKSIM_IO_HPP

#include <optional>
#include <string>
#include <vector>

namespace linksim::io {

// shortest round-trip-exact decimal form
std::string format_double(double v);

// RFC-4180-style quoting: fields containing comma, quote or newline are
// quoted, embedded quotes doubled
std::string csv_escape(const std::string& field);

// Header plus one line per row, LF endings, numeric cells via format_double.
// Rows must be finite; NaN/inf are refused.
std::string csv_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace linksim::io

#endif
