#pragma once

#include <string>
#include <vector>

namespace iekf {

/// Writes to `<path>.tmp` and renames over `path`, so readers never see a
/// partial file. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Full-precision scientific notation (%.17e).
std::string fmt_double(double x);

/// Splits one CSV line on commas, trimming surrounding blanks.
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& field, const std::string& context);

}  // namespace iekf
