#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pear::textio {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);

// Backslash escaping of \\, tab, newline and carriage return.
std::string tsv_escape(const std::string& s);
std::string tsv_unescape(const std::string& s, const std::string& where);
std::vector<std::string> split_tabs(const std::string& line);

// Shortest decimal form that round-trips.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& where);

// Reads a headered TSV file; rows are unescaped. Errors carry line numbers.
std::vector<std::vector<std::string>> read_tsv(
    const std::filesystem::path& path, const std::vector<std::string>& header);

}  // namespace pear::textio
