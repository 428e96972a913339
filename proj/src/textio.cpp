#include "pear/textio.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pear/error.hpp"

namespace pear::textio {

using Code = DataError::Code;
using ojson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(Code::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(Code::kIo, "cannot write '" + path.string() + "'");
  out << data;
}

std::string tsv_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tsv_unescape(const std::string& s, const std::string& where) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size())
      throw DataError(Code::kParse, where + ": dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default:
        throw DataError(Code::kParse, where + ": unknown escape '\\" +
                                          std::string(1, s[i]) + "'");
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cols;
}

std::string format_double(double v) {
  // Shortest form that round-trips, matching the JSON writer.
  return ojson(v).dump();
}

std::vector<std::vector<std::string>> read_tsv(
    const std::filesystem::path& path, const std::vector<std::string>& header) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto cols = split_tabs(line);
    if (!saw_header) {
      if (cols != header)
        throw DataError(Code::kParse, where + ": unexpected header");
      saw_header = true;
      continue;
    }
    if (cols.size() != header.size())
      throw DataError(Code::kParse, where + ": expected " +
                                        std::to_string(header.size()) +
                                        " columns, got " +
                                        std::to_string(cols.size()));
    for (auto& c : cols) c = tsv_unescape(c, where);
    rows.push_back(std::move(cols));
  }
  if (!saw_header)
    throw DataError(Code::kParse, path.string() + ": missing header row");
  return rows;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(Code::kParse, where + ": not a number '" + s + "'");
  }
}

}  // namespace pear::textio
