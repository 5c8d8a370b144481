#include "layerprobe/tables.hpp"

#include <cmath>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"

namespace layerprobe {

using text::format_double;

void check_csv_field(std::string_view field, std::string_view what) {
  if (field.empty() || field.find_first_of(",\n\r\"") != std::string_view::npos)
    throw DataError(std::string(what) + " \"" + std::string(field) +
                    "\" is empty or contains a comma, quote or newline");
}

std::string results_csv(const ResultTable& table) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : table.rows) {
    check_csv_field(r.model, "model");
    check_csv_field(r.method, "method");
    check_csv_field(r.feature, "feature");
    out += r.model + ',' + r.method + ',' + r.feature + ',' + std::to_string(r.layer) + ',' +
           format_double(r.r2_obs) + ',' + format_double(r.r2_rand) + ',' +
           format_double(r.selectivity) + ',' + std::to_string(r.n_folds) + ',' +
           format_double(r.alpha_mode) + '\n';
  }
  return out;
}

void write_results_csv(const std::filesystem::path& path, const ResultTable& table) {
  text::write_file(path, results_csv(table));
}

namespace {

struct LineReader {
  std::string_view source;
  std::size_t line_no = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(std::string(source) + ": line " + std::to_string(line_no) + ": " + msg);
  }
  double real(std::string_view cell, const char* column) const {
    auto v = text::parse_double(cell);
    if (!v || !std::isfinite(*v))
      fail(std::string("column ") + column + ": \"" + std::string(cell) + "\" is not a finite number");
    return *v;
  }
  std::size_t count(std::string_view cell, const char* column) const {
    auto v = text::parse_int(cell);
    if (!v || *v < 0)
      fail(std::string("column ") + column + ": \"" + std::string(cell) +
           "\" is not a non-negative integer");
    return static_cast<std::size_t>(*v);
  }
  std::string id(std::string_view cell, const char* column) const {
    if (cell.empty()) fail(std::string("column ") + column + " is empty");
    return std::string(cell);
  }
};

std::vector<std::string_view> lines_of(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    auto line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

void check_header(const std::vector<std::string_view>& lines, std::string_view expected,
                  std::string_view source) {
  if (lines.empty())
    throw DataError(std::string(source) + ": line 1: empty file, expected header \"" +
                    std::string(expected) + "\"");
  if (lines[0] != expected)
    throw DataError(std::string(source) + ": line 1: header mismatch, expected \"" +
                    std::string(expected) + "\"");
}

}  // namespace

ResultTable parse_results_csv(std::string_view contents, std::string_view source) {
  const auto lines = lines_of(contents);
  check_header(lines, kResultsHeader, source);
  ResultTable table;
  LineReader rd{source};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    rd.line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto c = text::split(lines[i], ',');
    if (c.size() != 9) rd.fail("expected 9 columns, found " + std::to_string(c.size()));
    ResultRow r;
    r.model = rd.id(c[0], "model");
    r.method = rd.id(c[1], "method");
    r.feature = rd.id(c[2], "feature");
    r.layer = rd.count(c[3], "layer");
    r.r2_obs = rd.real(c[4], "r2_obs");
    r.r2_rand = rd.real(c[5], "r2_rand");
    r.selectivity = rd.real(c[6], "selectivity");
    r.n_folds = rd.count(c[7], "n_folds");
    r.alpha_mode = rd.real(c[8], "alpha_mode");
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty())
    throw DataError(std::string(source) + ": line 2: results file has no data rows");
  return table;
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  return parse_results_csv(text::read_file(path), path.string());
}

std::string profiles_csv(const std::vector<ProfileRow>& rows) {
  std::string out(kProfilesHeader);
  out += '\n';
  for (const auto& r : rows) {
    check_csv_field(r.model, "model");
    check_csv_field(r.method, "method");
    check_csv_field(r.feature, "feature");
    out += r.model + ',' + r.method + ',' + r.feature + ',' + std::to_string(r.layer) + ',' +
           format_double(r.lambda) + ',' + format_double(r.score) + ',' +
           format_double(r.delta) + '\n';
  }
  return out;
}

std::vector<ProfileRow> parse_profiles_csv(std::string_view contents, std::string_view source) {
  const auto lines = lines_of(contents);
  check_header(lines, kProfilesHeader, source);
  std::vector<ProfileRow> rows;
  LineReader rd{source};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    rd.line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto c = text::split(lines[i], ',');
    if (c.size() != 7) rd.fail("expected 7 columns, found " + std::to_string(c.size()));
    ProfileRow r;
    r.model = rd.id(c[0], "model");
    r.method = rd.id(c[1], "method");
    r.feature = rd.id(c[2], "feature");
    r.layer = rd.count(c[3], "layer");
    r.lambda = rd.real(c[4], "lambda");
    r.score = rd.real(c[5], "score");
    r.delta = rd.real(c[6], "delta");
    rows.push_back(std::move(r));
  }
  if (rows.empty())
    throw DataError(std::string(source) + ": line 2: profiles file has no data rows");
  return rows;
}

std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path) {
  return parse_profiles_csv(text::read_file(path), path.string());
}

}  // namespace layerprobe
