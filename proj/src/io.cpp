#include <qenv/io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace qenv {

// ----- number formatting -----

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || token.empty()) {
    throw std::runtime_error("parse_double: not a numeric token: '" + token + "'");
  }
  return value;
}

// ----- CSV tables -----

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const RealMatrix& values) {
  if (header.empty() || static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw std::invalid_argument("write_csv: header width must match the table");
  }
  for (const std::string& name : header) {
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
      throw std::invalid_argument("write_csv: header cell contains a delimiter: '" + name + "'");
    }
  }
  std::ostringstream out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double x = values(i, j);
      if (!std::isfinite(x)) {
        throw std::runtime_error("write_csv: non-finite cell at row " + std::to_string(i));
      }
      if (j) out << ',';
      out << format_double(x);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_csv: cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_csv: missing header in " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table;
  table.header = split_line(line);
  const std::size_t width = table.header.size();

  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> row = split_line(line);
    if (row.size() != width) {
      throw std::runtime_error("read_csv: row " + std::to_string(rows + 1) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(width));
    }
    for (const std::string& cell : row) cells.push_back(parse_double(cell));
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cells[i * width + j];
    }
  }
  return table;
}

void write_trace_csv(const std::filesystem::path& path, const VisibilityTrace& trace) {
  const auto n = static_cast<Eigen::Index>(trace.time_grid.size());
  if (trace.values.size() != n) {
    throw std::invalid_argument("write_trace_csv: grid and values disagree in length");
  }
  RealMatrix table(n, 4);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex d = trace.values[k];
    table(k, 0) = trace.time_grid[static_cast<std::size_t>(k)];
    table(k, 1) = d.real();
    table(k, 2) = d.imag();
    table(k, 3) = std::abs(d);
  }
  write_csv(path, {"t", "re", "im", "abs"}, table);
}

// ----- whole files -----

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_text_file: cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_text_file: cannot open " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write_text_file: write failed for " + path.string());
  }
}

}  // namespace qenv
