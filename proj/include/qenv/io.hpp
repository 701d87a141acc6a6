#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <qenv/numerics.hpp>
#include <qenv/trace.hpp>

namespace qenv {

// ----- number formatting -----

// Shortest decimal form that parses back to the identical double. All file
// formats below use it, so a write/read round trip is bitwise exact.
std::string format_double(double x);

// Inverse of format_double; rejects anything but a full numeric token.
double parse_double(const std::string& token);

// ----- CSV tables -----

struct CsvTable {
  std::vector<std::string> header;
  RealMatrix values;
};

// One header line, then one row per line. Cell count must match the header
// everywhere; non-finite cells are refused on write.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const RealMatrix& values);
CsvTable read_csv(const std::filesystem::path& path);

// Columns t, re, im, abs on the trace grid.
void write_trace_csv(const std::filesystem::path& path, const VisibilityTrace& trace);

// ----- whole files -----

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace qenv
