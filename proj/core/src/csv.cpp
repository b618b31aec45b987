#include "mvrs/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace mvrs {

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw InvalidValueError("csv: non-numeric value at row " + std::to_string(row) + ", column " +
                            std::to_string(col));
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, Family f) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: '" + path + "' is empty");
  strip_cr(line);
  const std::vector<std::string> header = split_commas(line);
  if (header.size() < 2 || header[0] != "y") {
    throw IoError("csv: header must be y,x1,...,xp");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw IoError("csv: header must be y,x1,...,xp (got '" + header[j] + "' in position " +
                    std::to_string(j + 1) + ")");
    }
  }

  Dataset data;
  data.n_cov = header.size() - 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw InvalidValueError("csv: row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
    }
    data.y.push_back(parse_cell(cells[0], row, 1));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      data.x.push_back(parse_cell(cells[j], row, j + 1));
    }
  }
  data.n_rows = row;
  if (row == 0) throw IoError("csv: '" + path + "' has no data rows");
  data.validate(f);
  return data;
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("csv: cannot write '" + path + "'");
  out << "y";
  for (std::size_t j = 1; j <= data.n_cov; ++j) out << ",x" << j;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.y[i]);
    out << buf;
    const auto z = data.row(i);
    for (double v : z) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("csv: write to '" + path + "' failed");
}

}  // namespace mvrs
