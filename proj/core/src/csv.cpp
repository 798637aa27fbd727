#include "mipipe/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mipipe {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
  return out;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

double parse_cell(const std::string& s, std::size_t line_no, const std::string& col) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) + ", column '" +
                             col + "': non-numeric cell '" + s + "'");
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  return out;
}

}  // namespace

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

IntensityMatrix read_matrix(const std::filesystem::path& path, const MatrixParseOptions& options) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty matrix file: " + path.string());

  const auto header = split_line(lines[0]);
  const std::size_t id_cols = options.protein_column ? 2 : 1;
  if (header.size() < id_cols + 1) {
    throw std::runtime_error("matrix header needs id column(s) plus at least one sample");
  }
  IntensityMatrix m;
  m.col_ids.assign(header.begin() + static_cast<std::ptrdiff_t>(id_cols), header.end());
  const std::size_t n = m.col_ids.size();
  const std::size_t p = lines.size() - 1;

  m.values.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
  m.mask.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
  m.row_ids.reserve(p);
  if (options.protein_column) m.protein_ids.reserve(p);

  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t line_no = i + 2;
    const auto fields = split_line(lines[i + 1]);
    if (fields.size() != id_cols + n) {
      throw std::runtime_error("ragged row at line " + std::to_string(line_no) + ": expected " +
                               std::to_string(id_cols + n) + " fields, got " +
                               std::to_string(fields.size()));
    }
    m.row_ids.push_back(fields[0]);
    if (options.protein_column) m.protein_ids.push_back(fields[1]);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& cell = fields[id_cols + j];
      if (is_missing_token(cell)) {
        m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::numeric_limits<double>::quiet_NaN();
        m.mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = false;
      } else {
        m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            parse_cell(cell, line_no, m.col_ids[j]);
        m.mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
      }
    }
  }
  m.validate();
  return m;
}

void write_matrix(const IntensityMatrix& m, const std::filesystem::path& path) {
  m.validate();
  auto out = open_out(path);
  out << "id";
  if (m.has_proteins()) out << ",protein";
  for (const auto& c : m.col_ids) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << m.row_ids[static_cast<std::size_t>(i)];
    if (m.has_proteins()) out << ',' << m.protein_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << ',';
      if (m.mask(i, j)) {
        out << format_g17(m.values(i, j));
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

Design read_design(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<std::string> samples;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_line(lines[i]);
    if (i == 0 && fields.size() == 2 && fields[0] == "sample" && fields[1] == "condition") {
      continue;  // optional header
    }
    if (fields.size() != 2) {
      throw std::runtime_error("design file line " + std::to_string(i + 1) +
                               ": expected 'sample,condition'");
    }
    samples.push_back(fields[0]);
    labels.push_back(fields[1]);
  }
  if (samples.empty()) throw std::runtime_error("design file has no assignments: " + path.string());
  return Design::from_assignments(samples, labels);
}

void write_design(const Design& d, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sample,condition\n";
  for (std::size_t j = 0; j < d.sample_ids.size(); ++j) {
    out << d.sample_ids[j] << ',' << d.conditions[static_cast<std::size_t>(d.condition_index[j])]
        << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

std::vector<bool> read_truth(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<bool> truth;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_line(lines[i]);
    if (i == 0 && fields.size() == 2 && fields[0] == "row_id" && fields[1] == "de") continue;
    if (fields.size() != 2 || (fields[1] != "0" && fields[1] != "1")) {
      throw std::runtime_error("truth file line " + std::to_string(i + 1) +
                               ": expected 'row_id,{0|1}'");
    }
    truth.push_back(fields[1] == "1");
  }
  return truth;
}

void write_truth(const std::vector<std::string>& row_ids, const std::vector<bool>& de_rows,
                 const std::filesystem::path& path) {
  if (row_ids.size() != de_rows.size()) {
    throw std::invalid_argument("truth: row id and label lengths differ");
  }
  auto out = open_out(path);
  out << "row_id,de\n";
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    out << row_ids[i] << ',' << (de_rows[i] ? '1' : '0') << '\n';
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
}

}  // namespace mipipe
