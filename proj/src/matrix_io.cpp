#include "prenmf/matrix_io.hpp"

#include "prenmf/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace prenmf::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view token, std::size_t line_no) {
  token = trim(token);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::IoError,
                "cannot parse '" + std::string(token) + "' on line " + std::to_string(line_no));
  }
  return value;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void write_value(std::ostream& out, double v) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

}  // namespace

Matrix read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      row.push_back(parse_double(t.substr(start, comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::IoError, "ragged CSV row on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::IoError, "empty CSV input");

  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  require_finite(m, "CSV input");
  return m;
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      write_value(out, m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty MatrixMarket input");
  std::istringstream header(lowercase(line));
  std::string banner, object, layout, field, symmetry;
  header >> banner >> object >> layout >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix") {
    throw Error(ErrorCode::IoError, "missing %%MatrixMarket matrix banner");
  }
  if (layout != "array" && layout != "coordinate") {
    throw Error(ErrorCode::IoError, "unsupported MatrixMarket layout '" + layout + "'");
  }
  if (field != "real" && field != "integer" && field != "double") {
    throw Error(ErrorCode::IoError, "unsupported MatrixMarket field '" + field + "'");
  }
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") {
    throw Error(ErrorCode::IoError, "unsupported MatrixMarket symmetry '" + symmetry + "'");
  }

  std::size_t line_no = 1;
  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      const auto t = trim(out);
      if (t.empty() || t.front() == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line(line)) throw Error(ErrorCode::IoError, "missing MatrixMarket size line");
  std::istringstream size_line(line);
  long rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (layout == "coordinate") size_line >> nnz;
  if (!size_line || rows < 1 || cols < 1) throw Error(ErrorCode::IoError, "bad MatrixMarket size line");

  Matrix m = Matrix::Zero(rows, cols);
  if (layout == "array") {
    // Column-major; symmetric storage lists the lower triangle only.
    for (Index j = 0; j < cols; ++j) {
      for (Index i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(line)) throw Error(ErrorCode::IoError, "truncated MatrixMarket array");
        m(i, j) = parse_double(line, line_no);
        if (symmetric) m(j, i) = m(i, j);
      }
    }
  } else {
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(line)) throw Error(ErrorCode::IoError, "truncated MatrixMarket coordinates");
      std::istringstream entry(line);
      long i = 0, j = 0;
      std::string value;
      entry >> i >> j >> value;
      if (!entry || i < 1 || j < 1 || i > rows || j > cols) {
        throw Error(ErrorCode::IoError, "bad coordinate entry on line " + std::to_string(line_no));
      }
      m(i - 1, j - 1) = parse_double(value, line_no);
      if (symmetric) m(j - 1, i - 1) = m(i - 1, j - 1);
    }
  }
  require_finite(m, "MatrixMarket input");
  return m;
}

void write_matrix_market(std::ostream& out, const Matrix& m, bool coordinate) {
  if (coordinate) {
    const auto nnz = (m.array() != 0.0).count();
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) {
        if (m(i, j) == 0.0) continue;
        out << i + 1 << ' ' << j + 1 << ' ';
        write_value(out, m(i, j));
        out << '\n';
      }
    }
    return;
  }
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      write_value(out, m(i, j));
      out << '\n';
    }
  }
}

Format format_from_string(const std::string& name) {
  const auto n = lowercase(name);
  if (n == "csv") return Format::Csv;
  if (n == "matrixmarket" || n == "mm" || n == "mtx") return Format::MatrixMarket;
  throw Error(ErrorCode::InvalidArgument, "unknown matrix format '" + name + "'");
}

Format format_from_path(const std::filesystem::path& path) {
  const auto ext = lowercase(path.extension().string());
  return (ext == ".mtx" || ext == ".mm") ? Format::MatrixMarket : Format::Csv;
}

Matrix read_matrix(const std::filesystem::path& path, Format format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return format == Format::Csv ? read_csv(in) : read_matrix_market(in);
}

Matrix read_matrix(const std::filesystem::path& path) { return read_matrix(path, format_from_path(path)); }

void write_matrix(const std::filesystem::path& path, const Matrix& m, Format format) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (format == Format::Csv) {
    write_csv(out, m);
  } else {
    write_matrix_market(out, m);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace prenmf::io
