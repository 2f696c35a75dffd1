#include "kaczmarz/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kaczmarz::mm {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// First non-comment, non-blank line.
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i == line.size() || line[i] == '%') continue;
    return true;
  }
  return false;
}

struct Header {
  bool coordinate = false;
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty Matrix Market stream");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix") {
    throw IoError("not a Matrix Market matrix: bad banner line");
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "array" && format != "coordinate") {
    throw IoError("unsupported Matrix Market format: " + format);
  }
  if (field != "real" && field != "double" && field != "integer") {
    throw IoError("unsupported Matrix Market field: " + field);
  }
  if (symmetry != "general") {
    throw IoError("unsupported Matrix Market symmetry: " + symmetry);
  }
  return Header{format == "coordinate"};
}

double parse_value(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || (end && *end != '\0')) {
    throw IoError("bad numeric token: '" + tok + "'");
  }
  return v;
}

std::pair<std::size_t, std::size_t> read_dims(std::istream& in,
                                              bool coordinate,
                                              std::size_t& nnz) {
  std::string line;
  if (!next_data_line(in, line)) throw IoError("missing size line");
  std::istringstream ls(line);
  long long m = 0, n = 0, k = 0;
  if (coordinate) {
    if (!(ls >> m >> n >> k)) throw IoError("bad coordinate size line");
    nnz = static_cast<std::size_t>(k);
  } else {
    if (!(ls >> m >> n)) throw IoError("bad array size line");
  }
  if (m < 1 || n < 1) throw IoError("non-positive dimensions");
  return {static_cast<std::size_t>(m), static_cast<std::size_t>(n)};
}

std::vector<double> read_body(std::istream& in, bool coordinate,
                              std::size_t m, std::size_t n, std::size_t nnz) {
  std::vector<double> entries(m * n, 0.0);
  std::string tok;
  if (coordinate) {
    for (std::size_t e = 0; e < nnz; ++e) {
      long long i = 0, j = 0;
      if (!(in >> i >> j >> tok)) throw IoError("truncated coordinate body");
      if (i < 1 || j < 1 || static_cast<std::size_t>(i) > m ||
          static_cast<std::size_t>(j) > n) {
        throw IoError("coordinate index out of range");
      }
      entries[(static_cast<std::size_t>(i) - 1) * n +
              (static_cast<std::size_t>(j) - 1)] += parse_value(tok);
    }
  } else {
    // Array format stores entries column by column.
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        if (!(in >> tok)) throw IoError("truncated array body");
        entries[i * n + j] = parse_value(tok);
      }
    }
  }
  return entries;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, const DenseMatrix& a) {
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      out << format_value(a(i, j)) << "\n";
    }
  }
  if (!out) throw IoError("matrix write failed");
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& a) {
  auto out = open_out(path);
  write_matrix(out, a);
}

DenseMatrix read_matrix(std::istream& in) {
  const Header h = read_header(in);
  std::size_t nnz = 0;
  const auto [m, n] = read_dims(in, h.coordinate, nnz);
  return DenseMatrix(m, n, read_body(in, h.coordinate, m, n, nnz));
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  for (double x : v) out << format_value(x) << "\n";
  if (!out) throw IoError("vector write failed");
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  auto out = open_out(path);
  write_vector(out, v);
}

Vector read_vector(std::istream& in) {
  const Header h = read_header(in);
  std::size_t nnz = 0;
  const auto [m, n] = read_dims(in, h.coordinate, nnz);
  if (n != 1) throw IoError("expected a column vector, got " +
                            std::to_string(n) + " columns");
  auto body = read_body(in, h.coordinate, m, n, nnz);
  if (!all_finite(body)) throw NonFiniteError("vector has non-finite entries");
  return body;
}

Vector read_vector(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_vector(in);
}

void write_vector_plain(const std::filesystem::path& path, const Vector& v) {
  auto out = open_out(path);
  for (double x : v) out << format_value(x) << "\n";
  if (!out) throw IoError("vector write failed: " + path.string());
}

Vector read_vector_plain(const std::filesystem::path& path) {
  auto in = open_in(path);
  Vector v;
  std::string line;
  while (next_data_line(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) v.push_back(parse_value(tok));
  }
  if (!all_finite(v)) throw NonFiniteError("vector has non-finite entries");
  return v;
}

}  // namespace kaczmarz::mm
