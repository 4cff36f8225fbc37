#include "tni/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tni {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_grid_csv(const std::filesystem::path& path, const GridCsvHeader& header, const Vec& values) {
  if (values.size() != static_cast<Eigen::Index>(header.n) * header.n)
    throw std::invalid_argument("write_grid_csv: value count does not match n^2");
  std::ofstream out = open_out(path);
  out << header.n << ',' << format_value(header.extent) << ',' << header.field << ','
      << header.units << '\n';
  for (int j = 0; j < header.n; ++j) {
    for (int i = 0; i < header.n; ++i) {
      if (i) out << ',';
      out << format_value(values(i + j * header.n));
    }
    out << '\n';
  }
}

Vec read_grid_csv(const std::filesystem::path& path, GridCsvHeader* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty grid CSV: " + path.string());

  GridCsvHeader h;
  {
    std::istringstream hs(line);
    std::string tok;
    if (!std::getline(hs, tok, ',')) throw std::runtime_error("bad grid CSV header");
    h.n = std::stoi(tok);
    if (!std::getline(hs, tok, ',')) throw std::runtime_error("bad grid CSV header");
    h.extent = std::stod(tok);
    std::getline(hs, h.field, ',');
    std::getline(hs, h.units, ',');
  }
  if (h.n < 1) throw std::runtime_error("bad grid CSV header: n < 1");

  Vec values(static_cast<Eigen::Index>(h.n) * h.n);
  for (int j = 0; j < h.n; ++j) {
    if (!std::getline(in, line))
      throw std::runtime_error("grid CSV truncated at row " + std::to_string(j));
    std::istringstream row(line);
    std::string tok;
    for (int i = 0; i < h.n; ++i) {
      if (!std::getline(row, tok, ','))
        throw std::runtime_error("grid CSV row " + std::to_string(j) + " too short");
      values(i + j * h.n) = std::stod(tok);
    }
  }
  if (header) *header = h;
  return values;
}

void write_triplets_csv(const std::filesystem::path& path, const SpMat& m) {
  std::ofstream out = open_out(path);
  out << "row,col,value\n";
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      out << it.row() << ',' << it.col() << ',' << format_value(it.value()) << '\n';
}

void write_pgm(const std::filesystem::path& path, const Vec& values, int n, double lo, double hi) {
  if (values.size() != static_cast<Eigen::Index>(n) * n)
    throw std::invalid_argument("write_pgm: value count does not match n^2");
  std::ofstream out = open_out(path);
  out << "P2\n" << n << ' ' << n << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i < n; ++i) {
      const double t = std::clamp((values(i + j * n) - lo) / span, 0.0, 1.0);
      out << static_cast<int>(std::lround(255.0 * t));
      out << (i + 1 == n ? '\n' : ' ');
    }
  }
}

void write_pgm(const std::filesystem::path& path, const Vec& values, int n) {
  double lo = values.minCoeff(), hi = values.maxCoeff();
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  write_pgm(path, values, n, lo, hi);
}

void write_iteration_log(const std::filesystem::path& path, const std::vector<IterationRecord>& log) {
  std::ofstream out = open_out(path);
  out << "iter,residual_norm,step_norm,backtracks\n";
  for (const auto& rec : log)
    out << rec.iter << ',' << format_value(rec.residual_norm) << ','
        << format_value(rec.step_norm) << ',' << rec.backtracks << '\n';
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for checksum: " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize k = 0; k < got; ++k) {
      hash ^= static_cast<unsigned char>(buf[k]);
      hash *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

}  // namespace tni
