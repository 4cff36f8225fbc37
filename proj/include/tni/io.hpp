#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tni/inverse.hpp"
#include "tni/types.hpp"

namespace tni {

/// One-line header of every grid-valued CSV: n,L,field,units.
struct GridCsvHeader {
  int n = 0;
  double extent = 0.0;
  std::string field;
  std::string units;
};

/// Writes a node field as CSV: the header line followed by n rows of n
/// comma-separated values (row j holds nodes (0..n-1, j)).
void write_grid_csv(const std::filesystem::path& path, const GridCsvHeader& header, const Vec& values);

Vec read_grid_csv(const std::filesystem::path& path, GridCsvHeader* header = nullptr);

/// Sparse operator dump as "row,col,value" triplet lines.
void write_triplets_csv(const std::filesystem::path& path, const SpMat& m);

/// 8-bit ASCII portable graymap of a node field, linearly mapped from
/// [lo, hi] to 0..255 with row n-1 on top so +y points up.
void write_pgm(const std::filesystem::path& path, const Vec& values, int n, double lo, double hi);
void write_pgm(const std::filesystem::path& path, const Vec& values, int n);

void write_iteration_log(const std::filesystem::path& path, const std::vector<IterationRecord>& log);

/// FNV-1a 64-bit checksum of a file's bytes, as fixed-width hex.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace tni
