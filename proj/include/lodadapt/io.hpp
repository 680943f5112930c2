#pragma once

/** @file io.hpp
    @brief Text artifacts: CSV tables, the lodadapt-field v1 format, coarse
    solution and face flux dumps.

    Doubles are written in the shortest form that reads back to the same
    value, so files are reproducible byte for byte.
*/

#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace lodadapt {

std::string format_double(double v);

using CsvCell = std::variant<std::int64_t, double, std::string>;

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<CsvCell>& cells);
  void close();

private:
  std::ofstream out_;
  std::string path_;
  size_t columns_;
};

/// Rows of a CSV file split at commas (no quoting); the header is row 0.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// "lodadapt-field v1 <d> <n_1> ... <n_d>" followed by one value per line,
/// x fastest.
struct FieldFile {
  int dim = 0;
  std::vector<int> counts;
  std::vector<double> values;
};

void write_field(const std::filesystem::path& path, const FieldFile& field);
FieldFile read_field(const std::filesystem::path& path);

/// Fine-cell coefficient as a field file, and back (the counts must match).
FieldFile coefficient_field(const MeshPair& mesh, const Coefficient& a);
Coefficient field_coefficient(const MeshPair& mesh, const FieldFile& field);
/// Coarse-cell values (saturations) as a field file.
FieldFile coarse_cell_field(const MeshPair& mesh, const Eigen::VectorXd& values);

/// "node_index,x,y[,z],value".
void write_coarse_solution(const std::filesystem::path& path, const MeshPair& mesh, const CoarseFunction& alpha);

/// "face_index,axis,i,j[,k],sigma" with (i, j, k) the face position.
void write_flux(const std::filesystem::path& path, const MeshPair& mesh, const FaceSet& faces,
                const Eigen::VectorXd& sigma);

/// Names of the files that differ between two run directories (present in only
/// one, or with different content). CSV columns named in `ignored_columns` are
/// left out of the comparison; metadata.json is skipped.
std::vector<std::string> artifact_differences(const std::filesystem::path& a, const std::filesystem::path& b,
                                              const std::vector<std::string>& ignored_columns);

} // namespace lodadapt
