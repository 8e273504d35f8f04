#pragma once

#include "prenmf/matcore.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace prenmf::io {

enum class Format { Csv, MatrixMarket };

// Dense CSV: one matrix row per line, comma separated, '.' decimal point.
// Blank lines and lines starting with '#' are skipped.
Matrix read_csv(std::istream& in);
void write_csv(std::ostream& out, const Matrix& m);

// MatrixMarket "matrix array|coordinate real|integer general|symmetric".
Matrix read_matrix_market(std::istream& in);
void write_matrix_market(std::ostream& out, const Matrix& m, bool coordinate = false);

Format format_from_string(const std::string& name);
Format format_from_path(const std::filesystem::path& path);

Matrix read_matrix(const std::filesystem::path& path, Format format);
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m, Format format = Format::Csv);

}  // namespace prenmf::io
