#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kaczmarz/dense.hpp"

// Matrix Market readers and writers for dense matrices and vectors. Writers
// emit the array format with 17 significant digits so finite values
// round-trip exactly through text; readers accept both the array and the
// coordinate format.
namespace kaczmarz::mm {

void write_matrix(std::ostream& out, const DenseMatrix& a);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& a);
DenseMatrix read_matrix(std::istream& in);
DenseMatrix read_matrix(const std::filesystem::path& path);

// Vectors are m-by-1 array matrices.
void write_vector(std::ostream& out, const Vector& v);
void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(std::istream& in);
Vector read_vector(const std::filesystem::path& path);

// One value per line, 17 significant digits. Used by instance directories.
void write_vector_plain(const std::filesystem::path& path, const Vector& v);
Vector read_vector_plain(const std::filesystem::path& path);

// Shortest-exact formatting helper shared by the writers (%.17g).
std::string format_value(double v);

}  // namespace kaczmarz::mm
