#pragma once

#include <string>

#include "bfda/types.hpp"

namespace bfda::io {

/// Shortest round-trip decimal representation; used for all CSV output so
/// identical runs produce byte-identical files.
std::string format_double(double x);

/// Dense matrix as comma-separated rows, no header.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

/// Whitespace- or comma-delimited dense matrix (scale-kernel file input).
Matrix read_matrix_any(const std::string& path);

void write_vector_csv(const Vector& v, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit; stable across platforms, used for config hashes.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace bfda::io
