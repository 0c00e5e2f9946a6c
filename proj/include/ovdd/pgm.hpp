#pragma once

// Portable graymap I/O. Fields map to images with rows as image rows;
// intensities are scaled to [0, 1] by maxval.

#include "ovdd/field.hpp"

#include <stdexcept>
#include <string>

namespace ovdd {

struct PgmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses P2 (ASCII) or P5 (binary) data with 1 <= maxval <= 65535.
ScalarFieldd decode_pgm(const std::string& bytes);
/// 8-bit P5 encoding: round(v * 255) half up, clamped to [0, 255].
std::string encode_pgm(const ScalarFieldd& u);

ScalarFieldd load_pgm(const std::string& path);
void save_pgm(const ScalarFieldd& u, const std::string& path);

}  // namespace ovdd
