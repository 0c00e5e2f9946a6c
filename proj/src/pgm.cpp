#include "ovdd/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ovdd {

namespace {

class Cursor {
 public:
  explicit Cursor(const std::string& b) : b_(b) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  long header_int(const char* what) {
    for (;;) {
      while (pos_ < b_.size() && std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
      if (pos_ < b_.size() && b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    return digits(what);
  }

  long ascii_int() {
    while (pos_ < b_.size() && std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
    if (pos_ >= b_.size()) throw PgmError("pgm: truncated pixel data");
    return digits("pixel value");
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  long digits(const char* what) {
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1000000000L) throw PgmError(std::string("pgm: ") + what + " out of range");
      ++pos_;
    }
    if (pos_ == start) throw PgmError(std::string("pgm: malformed ") + what);
    return v;
  }

  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarFieldd decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw PgmError("pgm: missing P2/P5 magic number");
  const bool binary = bytes[1] == '5';
  Cursor c(bytes);
  c.advance(2);
  const long width = c.header_int("width");
  const long height = c.header_int("height");
  const long maxval = c.header_int("maxval");
  if (width < 1 || height < 1) throw PgmError("pgm: empty image");
  if (maxval < 1 || maxval > 65535) throw PgmError("pgm: maxval must lie in [1, 65535]");

  ScalarFieldd u(height, width);
  const double denom = double(maxval);
  if (binary) {
    if (c.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[c.pos()])))
      throw PgmError("pgm: malformed header");
    c.advance(1);
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = std::size_t(width) * std::size_t(height) * bpp;
    if (bytes.size() - c.pos() < need) throw PgmError("pgm: truncated pixel data");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + c.pos());
    for (long i = 0; i < height; ++i)
      for (long j = 0; j < width; ++j) {
        const std::size_t k = (std::size_t(i) * std::size_t(width) + std::size_t(j)) * bpp;
        const long v = bpp == 1 ? p[k] : (long(p[k]) << 8) | p[k + 1];
        if (v > maxval) throw PgmError("pgm: pixel value exceeds maxval");
        u(i, j) = double(v) / denom;
      }
  } else {
    for (long i = 0; i < height; ++i)
      for (long j = 0; j < width; ++j) {
        const long v = c.ascii_int();
        if (v > maxval) throw PgmError("pgm: pixel value exceeds maxval");
        u(i, j) = double(v) / denom;
      }
  }
  return u;
}

std::string encode_pgm(const ScalarFieldd& u) {
  if (u.size() == 0) throw PgmError("pgm: cannot encode an empty field");
  if (!all_finite(u)) throw PgmError("pgm: cannot encode non-finite values");
  std::string out = "P5\n" + std::to_string(u.cols()) + " " + std::to_string(u.rows()) + "\n255\n";
  out.reserve(out.size() + std::size_t(u.size()));
  for (Index i = 0; i < u.rows(); ++i)
    for (Index j = 0; j < u.cols(); ++j) {
      const double v = std::floor(u(i, j) * 255.0 + 0.5);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
    }
  return out;
}

ScalarFieldd load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError("pgm: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const PgmError& e) {
    throw PgmError(std::string(e.what()) + " (" + path + ")");
  }
}

void save_pgm(const ScalarFieldd& u, const std::string& path) {
  const std::string bytes = encode_pgm(u);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError("pgm: cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PgmError("pgm: write failed for " + path);
}

}  // namespace ovdd
