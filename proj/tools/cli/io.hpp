#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "rtfa/matrix.hpp"
#include "rtfa/tensor.hpp"

namespace rtfa::cli {

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for files that open but do not parse.
class FormatError : public IoError {
 public:
  enum class Kind { magic, truncated, dimension, syntax };
  FormatError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class Encoding { text, binary };

/// `.tsr` and `.txt` select text; anything else is binary.
Encoding encoding_for(const std::filesystem::path& path);

void write_series(const TensorSeries& x, const std::filesystem::path& path, Encoding encoding);
void write_series(const TensorSeries& x, const std::filesystem::path& path);
/// Detects the encoding from the magic bytes.
TensorSeries read_series(const std::filesystem::path& path);

void write_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix(const std::filesystem::path& path);

/// 17 significant digits, '.' decimal point regardless of locale.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace rtfa::cli
