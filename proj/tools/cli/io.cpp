#include "io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <vector>

namespace rtfa::cli {

namespace fs = std::filesystem;

namespace {

constexpr char kBinaryMagic[4] = {'T', 'S', 'R', 'B'};
constexpr std::uint8_t kVersion = 1;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return bytes;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const std::string& buf, std::size_t& pos) {
  if (buf.size() - pos < sizeof(U)) throw FormatError(FormatError::Kind::truncated, "truncated header");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

// Checked product of the header sizes; rejects zero extents.
std::size_t checked_count(const Dims& dims, std::uint64_t T) {
  if (dims.empty()) throw FormatError(FormatError::Kind::dimension, "tensor order K must be positive");
  if (T == 0) throw FormatError(FormatError::Kind::dimension, "series length T must be positive");
  std::uint64_t n = T;
  for (std::size_t p : dims) {
    if (p == 0) throw FormatError(FormatError::Kind::dimension, "tensor dimensions must be positive");
    if (n > std::numeric_limits<std::uint64_t>::max() / p)
      throw FormatError(FormatError::Kind::dimension, "dimension product overflows");
    n *= p;
  }
  if (n > std::numeric_limits<std::size_t>::max() / sizeof(double))
    throw FormatError(FormatError::Kind::dimension, "dimension product overflows");
  return static_cast<std::size_t>(n);
}

TensorSeries assemble(const Dims& dims, std::size_t T, std::vector<double>&& values) {
  const std::size_t p = dims_product(dims);
  std::vector<DenseTensor> slices;
  slices.reserve(T);
  for (std::size_t t = 0; t < T; ++t)
    slices.emplace_back(dims, std::vector<double>(values.begin() + t * p, values.begin() + (t + 1) * p));
  return TensorSeries(std::move(slices));
}

TensorSeries parse_binary(const std::string& buf) {
  std::size_t pos = 4;
  const auto version = get_le<std::uint8_t>(buf, pos);
  if (version != kVersion)
    throw FormatError(FormatError::Kind::magic, "unsupported binary version " + std::to_string(version));
  const auto K = get_le<std::uint32_t>(buf, pos);
  if (K == 0) throw FormatError(FormatError::Kind::dimension, "tensor order K must be positive");
  Dims dims;
  for (std::uint32_t k = 0; k < K; ++k) dims.push_back(get_le<std::uint32_t>(buf, pos));
  const auto T = get_le<std::uint64_t>(buf, pos);
  const std::size_t n = checked_count(dims, T);
  if ((buf.size() - pos) / 8 < n || (buf.size() - pos) % 8 != 0)
    throw FormatError(FormatError::Kind::truncated, "payload size does not match header");
  if ((buf.size() - pos) / 8 > n)
    throw FormatError(FormatError::Kind::truncated, "trailing bytes after payload");
  std::vector<double> values(n);
  for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(buf, pos));
  return assemble(dims, static_cast<std::size_t>(T), std::move(values));
}

// Whitespace tokenizer with locale-free numeric parsing.
class Tokens {
 public:
  explicit Tokens(std::string_view s) : s_(s) {}

  bool next(std::string_view& tok) {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
    if (pos_ == s_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_])) ++pos_;
    tok = s_.substr(start, pos_ - start);
    return true;
  }

  std::string_view need(const char* what) {
    std::string_view tok;
    if (!next(tok)) throw FormatError(FormatError::Kind::truncated, std::string("missing ") + what);
    return tok;
  }

  std::uint64_t need_uint(const char* what) {
    const auto tok = need(what);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec == std::errc::result_out_of_range)
      throw FormatError(FormatError::Kind::dimension, std::string(what) + " out of range");
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw FormatError(FormatError::Kind::syntax, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
  }

  double need_double() {
    const auto tok = need("value");
    return parse_double(tok);
  }

  static double parse_double(std::string_view tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw FormatError(FormatError::Kind::syntax, "bad numeric value '" + std::string(tok) + "'");
    return v;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  std::string_view s_;
  std::size_t pos_ = 0;
};

TensorSeries parse_text(const std::string& buf) {
  Tokens tok(buf);
  if (tok.need("magic") != "TSR") throw FormatError(FormatError::Kind::magic, "not a tensor-series file");
  if (tok.need("version") != "1") throw FormatError(FormatError::Kind::magic, "unsupported text version");
  if (tok.need("encoding") != "text") throw FormatError(FormatError::Kind::magic, "expected text encoding");
  const std::uint64_t K = tok.need_uint("K");
  if (K == 0) throw FormatError(FormatError::Kind::dimension, "tensor order K must be positive");
  if (K > 64) throw FormatError(FormatError::Kind::dimension, "tensor order too large");
  Dims dims;
  for (std::uint64_t k = 0; k < K; ++k) {
    const std::uint64_t p = tok.need_uint("dimension");
    if (p > std::numeric_limits<std::uint32_t>::max())
      throw FormatError(FormatError::Kind::dimension, "dimension out of range");
    dims.push_back(static_cast<std::size_t>(p));
  }
  const std::uint64_t T = tok.need_uint("T");
  const std::size_t n = checked_count(dims, T);
  std::vector<double> values;
  values.reserve(std::min<std::size_t>(n, buf.size() / 2 + 1));
  std::string_view t;
  while (tok.next(t)) {
    if (values.size() == n) throw FormatError(FormatError::Kind::truncated, "more values than the header declares");
    values.push_back(Tokens::parse_double(t));
  }
  if (values.size() != n)
    throw FormatError(FormatError::Kind::truncated,
                      "expected " + std::to_string(n) + " values, found " + std::to_string(values.size()));
  return assemble(dims, static_cast<std::size_t>(T), std::move(values));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

Encoding encoding_for(const fs::path& path) {
  const auto ext = path.extension();
  return ext == ".tsr" || ext == ".txt" ? Encoding::text : Encoding::binary;
}

void write_series(const TensorSeries& x, const fs::path& path) { write_series(x, path, encoding_for(path)); }

void write_series(const TensorSeries& x, const fs::path& path, Encoding encoding) {
  if (x.empty()) throw IoError("cannot write an empty series");
  const Dims& dims = x.dims();
  std::string buf;
  if (encoding == Encoding::binary) {
    buf.append(kBinaryMagic, 4);
    buf.push_back(static_cast<char>(kVersion));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dims.size()));
    for (std::size_t p : dims) put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(p));
    put_le<std::uint64_t>(buf, x.length());
    buf.reserve(buf.size() + 8 * x.length() * x.slice_size());
    for (const auto& slice : x.slices())
      for (double v : slice.data()) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  } else {
    buf = "TSR 1 text\n" + std::to_string(dims.size());
    for (std::size_t p : dims) buf += " " + std::to_string(p);
    buf += " " + std::to_string(x.length()) + "\n";
    for (const auto& slice : x.slices()) {
      bool first = true;
      for (double v : slice.data()) {
        if (!first) buf += ' ';
        buf += format_double(v);
        first = false;
      }
      buf += '\n';
    }
  }
  write_text_file(path, buf);
}

TensorSeries read_series(const fs::path& path) {
  const std::string buf = slurp(path);
  if (buf.size() >= 4 && buf.compare(0, 4, kBinaryMagic, 4) == 0) return parse_binary(buf);
  if (buf.rfind("TSR", 0) == 0) return parse_text(buf);
  throw FormatError(FormatError::Kind::magic, "'" + path.string() + "' is not a tensor-series file");
}

void write_matrix(const Matrix& m, const fs::path& path) {
  std::string buf = "MTX 1\n" + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) buf += ' ';
      buf += format_double(m(i, j));
    }
    buf += '\n';
  }
  write_text_file(path, buf);
}

Matrix read_matrix(const fs::path& path) {
  const std::string buf = slurp(path);
  Tokens tok(buf);
  if (tok.need("magic") != "MTX" || tok.need("version") != "1")
    throw FormatError(FormatError::Kind::magic, "'" + path.string() + "' is not a matrix file");
  const std::uint64_t rows = tok.need_uint("rows");
  const std::uint64_t cols = tok.need_uint("cols");
  if (rows == 0 || cols == 0) throw FormatError(FormatError::Kind::dimension, "matrix extents must be positive");
  if (rows > (std::uint64_t{1} << 31) || cols > (std::uint64_t{1} << 31) || rows * cols > (std::uint64_t{1} << 40))
    throw FormatError(FormatError::Kind::dimension, "matrix too large");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = tok.need_double();
  std::string_view extra;
  if (tok.next(extra)) throw FormatError(FormatError::Kind::truncated, "more values than the header declares");
  return m;
}

void write_text_file(const fs::path& path, const std::string& contents) {
  auto out = open_out(path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  finish(out, path);
}

}  // namespace rtfa::cli
