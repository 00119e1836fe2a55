#include "qmc/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "qmc/errors.hpp"

namespace qmc {

namespace {

constexpr char kFmatMagic[4] = {'F', 'M', 'A', 'T'};
constexpr char kGstaMagic[4] = {'G', 'S', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

// Explicit little-endian packing keeps the formats byte-identical on any
// host.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(std::size_t count, const char* what) {
    if (pos_ + count > bytes_.size()) {
      throw FormatError(path_ + ": truncated " + what + ", expected " + std::to_string(count) +
                        " bytes at offset " + std::to_string(pos_) + " but only " +
                        std::to_string(bytes_.size() - pos_) + " remain");
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void expect_magic(const char magic[4]) {
    need(4, "magic");
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
      throw FormatError(path_ + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
    }
    pos_ += 4;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& path() const { return path_; }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path);
}

bool has_csv_extension(const std::string& path) {
  if (path.size() < 4) return false;
  std::string tail = path.substr(path.size() - 4);
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return tail == ".csv";
}

void check_finite(const Eigen::MatrixXd& m, const std::string& path) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(path + ": non-finite value at row " + std::to_string(i) + ", col " +
                        std::to_string(j));
      }
    }
  }
}

Eigen::MatrixXd load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_number = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    bool parse_failed = false;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double value = std::strtod(field.c_str(), &end);
      // the whole field (modulo surrounding spaces) must parse
      const char* p = end;
      while (p && *p != '\0' && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (end == field.c_str() || (p && *p != '\0')) {
        parse_failed = true;
        break;
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }

    if (parse_failed) {
      if (header_allowed) {  // one non-numeric header line is fine
        header_allowed = false;
        continue;
      }
      throw FormatError(path + ": line " + std::to_string(line_number) +
                        ": cannot parse numeric field");
    }
    header_allowed = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path + ": line " + std::to_string(line_number) + ": expected " +
                        std::to_string(rows.front().size()) + " columns, found " +
                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void save_csv(const std::string& path, const Eigen::MatrixXd& data) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j > 0) out << ',';
      out << data(i, j);
    }
    out << '\n';
  }
  write_file(path, std::move(out).str());
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  if (has_csv_extension(path)) {
    Eigen::MatrixXd m = load_csv(path);
    check_finite(m, path);
    return m;
  }

  Reader reader(read_file(path), path);
  reader.expect_magic(kFmatMagic);
  const std::uint32_t version = reader.u32("version");
  if (version != kVersion) {
    throw FormatError(path + ": unsupported FMAT version " + std::to_string(version));
  }
  const std::uint64_t rows = reader.u64("row count");
  const std::uint64_t cols = reader.u64("column count");
  const std::uint8_t dtype = reader.u8("dtype");
  if (dtype > 1) throw FormatError(path + ": unknown dtype " + std::to_string(dtype));
  const std::size_t value_size = dtype == 0 ? 4 : 8;
  const std::uint64_t expected = rows * cols * value_size;
  if (reader.remaining() != expected) {
    throw FormatError(path + ": payload of " + std::to_string(reader.remaining()) +
                      " bytes, expected " + std::to_string(expected) + " (" +
                      std::to_string(rows) + "x" + std::to_string(cols) + ", " +
                      (dtype == 0 ? "f32" : "f64") + ")");
  }

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      const double v = dtype == 0 ? static_cast<double>(reader.f32("payload")) : reader.f64("payload");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  check_finite(m, path);
  return m;
}

}  // namespace

FeatureMatrix load_features(const std::string& path) {
  FeatureMatrix features{load_matrix(path)};
  if (features.n() < 1) throw DataError(path + ": feature matrix has no rows");
  return features;
}

void save_features(const std::string& path, const Eigen::MatrixXd& data, FmatDtype dtype) {
  if (has_csv_extension(path)) {
    save_csv(path, data);
    return;
  }
  std::string out;
  out.reserve(21 + static_cast<std::size_t>(data.size()) * (dtype == FmatDtype::f32 ? 4 : 8));
  out.append(kFmatMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, static_cast<std::uint64_t>(data.rows()));
  put_u64(out, static_cast<std::uint64_t>(data.cols()));
  out.push_back(static_cast<char>(dtype));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (dtype == FmatDtype::f32) {
        put_f32(out, static_cast<float>(data(i, j)));
      } else {
        put_f64(out, data(i, j));
      }
    }
  }
  write_file(path, out);
}

PosteriorMatrix load_posteriors(const std::string& path) {
  PosteriorMatrix posteriors{load_matrix(path)};
  if (posteriors.n() < 1) throw DataError(path + ": posterior matrix has no rows");
  if (posteriors.k() < 2) throw DataError(path + ": posterior matrix needs >= 2 columns");
  return posteriors;
}

GaussianStats load_stats(const std::string& path) {
  Reader reader(read_file(path), path);
  reader.expect_magic(kGstaMagic);
  const std::uint32_t version = reader.u32("version");
  if (version != kVersion) {
    throw FormatError(path + ": unsupported GSTA version " + std::to_string(version));
  }
  const std::uint64_t dim = reader.u64("dimension");
  GaussianStats stats;
  stats.mean.resize(static_cast<Eigen::Index>(dim));
  stats.cov.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < dim; ++i) stats.mean(static_cast<Eigen::Index>(i)) = reader.f64("mean");
  for (std::uint64_t i = 0; i < dim; ++i)
    for (std::uint64_t j = 0; j < dim; ++j)
      stats.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = reader.f64("covariance");
  stats.n_source = static_cast<std::int64_t>(reader.u64("n_source"));

  check_finite(stats.cov, path);
  check_finite(stats.mean, path);
  const double scale = std::max(stats.cov.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (stats.cov - stats.cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw DataError(path + ": covariance asymmetry " + std::to_string(asym / scale) +
                    " exceeds the 1e-10 relative tolerance");
  }
  return stats;
}

void save_stats(const std::string& path, const GaussianStats& stats) {
  if (stats.cov.rows() != stats.mean.size() || stats.cov.cols() != stats.mean.size()) {
    throw ShapeError("save_stats: covariance shape does not match the mean");
  }
  std::string out;
  out.append(kGstaMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, static_cast<std::uint64_t>(stats.mean.size()));
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i) put_f64(out, stats.mean(i));
  for (Eigen::Index i = 0; i < stats.cov.rows(); ++i)
    for (Eigen::Index j = 0; j < stats.cov.cols(); ++j) put_f64(out, stats.cov(i, j));
  put_u64(out, static_cast<std::uint64_t>(stats.n_source));
  write_file(path, out);
}

}  // namespace qmc
