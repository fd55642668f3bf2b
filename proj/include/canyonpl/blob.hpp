#pragma once

// Versioned little-endian binary container used for every persisted model.
// Layout: 8 magic bytes "CANYONPL", u32 format version, u32 payload kind,
// then a kind-specific sequence of u64 / f64 / string / array fields.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "canyonpl/error.hpp"

namespace canyonpl {

inline constexpr std::uint32_t kBlobVersion = 1;

enum class BlobKind : std::uint32_t {
  autoencoder = 1,
  linear_model = 2,
  forest_model = 3,
  svr_model = 4,
};

class BlobWriter {
 public:
  explicit BlobWriter(BlobKind kind);

  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  void f64_array(std::span<const double> v);
  void matrix(const Eigen::MatrixXd& m);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

class BlobReader {
 public:
  BlobReader(std::vector<std::uint8_t> bytes, BlobKind expected);
  static BlobReader load(const std::filesystem::path& path, BlobKind expected);
  static BlobKind peek_kind(const std::filesystem::path& path);

  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<double> f64_array();
  Eigen::MatrixXd matrix();
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace canyonpl
