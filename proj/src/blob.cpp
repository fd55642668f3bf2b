#include "canyonpl/blob.hpp"

#include <fstream>
#include <iterator>

namespace canyonpl {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'N', 'Y', 'O', 'N', 'P', 'L'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

BlobWriter::BlobWriter(BlobKind kind) {
  bytes_.insert(bytes_.end(), std::begin(kMagic), std::end(kMagic));
  put_le(bytes_, kBlobVersion, 4);
  put_le(bytes_, static_cast<std::uint32_t>(kind), 4);
}

void BlobWriter::u64(std::uint64_t v) { put_le(bytes_, v, 8); }

void BlobWriter::f64(double v) { put_le(bytes_, std::bit_cast<std::uint64_t>(v), 8); }

void BlobWriter::str(const std::string& s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void BlobWriter::f64_array(std::span<const double> v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void BlobWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
}

void BlobWriter::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
}

BlobReader::BlobReader(std::vector<std::uint8_t> bytes, BlobKind expected) : bytes_(std::move(bytes)) {
  need(16);
  if (std::memcmp(bytes_.data(), kMagic, 8) != 0) throw Error("not a canyonpl model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes_, 8, 4));
  if (version != kBlobVersion)
    throw Error("model format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kBlobVersion) + ")");
  const auto kind = static_cast<std::uint32_t>(get_le(bytes_, 12, 4));
  if (kind != static_cast<std::uint32_t>(expected)) throw Error("model file holds a different model kind");
  pos_ = 16;
}

BlobReader BlobReader::load(const std::filesystem::path& path, BlobKind expected) {
  return BlobReader(read_file(path), expected);
}

BlobKind BlobReader::peek_kind(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw Error("not a canyonpl model file");
  return static_cast<BlobKind>(get_le(bytes, 12, 4));
}

void BlobReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw Error("truncated model file");
}

std::uint64_t BlobReader::u64() {
  need(8);
  const auto v = get_le(bytes_, pos_, 8);
  pos_ += 8;
  return v;
}

double BlobReader::f64() { return std::bit_cast<double>(u64()); }

std::string BlobReader::str() {
  const auto n = u64();
  need(n);
  std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return s;
}

std::vector<double> BlobReader::f64_array() {
  const auto n = u64();
  need(n * 8);
  std::vector<double> v(n);
  for (auto& x : v) x = f64();
  return v;
}

Eigen::MatrixXd BlobReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  need(rows * cols * 8);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  return m;
}

}  // namespace canyonpl
