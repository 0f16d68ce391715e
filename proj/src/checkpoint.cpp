#include "wavehdnn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wavehdnn/errors.hpp"

namespace wavehdnn {
namespace {

constexpr char kMagic[5] = {'W', 'H', 'D', 'N', 'N'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T value) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    bytes(buf, sizeof(T));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  const std::vector<std::uint8_t>& view() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t end) : in_(in), end_(end) {}
  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }
  void expect(const void* p, std::size_t n, const char* what) {
    need(n);
    if (std::memcmp(in_.data() + pos_, p, n) != 0) throw FormatError(std::string("checkpoint: bad ") + what);
    pos_ += n;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("checkpoint: truncated");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint64_t byte_sum(const std::uint8_t* p, std::size_t n) {
  std::uint64_t s = 0;
  for (std::size_t k = 0; k < n; ++k) s += p[k];
  return s;
}

}  // namespace

std::string Checkpoint::model_kind() const {
  if (tensors.size() == 4) return "lightgcn";
  if (tensors.size() == 16 + 3 * layers) return "wavehdnn";
  return "unknown";
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint64_t>(ckpt.num_users);
  w.le<std::uint64_t>(ckpt.num_items);
  w.le<std::uint64_t>(ckpt.dim);
  w.le<std::uint64_t>(ckpt.layers);
  for (const Matrix& t : ckpt.tensors) {
    w.le<std::uint32_t>(2);
    w.le<std::uint64_t>(static_cast<std::uint64_t>(t.rows()));
    w.le<std::uint64_t>(static_cast<std::uint64_t>(t.cols()));
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) w.le<double>(t(r, c));
    }
  }
  w.le<std::uint64_t>(byte_sum(w.view().data(), w.view().size()));
  return w.take();
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 32 + 8) throw FormatError("checkpoint: truncated");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int k = 7; k >= 0; --k) stored = (stored << 8) | bytes[body + static_cast<std::size_t>(k)];
  if (stored != byte_sum(bytes.data(), body)) throw FormatError("checkpoint: checksum mismatch");

  Reader r(bytes, body);
  r.expect(kMagic, sizeof(kMagic), "magic");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.num_users = r.le<std::uint64_t>();
  ckpt.num_items = r.le<std::uint64_t>();
  ckpt.dim = r.le<std::uint64_t>();
  ckpt.layers = r.le<std::uint64_t>();
  while (!r.done()) {
    const auto rank = r.le<std::uint32_t>();
    if (rank != 2) throw FormatError("checkpoint: unsupported tensor rank " + std::to_string(rank));
    const auto rows = r.le<std::uint64_t>();
    const auto cols = r.le<std::uint64_t>();
    if (rows * cols * 8 > bytes.size()) throw FormatError("checkpoint: tensor larger than file");
    Matrix t(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < t.rows(); ++i) {
      for (Index j = 0; j < t.cols(); ++j) t(i, j) = r.le<double>();
    }
    ckpt.tensors.push_back(std::move(t));
  }
  if (ckpt.tensors.size() < 2) throw FormatError("checkpoint: missing inference embeddings");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace wavehdnn
