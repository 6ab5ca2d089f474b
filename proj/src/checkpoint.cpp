#include "liftgeo/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace liftgeo::nn {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'N', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes little-endian");

void put_u32(std::vector<char>& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.insert(out.end(), buf, buf + 4);
}

void put_string(std::vector<char>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, 4);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint string length out of range");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<char> out(kMagic, kMagic + 4);
  put_string(out, ckpt.kind);
  put_u32(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    put_string(out, e.name);
    put_u32(out, static_cast<std::uint32_t>(e.data.rows()));
    put_u32(out, static_cast<std::uint32_t>(e.data.cols()));
    const auto* raw = reinterpret_cast<const char*>(e.data.data());
    out.insert(out.end(), raw, raw + e.data.size() * sizeof(float));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
  Reader in(bytes);
  char magic[4];
  in.take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("bad checkpoint magic");
  Checkpoint ckpt;
  ckpt.kind = in.str();
  const std::uint32_t count = in.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor e;
    e.name = in.str();
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    e.data.resize(rows, cols);
    in.take(e.data.data(), static_cast<std::size_t>(rows) * cols * sizeof(float));
    ckpt.entries.push_back(std::move(e));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint entries");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::vector<char> bytes = encode_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace liftgeo::nn
