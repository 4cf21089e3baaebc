#include "caasr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"

namespace caasr {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'E', 'C', 'K', 'P', 'T', '1'};

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double v) {
  append_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& what) : buf_(buf), what_(what) {}

  bool at_end() const { return pos_ == buf_.size(); }

  std::uint64_t read_u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double read_f64() { return std::bit_cast<double>(read_u64()); }

  std::string read_bytes(std::size_t n) {
    require(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void require(std::size_t n) {
    if (pos_ + n > buf_.size()) throw DataError("truncated checkpoint: " + what_);
  }
  const std::string& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::string out(kMagic, sizeof(kMagic));
  for (const std::string& name : params.names()) {
    const DenseTensor& t = params.value(name);
    append_u64(out, name.size());
    out.append(name);
    append_u64(out, t.shape.size());
    for (std::size_t d : t.shape) append_u64(out, d);
    for (double v : t.data) append_f64(out, v);
  }
  write_file_atomic(path, out);
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& params) {
  std::string buf = read_file(path);
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("bad checkpoint magic: " + path.string());
  }
  Reader r(buf, path.string());
  r.read_bytes(sizeof(kMagic));
  while (!r.at_end()) {
    std::uint64_t name_len = r.read_u64();
    std::string name = r.read_bytes(name_len);
    std::uint64_t rank = r.read_u64();
    if (rank > 8) throw DataError("corrupt checkpoint tensor rank: " + path.string());
    std::vector<std::size_t> shape;
    std::size_t numel = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      std::uint64_t d = r.read_u64();
      shape.push_back(static_cast<std::size_t>(d));
      numel *= static_cast<std::size_t>(d);
    }
    DenseTensor& t = params.create(name, shape);
    for (std::size_t i = 0; i < numel; ++i) t.data[i] = r.read_f64();
  }
}

}  // namespace caasr
