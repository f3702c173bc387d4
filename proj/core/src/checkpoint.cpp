#include "calfoa/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

#include <json.hpp>

#include "calfoa/error.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/scanpath_io.hpp"

namespace calfoa {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'L', '2'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw ParseError("checkpoint truncated", pos_);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint64_t length(std::size_t element) {
    const std::uint64_t n = u64();
    if (n > (b_.size() - pos_) / element) throw ParseError("checkpoint length prefix exceeds the file", pos_ - 8);
    return n;
  }
  std::string str() {
    const std::uint64_t n = length(1);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> vec() {
    const std::uint64_t n = length(8);
    std::vector<double> v(n);
    for (auto& d : v) d = f64();
    return v;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(ck.arch_descriptor);
  if (ck.w.size() != ck.v.size()) throw Error("checkpoint w and v sizes differ");
  w.u64(ck.w.size());
  for (double d : ck.w) w.f64(d);
  for (double d : ck.v) w.f64(d);
  w.u32(static_cast<std::uint32_t>(ck.criterion));
  w.vec(ck.nu);
  w.vec(ck.s);
  w.vec(ck.s_prev);
  w.f64(ck.gaze_position.x);
  w.f64(ck.gaze_position.y);
  w.f64(ck.gaze_velocity.x);
  w.f64(ck.gaze_velocity.y);
  w.f64(ck.mi_h_cond_sum);
  w.vec(ck.mi_p_sum);
  w.u64(ck.mi_frames);
  w.u64(ck.config_hash);
  w.u64(ck.frame);
  w.u64(ck.step);
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("not a checkpoint (bad magic)", 0);
  r.u32();  // consumes the magic
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
  Checkpoint ck;
  ck.arch_descriptor = r.str();
  const std::uint64_t n = r.length(16);
  ck.w.resize(n);
  ck.v.resize(n);
  for (double& d : ck.w) d = r.f64();
  for (double& d : ck.v) d = r.f64();
  const std::uint32_t crit = r.u32();
  if (crit > 2) throw ParseError("invalid criterion tag", r.pos() - 4);
  ck.criterion = static_cast<Criterion>(crit);
  ck.nu = r.vec();
  ck.s = r.vec();
  ck.s_prev = r.vec();
  ck.gaze_position = {r.f64(), r.f64()};
  ck.gaze_velocity = {r.f64(), r.f64()};
  ck.mi_h_cond_sum = r.f64();
  ck.mi_p_sum = r.vec();
  ck.mi_frames = r.u64();
  ck.config_hash = r.u64();
  ck.frame = r.u64();
  ck.step = r.u64();
  if (!r.done()) throw ParseError("trailing bytes after checkpoint", r.pos());
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_bytes(path, encode_checkpoint(ck));
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ck.config_hash));
  const nlohmann::ordered_json side = {{"format", "CAL2"},
                                       {"version", kCheckpointVersion},
                                       {"arch", ck.arch_descriptor},
                                       {"config_hash", hash},
                                       {"frame", ck.frame},
                                       {"parameters", ck.w.size()}};
  write_text_file(path.string() + ".json", side.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace calfoa
