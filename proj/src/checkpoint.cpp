#include "pocketgen/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pocketgen {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "TDSBDD";

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_tensor(std::span<const double> v) {
    put<std::uint64_t>(v.size());
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void put_bytes(std::string_view s) {
    put<std::uint64_t>(s.size());
    out_.append(s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> get_tensor(std::size_t expected, const char* what) {
    const std::size_t at = pos_;
    const auto n = get<std::uint64_t>(what);
    if (n != expected)
      throw CorruptFile(at, std::string(what) + " has " + std::to_string(n) +
                                " values, expected " + std::to_string(expected));
    if (n > (in_.size() - pos_) / sizeof(double))
      throw CorruptFile(pos_, std::string("truncated ") + what);
    std::vector<double> v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::string get_bytes(const char* what) {
    const auto n = get<std::uint64_t>(what);
    if (n > in_.size() - pos_) throw CorruptFile(pos_, std::string("truncated ") + what);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw CorruptFile(pos_, std::string("truncated ") + what);
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const TrainState& s) {
  const ModelConfig& c = s.model.cfg;
  Writer w;
  for (char ch : kMagic) w.put<char>(ch);
  w.put<std::uint32_t>(kCheckpointVersion);
  for (int v : {c.backbone.d_model, c.backbone.n_layers, c.backbone.n_heads, c.backbone.d_ff,
                c.backbone.max_positions, c.backbone.vocab_size, c.diffusion.d_t,
                c.diffusion.hidden, c.diffusion.d_model, c.schedule.T})
    w.put<std::int64_t>(v);
  w.put<double>(c.schedule.beta_start);
  w.put<double>(c.schedule.beta_end);
  w.put<double>(c.coord_scale);
  w.put<std::uint8_t>(s.freeze_head ? 1 : 0);
  w.put<std::int64_t>(s.step);
  w.put_tensor(s.model.backbone.params());
  w.put_tensor(s.model.head.params());
  w.put_tensor(s.backbone_moments.m);
  w.put_tensor(s.backbone_moments.v);
  w.put_tensor(s.head_moments.m);
  w.put_tensor(s.head_moments.v);
  w.put_bytes(s.rng.state());
  return w.take();
}

TrainState decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    throw VersionMismatch("not a checkpoint: bad magic");
  Reader r(bytes.substr(kMagic.size()));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) +
                          ", expected " + std::to_string(kCheckpointVersion));

  ModelConfig c;
  const std::size_t cfg_at = kMagic.size() + r.pos();
  int* ints[] = {&c.backbone.d_model, &c.backbone.n_layers, &c.backbone.n_heads,
                 &c.backbone.d_ff,    &c.backbone.max_positions, &c.backbone.vocab_size,
                 &c.diffusion.d_t,    &c.diffusion.hidden,  &c.diffusion.d_model,
                 &c.schedule.T};
  for (int* p : ints) {
    const auto v = r.get<std::int64_t>("config");
    if (v <= 0 || v > (1 << 30)) throw CorruptFile(cfg_at, "config value out of range");
    *p = static_cast<int>(v);
  }
  c.schedule.beta_start = r.get<double>("config");
  c.schedule.beta_end = r.get<double>("config");
  c.coord_scale = r.get<double>("config");

  TrainState s;
  try {
    s.model = Model(c);
  } catch (const ConfigError& e) {
    throw CorruptFile(cfg_at, std::string("invalid config: ") + e.what());
  }
  const auto base = kMagic.size();
  try {
    s.freeze_head = r.get<std::uint8_t>("flags") != 0;
    s.step = r.get<std::int64_t>("step");
    const std::size_t nb = s.model.backbone.num_params();
    const std::size_t nh = s.model.head.num_params();
    auto bp = r.get_tensor(nb, "backbone params");
    auto hp = r.get_tensor(nh, "head params");
    std::copy(bp.begin(), bp.end(), s.model.backbone.params().begin());
    std::copy(hp.begin(), hp.end(), s.model.head.params().begin());
    s.backbone_moments.m = r.get_tensor(nb, "backbone m");
    s.backbone_moments.v = r.get_tensor(nb, "backbone v");
    s.head_moments.m = r.get_tensor(nh, "head m");
    s.head_moments.v = r.get_tensor(nh, "head v");
    const std::size_t rng_at = r.pos();
    const std::string state = r.get_bytes("rng state");
    try {
      s.rng.set_state(state);
    } catch (const std::exception&) {
      throw CorruptFile(rng_at, "unreadable rng state");
    }
  } catch (const CorruptFile& e) {
    // Reader offsets are relative to the end of the magic
    throw CorruptFile(e.offset() + base, e.what());
  }
  if (r.remaining() != 0) throw CorruptFile(base + r.pos(), "trailing bytes");
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(state);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing checkpoint " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace pocketgen
