#include "r2ccp/serialize.hpp"

#include <cstring>
#include <fstream>

#include "r2ccp/errors.hpp"

namespace r2ccp {

namespace {

constexpr char kModelMagic[8] = {'R', '2', 'C', 'P', 'M', 'D', 'L', '1'};
constexpr char kCalibMagic[8] = {'R', '2', 'C', 'P', 'C', 'A', 'L', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot write '" + path + "'");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed for '" + path_ + "'");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open '" + path + "'");
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw IoError("truncated artifact '" + path_ + "'");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<double> f64s() {
    std::uint64_t n = u64();
    if (n > (1ull << 32)) throw IoError("implausible vector length in '" + path_ + "'");
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  std::string str() {
    std::uint64_t n = u64();
    if (n > (1ull << 32)) throw IoError("implausible string length in '" + path_ + "'");
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

void check_magic(Reader& r, const char (&magic)[8], const std::string& what) {
  char got[8];
  r.bytes(got, 8);
  if (std::memcmp(got, magic, 8) != 0)
    throw ArtifactMismatchError("not a " + what + " artifact (bad magic)");
  std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw ArtifactMismatchError("unsupported " + what + " artifact version");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.bytes(kModelMagic, 8);
  w.u32(kFormatVersion);
  w.str(ckpt.config_json);
  w.i32(ckpt.model_cfg.input_dim);
  w.i32(ckpt.model_cfg.hidden_dim);
  w.i32(ckpt.model_cfg.n_layers);
  w.i32(ckpt.model_cfg.k_bins);
  w.u64(ckpt.model_cfg.seed);
  w.f64(ckpt.grid.y_min);
  w.f64(ckpt.grid.y_max);
  w.i32(ckpt.grid.k_bins);
  w.f64s(ckpt.feature_scaler.shift);
  w.f64s(ckpt.feature_scaler.scale);
  w.f64(ckpt.label_scaler.shift);
  w.f64(ckpt.label_scaler.scale);
  w.u32(static_cast<std::uint32_t>(ckpt.layers.size()));
  for (const Layer& l : ckpt.layers) {
    w.i32(l.out_dim);
    w.i32(l.in_dim);
    w.f64s(l.w);
    w.f64s(l.b);
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  check_magic(r, kModelMagic, "model checkpoint");
  Checkpoint ckpt;
  ckpt.config_json = r.str();
  ckpt.model_cfg.input_dim = r.i32();
  ckpt.model_cfg.hidden_dim = r.i32();
  ckpt.model_cfg.n_layers = r.i32();
  ckpt.model_cfg.k_bins = r.i32();
  ckpt.model_cfg.seed = r.u64();
  double y_min = r.f64();
  double y_max = r.f64();
  int grid_bins = r.i32();
  ckpt.grid = build_grid(y_min, y_max, grid_bins);
  ckpt.feature_scaler.shift = r.f64s();
  ckpt.feature_scaler.scale = r.f64s();
  ckpt.label_scaler.shift = r.f64();
  ckpt.label_scaler.scale = r.f64();
  std::uint32_t n_layers = r.u32();
  ckpt.layers.resize(n_layers);
  for (Layer& l : ckpt.layers) {
    l.out_dim = r.i32();
    l.in_dim = r.i32();
    l.w = r.f64s();
    l.b = r.f64s();
    if (l.out_dim < 1 || l.in_dim < 1 ||
        l.w.size() != static_cast<std::size_t>(l.out_dim) * l.in_dim ||
        l.b.size() != static_cast<std::size_t>(l.out_dim))
      throw ArtifactMismatchError("corrupt layer shapes in '" + path + "'");
  }
  return ckpt;
}

Checkpoint make_checkpoint(const Model& m, const Grid& grid, const AffineScaler& fs,
                           const LabelScaler& ls, const std::string& config_json) {
  Checkpoint ckpt;
  ckpt.config_json = config_json;
  ckpt.model_cfg = m.config();
  ckpt.grid = grid;
  ckpt.feature_scaler = fs;
  ckpt.label_scaler = ls;
  ckpt.layers = m.layers();
  for (Layer& l : ckpt.layers) {
    l.mw.clear();
    l.vw.clear();
    l.mb.clear();
    l.vb.clear();
  }
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  return Model::from_weights(ckpt.model_cfg, ckpt.layers);
}

void save_calibration(const CalibrationFile& cf, const std::string& path) {
  Writer w(path);
  w.bytes(kCalibMagic, 8);
  w.u32(kFormatVersion);
  w.str(cf.config_json);
  w.u64(cf.model_hash);
  w.f64(cf.calib.alpha);
  w.i32(cf.calib.k_order);
  w.f64(cf.calib.threshold);
  w.f64s(cf.calib.scores);
  w.close();
}

CalibrationFile load_calibration(const std::string& path) {
  Reader r(path);
  check_magic(r, kCalibMagic, "calibration");
  CalibrationFile cf;
  cf.config_json = r.str();
  cf.model_hash = r.u64();
  cf.calib.alpha = r.f64();
  cf.calib.k_order = r.i32();
  cf.calib.threshold = r.f64();
  cf.calib.scores = r.f64s();
  return cf;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof buf)) break;
  }
  return h;
}

}  // namespace r2ccp
