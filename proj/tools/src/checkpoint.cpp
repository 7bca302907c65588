#include "enot/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace enot::cli {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'O', 'T', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u(std::bit_cast<std::uint64_t>(v), 8); }
  void block(const Vector& v) {
    u(static_cast<std::uint64_t>(v.size()), 8);
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  std::vector<unsigned char>& bytes() { return out_; }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}
  const unsigned char* take(std::size_t n) {
    if (n > n_ - pos_) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint is truncated");
    const unsigned char* at = p_ + pos_;
    pos_ += n;
    return at;
  }
  std::uint64_t u(int bytes) {
    const unsigned char* b = take(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  Vector block(Eigen::Index expected, const char* what) {
    const std::uint64_t n = u(8);
    if (n != static_cast<std::uint64_t>(expected))
      throw Error(ErrorKind::CorruptCheckpoint, std::string(what) + " block has the wrong length");
    Vector v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) v(i) = f64();
    return v;
  }
  bool done() const { return pos_ == n_; }

 private:
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

void write_adam_header(Writer& w, const optim::AdamState& s) {
  w.u(static_cast<std::uint64_t>(s.step), 8);
  w.f64(s.beta1);
  w.f64(s.beta2);
  w.f64(s.eps);
}

void read_adam_header(Reader& r, optim::AdamState& s) {
  s.step = static_cast<std::int64_t>(r.u(8));
  s.beta1 = r.f64();
  s.beta2 = r.f64();
  s.eps = r.f64();
}

}  // namespace

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u(kCheckpointVersion, 4);
  const std::string blob = serialize(ckpt.config);
  w.u(blob.size(), 8);
  w.raw(blob.data(), blob.size());
  w.u(static_cast<std::uint32_t>(ckpt.dim), 4);
  const ot::TrainState& s = ckpt.state;
  w.u(static_cast<std::uint64_t>(s.step), 8);
  w.u(static_cast<std::uint8_t>(s.status), 1);
  write_adam_header(w, s.opt_f);
  write_adam_header(w, s.opt_g);
  for (const Vector* v : {&s.f.params(), &s.g.params(), &s.opt_f.m, &s.opt_f.v, &s.opt_g.m, &s.opt_g.v}) w.block(*v);
  const std::uint64_t sum = fnv1a(w.bytes().data(), w.bytes().size());
  w.u(sum, 8);
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kMagic + 12 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error(ErrorKind::CorruptCheckpoint, "not an ENOT checkpoint");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes.data() + body, 8);
  if (tail.u(8) != fnv1a(bytes.data(), body)) throw Error(ErrorKind::CorruptCheckpoint, "checksum mismatch");

  Reader r(bytes.data(), body);
  r.take(sizeof kMagic);
  const auto version = r.u(4);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::CorruptCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t blob_size = r.u(8);
  const unsigned char* blob = r.take(blob_size);

  Checkpoint c;
  try {
    c.config = parse_config(std::string_view(reinterpret_cast<const char*>(blob), blob_size));
    validate(c.config);
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptCheckpoint, std::string("embedded config is invalid: ") + e.what());
  }
  c.dim = static_cast<int>(r.u(4));
  if (c.dim < 1 || c.dim != c.config.task.dim) throw Error(ErrorKind::CorruptCheckpoint, "dimension mismatch");

  // A fresh state supplies the network shapes the blocks must match.
  ot::TrainState& s = c.state;
  s = ot::init_state(c.config.enot, c.dim);
  s.step = static_cast<std::int64_t>(r.u(8));
  const auto status = r.u(1);
  if (status > static_cast<std::uint8_t>(ot::TrainStatus::diverged))
    throw Error(ErrorKind::CorruptCheckpoint, "bad status byte");
  s.status = static_cast<ot::TrainStatus>(status);
  read_adam_header(r, s.opt_f);
  read_adam_header(r, s.opt_g);
  s.f.set_params(r.block(s.f.params().size(), "f"));
  s.g.set_params(r.block(s.g.params().size(), "g"));
  s.opt_f.m = r.block(s.f.params().size(), "f Adam m");
  s.opt_f.v = r.block(s.f.params().size(), "f Adam v");
  s.opt_g.m = r.block(s.g.params().size(), "g Adam m");
  s.opt_g.v = r.block(s.g.params().size(), "g Adam v");
  if (!r.done()) throw Error(ErrorKind::CorruptCheckpoint, "trailing bytes after the parameter blocks");
  if (s.step < 0 || s.step > c.config.enot.train_steps)
    throw Error(ErrorKind::CorruptCheckpoint, "step outside the configured run");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read checkpoint " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace enot::cli
