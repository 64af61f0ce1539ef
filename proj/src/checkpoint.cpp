#include "catgen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace catgen::model {

namespace {

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void tensor(std::string_view name, const Tensor& t) {
    str(name);
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u64(d);
    for (double v : t.values()) f64(v);
  }
  std::string take() { return std::move(out_); }

 private:
  template <class U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    if (in_.size() - pos_ < n) throw std::runtime_error("checkpoint is truncated");
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str() { return std::string(bytes(u32())); }

  Tensor tensor(std::string_view expected_name) {
    const auto name = str();
    if (name != expected_name) {
      throw std::runtime_error("checkpoint tensor order mismatch: expected " +
                               std::string(expected_name) + ", found " + name);
    }
    const auto rank = u32();
    if (rank == 0) return Tensor{};
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(u64());
      if (d == 0) throw std::runtime_error("checkpoint tensor has a zero dimension");
      count *= d;
    }
    if (count > (in_.size() - pos_) / 8) throw std::runtime_error("checkpoint is truncated");
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = f64();
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  template <class U>
  U le() {
    const auto b = bytes(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::vector<std::string> tensor_names(const ModelParams& p) {
  std::vector<std::string> names;
  p.visit([&](std::string_view n, const Tensor&, ParamKind) { names.emplace_back(n); });
  return names;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.check_shapes(ckpt.config);
  if (ckpt.vocab.size() != ckpt.config.vocab_size) {
    throw std::invalid_argument("checkpoint vocabulary size differs from model config");
  }
  Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const auto& c = ckpt.config;
  for (auto v : {c.vocab_size, c.glove_dim, c.input_embed_dim, c.dense1_dim, c.lstm1_dim,
                 c.lstm2_dim, c.dense2_dim, c.seq_len, c.num_categories}) {
    w.u64(v);
  }
  w.f64(c.dropout);
  w.f64(c.l2);
  w.u8(static_cast<std::uint8_t>((ckpt.params.glove.trainable ? 1 : 0) |
                                 (ckpt.params.embed.trainable ? 2 : 0)));

  w.u64(ckpt.vocab.size());
  for (const auto& t : ckpt.vocab.tokens()) w.str(t);

  const auto names = tensor_names(ckpt.params);
  w.u32(static_cast<std::uint32_t>(names.size()));
  ckpt.params.visit([&](std::string_view name, const Tensor& t, ParamKind) { w.tensor(name, t); });

  w.u8(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    if (!opt.moments.empty() && opt.moments.size() != names.size()) {
      throw std::invalid_argument("optimizer state does not match parameter count");
    }
    w.i64(opt.step);
    w.u32(static_cast<std::uint32_t>(opt.moments.size()));
    for (std::size_t i = 0; i < opt.moments.size(); ++i) {
      w.tensor(names[i] + ".m", opt.moments[i].m);
      w.tensor(names[i] + ".v", opt.moments[i].v);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kCheckpointMagic.size() ||
      r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  auto& c = ckpt.config;
  for (auto* field : {&c.vocab_size, &c.glove_dim, &c.input_embed_dim, &c.dense1_dim,
                      &c.lstm1_dim, &c.lstm2_dim, &c.dense2_dim, &c.seq_len,
                      &c.num_categories}) {
    *field = static_cast<std::size_t>(r.u64());
  }
  c.dropout = r.f64();
  c.l2 = r.f64();
  c.validate();
  const auto flags = r.u8();

  const auto vocab_count = r.u64();
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_count; ++i) tokens.push_back(r.str());
  ckpt.vocab = corpus::Vocabulary::from_tokens(std::move(tokens));

  const auto names = tensor_names(ckpt.params);
  if (r.u32() != names.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  ckpt.params.visit([&](std::string_view name, Tensor& t, ParamKind) { t = r.tensor(name); });
  ckpt.params.glove.trainable = (flags & 1) != 0;
  ckpt.params.embed.trainable = (flags & 2) != 0;
  ckpt.params.check_shapes(c);
  if (ckpt.vocab.size() != c.vocab_size) {
    throw std::runtime_error("checkpoint vocabulary size differs from its config");
  }

  if (r.u8() != 0) {
    nn::AdamState opt;
    opt.step = r.i64();
    const auto count = r.u32();
    if (count != 0 && count != names.size()) {
      throw std::runtime_error("checkpoint optimizer state count mismatch");
    }
    opt.moments.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      opt.moments[i].m = r.tensor(names[i] + ".m");
      opt.moments[i].v = r.tensor(names[i] + ".v");
    }
    ckpt.optimizer = std::move(opt);
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint data");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace catgen::model
