#include "sparsenet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "sparsenet/errors.hpp"

namespace sparsenet {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'N', 'E', 'T', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kTextMagic = "sparsenet-checkpoint-text";

class Writer {
 public:
  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>(bits & 0xFF));
      if constexpr (sizeof(T) > 1) bits >>= 8;
    }
  }
  void put_bytes(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw DataError("bad real '" + token + "' in checkpoint");
  return v;
}

Checkpoint load_text(std::istream& in) {
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != kTextMagic || version != 1) throw DataError("unsupported text checkpoint");
  Checkpoint ck;
  std::size_t dims[4];
  in >> word >> ck.method >> word >> ck.epoch >> word >> dims[0] >> dims[1] >> dims[2] >> dims[3];
  if (!in) throw DataError("malformed text checkpoint header");
  std::array<Layer, Mlp::kLayers> layers;
  for (auto& layer : layers) {
    std::string tag;
    std::string kind;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::size_t count = 0;
    in >> tag >> kind >> n_in >> n_out >> count;
    if (!in || tag != "layer") throw DataError("malformed text checkpoint layer header");
    std::string token;
    std::vector<double> bias(n_out);
    if (kind == "sparse") {
      std::vector<Connection> conns(count);
      for (auto& c : conns) {
        in >> c.row >> c.col >> token;
        c.weight = parse_real(token);
      }
      in >> tag;
      for (auto& b : bias) {
        in >> token;
        b = parse_real(token);
      }
      if (!in || tag != "bias") throw DataError("malformed text checkpoint layer");
      layer = SparseLayer::from_connections(n_in, n_out, std::move(conns), std::move(bias));
    } else if (kind == "dense") {
      DenseLayer dense(n_in, n_out);
      for (auto& w : dense.weights()) {
        in >> token;
        w = parse_real(token);
      }
      in >> tag;
      for (auto& b : dense.bias()) {
        in >> token;
        b = parse_real(token);
      }
      if (!in || tag != "bias") throw DataError("malformed text checkpoint layer");
      layer = std::move(dense);
    } else {
      throw DataError("unknown layer kind '" + kind + "'");
    }
  }
  ck.model = Mlp(std::move(layers));
  if (ck.model.dims() != Dims{dims[0], dims[1], dims[2], dims[3]}) throw DataError("checkpoint dims disagree");
  return ck;
}

Checkpoint load_binary(std::vector<char> bytes) {
  Reader r(std::move(bytes));
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw DataError("bad checkpoint magic");
  if (r.get<std::uint32_t>() != kVersion) throw DataError("unsupported checkpoint version");
  Checkpoint ck;
  ck.method = r.get_string(r.get<std::uint32_t>());
  ck.epoch = r.get<std::int32_t>();
  Dims dims;
  dims.n_features = r.get<std::uint64_t>();
  dims.h1 = r.get<std::uint64_t>();
  dims.h2 = r.get<std::uint64_t>();
  dims.n_classes = r.get<std::uint64_t>();
  std::array<Layer, Mlp::kLayers> layers;
  for (auto& layer : layers) {
    const auto kind = r.get<std::uint8_t>();
    const auto n_in = r.get<std::uint64_t>();
    const auto n_out = r.get<std::uint64_t>();
    const auto count = r.get<std::uint64_t>();
    if (kind == 0) {
      if (count > n_in * n_out) throw DataError("checkpoint layer has too many connections");
      std::vector<Connection> conns(count);
      for (auto& c : conns) {
        c.row = r.get<std::uint32_t>();
        c.col = r.get<std::uint32_t>();
        c.weight = r.get<double>();
      }
      std::vector<double> bias(n_out);
      for (auto& b : bias) b = r.get<double>();
      try {
        layer = SparseLayer::from_connections(n_in, n_out, std::move(conns), std::move(bias));
      } catch (const ShapeError& e) {
        throw DataError(std::string("corrupt checkpoint layer: ") + e.what());
      }
    } else if (kind == 1) {
      if (count != n_in * n_out) throw DataError("dense checkpoint layer count mismatch");
      DenseLayer dense(n_in, n_out);
      for (auto& w : dense.weights()) w = r.get<double>();
      for (auto& b : dense.bias()) b = r.get<double>();
      layer = std::move(dense);
    } else {
      throw DataError("unknown layer kind in checkpoint");
    }
  }
  if (!r.done()) throw DataError("trailing bytes in checkpoint");
  try {
    ck.model = Mlp(std::move(layers));
  } catch (const ShapeError& e) {
    throw DataError(std::string("corrupt checkpoint: ") + e.what());
  }
  if (ck.model.dims() != dims) throw DataError("checkpoint dims disagree with its layers");
  return ck;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(ckpt.method.size()));
  w.put_bytes(ckpt.method.data(), ckpt.method.size());
  w.put(static_cast<std::int32_t>(ckpt.epoch));
  const Dims d = ckpt.model.dims();
  for (auto v : {d.n_features, d.h1, d.h2, d.n_classes}) w.put(static_cast<std::uint64_t>(v));
  for (const Layer& layer : ckpt.model.layers()) {
    if (const auto* s = std::get_if<SparseLayer>(&layer)) {
      w.put(std::uint8_t{0});
      w.put(static_cast<std::uint64_t>(s->n_in()));
      w.put(static_cast<std::uint64_t>(s->n_out()));
      w.put(static_cast<std::uint64_t>(s->nnz()));
      for (std::size_t k = 0; k < s->nnz(); ++k) {
        w.put(s->rows()[k]);
        w.put(s->cols()[k]);
        w.put(s->weights()[k]);
      }
      for (double b : s->bias()) w.put(b);
    } else {
      const auto& dl = std::get<DenseLayer>(layer);
      w.put(std::uint8_t{1});
      w.put(static_cast<std::uint64_t>(dl.n_in()));
      w.put(static_cast<std::uint64_t>(dl.n_out()));
      w.put(static_cast<std::uint64_t>(dl.nnz()));
      for (double v : dl.weights()) w.put(v);
      for (double b : dl.bias()) w.put(b);
    }
  }
  write_file(path, w.bytes().data(), w.bytes().size());
}

void save_checkpoint_text(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ostringstream out;
  const Dims d = ckpt.model.dims();
  out << kTextMagic << " 1\n"
      << "method " << (ckpt.method.empty() ? "-" : ckpt.method) << "\nepoch " << ckpt.epoch << "\ndims "
      << d.n_features << ' ' << d.h1 << ' ' << d.h2 << ' ' << d.n_classes << '\n';
  for (const Layer& layer : ckpt.model.layers()) {
    if (const auto* s = std::get_if<SparseLayer>(&layer)) {
      out << "layer sparse " << s->n_in() << ' ' << s->n_out() << ' ' << s->nnz() << '\n';
      for (std::size_t k = 0; k < s->nnz(); ++k) {
        out << s->rows()[k] << ' ' << s->cols()[k] << ' ' << hex(s->weights()[k]) << '\n';
      }
      out << "bias";
      for (double b : s->bias()) out << ' ' << hex(b);
    } else {
      const auto& dl = std::get<DenseLayer>(layer);
      out << "layer dense " << dl.n_in() << ' ' << dl.n_out() << ' ' << dl.nnz() << '\n';
      for (std::size_t i = 0; i < dl.n_in(); ++i) {
        for (std::size_t j = 0; j < dl.n_out(); ++j) out << (j ? " " : "") << hex(dl.weight(i, j));
        out << '\n';
      }
      out << "bias";
      for (double b : dl.bias()) out << ' ' << hex(b);
    }
    out << '\n';
  }
  const std::string text = out.str();
  write_file(path, text.data(), text.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0) {
    return load_binary(std::move(bytes));
  }
  std::istringstream text(std::string(bytes.begin(), bytes.end()));
  Checkpoint ck = load_text(text);
  if (ck.method == "-") ck.method.clear();
  return ck;
}

}  // namespace sparsenet
