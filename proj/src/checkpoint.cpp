#include "mpe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <set>

namespace mpe::ad {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'E', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T value) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char b[sizeof(T)];
    std::memcpy(b, s_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, b, sizeof(T));
    return value;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > s_.size() - pos_) throw ValidationError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw ValidationError("checkpoint has no tensor named " + name);
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.metadata.size());
  out += ckpt.metadata;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw ValidationError("not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.metadata = r.bytes(r.get<std::uint64_t>());
  const auto count = r.get<std::uint32_t>();
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    if (!names.insert(name).second) throw ValidationError("duplicate tensor " + name + " in checkpoint");
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw ValidationError("tensor " + name + " has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const std::size_t n = shape_size(shape);
    if (n > bytes.size() / sizeof(double)) throw ValidationError("checkpoint truncated in tensor " + name);
    std::vector<double> values(n);
    for (auto& v : values) v = r.get<double>();
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint tensors");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const std::string& metadata, const ParamList& params) {
  Checkpoint ckpt;
  ckpt.metadata = metadata;
  for (const auto& p : params) {
    Tensor copy(p.tensor->shape, p.tensor->values);
    ckpt.tensors.emplace_back(p.name, std::move(copy));
  }
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void restore_params(const Checkpoint& ckpt, const ParamList& params) {
  if (ckpt.tensors.size() != params.size())
    throw ValidationError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model has " +
                          std::to_string(params.size()));
  for (const auto& p : params) {
    const Tensor& t = ckpt.get(p.name);
    if (t.shape != p.tensor->shape)
      throw ValidationError("tensor " + p.name + ": checkpoint shape " + shape_str(t.shape) + ", model shape " +
                            shape_str(p.tensor->shape));
    p.tensor->values = t.values;
  }
}

}  // namespace mpe::ad
