#include "ctxrnnt/numerics/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'R', 'N', 'N', 'T', '\0'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(T));
    }
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      throw ValidationError("not a ctxrnnt container (bad magic)");
    }
    pos_ += sizeof(kMagic);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ValidationError("truncated container");
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Container::get(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return r.value;
  }
  throw ValidationError("container has no record '" + name + "'");
}

bool Container::has(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return true;
  }
  return false;
}

std::string serialize_container(const Container& c) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint64_t>(out, c.records.size());
  for (const auto& r : c.records) {
    put_string(out, r.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.value.rank()));
    for (std::size_t d : r.value.shape()) put<std::uint64_t>(out, d);
    for (Real v : r.value.values()) put<double>(out, v);
  }
  return out;
}

Container parse_container(const std::string& bytes) {
  Reader in(bytes);
  in.expect_magic();
  const auto version = in.get<std::uint32_t>();
  if (version != kContainerVersion) {
    throw ValidationError("unsupported container version " +
                          std::to_string(version));
  }
  Container c;
  const auto n_meta = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = in.get_string();
    c.metadata[k] = in.get_string();
  }
  const auto n_records = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_records; ++i) {
    TensorRecord r;
    r.name = in.get_string();
    const auto rank = in.get<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<Real> data(shape_product(shape));
    for (auto& v : data) v = in.get<double>();
    r.value = Tensor(std::move(shape), std::move(data));
    c.records.push_back(std::move(r));
  }
  if (!in.done()) throw ValidationError("trailing bytes after container");
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = serialize_container(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_container(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void append_params(const ParamStore& store, Container& c) {
  for (ParamId id = 0; id < store.size(); ++id) {
    c.records.push_back({store.name(id), store.value(id)});
  }
}

void load_params(const Container& c, ParamStore& store) {
  for (ParamId id = 0; id < store.size(); ++id) {
    const Tensor& src = c.get(store.name(id));
    if (!src.same_shape(store.value(id))) {
      throw ValidationError("checkpoint shape " + src.shape_string() +
                            " for '" + store.name(id) + "' does not match " +
                            store.value(id).shape_string());
    }
    store.value(id) = src;
  }
}

void write_feature_file(const std::filesystem::path& path,
                        const Tensor& features) {
  Container c;
  c.metadata["kind"] = "features";
  c.records.push_back({"features", features});
  write_container(path, c);
}

Tensor read_feature_file(const std::filesystem::path& path) {
  Container c = read_container(path);
  Tensor t = c.get("features");
  if (t.rank() != 2) {
    throw ValidationError(path.string() + ": features must be a matrix");
  }
  return t;
}

}  // namespace ctxrnnt
