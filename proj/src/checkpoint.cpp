#include "pgrl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace pgrl::nn {

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u64: return 8;
    case Dtype::u8: return 1;
  }
  fail("checkpoint: unknown dtype");
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void Checkpoint::add_f32(const std::string& name, const std::vector<int>& shape,
                         const float* data) {
  Entry e;
  e.dtype = Dtype::f32;
  e.shape = shape;
  e.raw.resize(static_cast<std::size_t>(e.numel()) * 4);
  std::memcpy(e.raw.data(), data, e.raw.size());
  entries_[name] = std::move(e);
}

void Checkpoint::add_f64(const std::string& name, const std::vector<int>& shape,
                         const double* data) {
  Entry e;
  e.dtype = Dtype::f64;
  e.shape = shape;
  e.raw.resize(static_cast<std::size_t>(e.numel()) * 8);
  std::memcpy(e.raw.data(), data, e.raw.size());
  entries_[name] = std::move(e);
}

void Checkpoint::add_u64(const std::string& name, const std::vector<std::uint64_t>& values) {
  Entry e;
  e.dtype = Dtype::u64;
  e.shape = {static_cast<int>(values.size())};
  e.raw.resize(values.size() * 8);
  std::memcpy(e.raw.data(), values.data(), e.raw.size());
  entries_[name] = std::move(e);
}

const Checkpoint::Entry& Checkpoint::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail("checkpoint: missing entry '" + name + "'");
  return it->second;
}

std::vector<float> Checkpoint::get_f32(const std::string& name) const {
  const Entry& e = at(name);
  require(e.dtype == Dtype::f32, "checkpoint: '" + name + "' is not f32");
  std::vector<float> out(static_cast<std::size_t>(e.numel()));
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

std::vector<double> Checkpoint::get_f64(const std::string& name) const {
  const Entry& e = at(name);
  require(e.dtype == Dtype::f64, "checkpoint: '" + name + "' is not f64");
  std::vector<double> out(static_cast<std::size_t>(e.numel()));
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

std::vector<std::uint64_t> Checkpoint::get_u64(const std::string& name) const {
  const Entry& e = at(name);
  require(e.dtype == Dtype::u64, "checkpoint: '" + name + "' is not u64");
  std::vector<std::uint64_t> out(static_cast<std::size_t>(e.numel()));
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

void Checkpoint::read_into(const std::string& name, Tensor& t) const {
  const Entry& e = at(name);
  require(e.dtype == Dtype::f32, "checkpoint: '" + name + "' is not f32");
  require(e.shape == t.shape, "checkpoint: '" + name + "' shape mismatch");
  std::memcpy(t.ptr(), e.raw.data(), e.raw.size());
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, config_hash);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(e.dtype));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(e.shape.size()));
    for (int d : e.shape) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(e.raw.data()),
             static_cast<std::streamsize>(e.raw.size()));
  }
  require(os.good(), "checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  require(std::memcmp(magic, kMagic, 8) == 0, "checkpoint: bad magic in '" + path + "'");
  const auto version = get<std::uint32_t>(is);
  require(version == kVersion, "checkpoint: unsupported version");
  Checkpoint ck;
  ck.config_hash = get<std::uint64_t>(is);
  const auto count = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    Entry e;
    e.dtype = static_cast<Dtype>(get<std::uint8_t>(is));
    const auto ndim = get<std::uint8_t>(is);
    e.shape.resize(ndim);
    for (auto& d : e.shape) d = static_cast<int>(get<std::uint32_t>(is));
    e.raw.resize(static_cast<std::size_t>(e.numel()) * dtype_size(e.dtype));
    is.read(reinterpret_cast<char*>(e.raw.data()), static_cast<std::streamsize>(e.raw.size()));
    require(is.good(), "checkpoint: truncated file '" + path + "'");
    ck.entries_[name] = std::move(e);
  }
  return ck;
}

}  // namespace pgrl::nn
