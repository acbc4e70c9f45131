#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pgrl/tensor.hpp"

namespace pgrl::nn {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u64 = 2, u8 = 3 };

std::size_t dtype_size(Dtype d);

// Versioned binary container: magic, format version, originating config
// hash, then a named tensor table (name, dtype, shape, raw little-endian
// data). Entries are stored sorted by name so identical contents produce
// identical bytes. Round-trips bit-exactly.
class Checkpoint {
 public:
  static constexpr char kMagic[8] = {'P', 'G', 'R', 'L', 'C', 'K', 'P', 'T'};
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;

  struct Entry {
    Dtype dtype = Dtype::f32;
    std::vector<int> shape;
    std::vector<unsigned char> raw;

    long numel() const {
      long n = 1;
      for (int d : shape) n *= d;
      return n;
    }
  };

  void add_f32(const std::string& name, const std::vector<int>& shape, const float* data);
  void add_f64(const std::string& name, const std::vector<int>& shape, const double* data);
  void add_u64(const std::string& name, const std::vector<std::uint64_t>& values);
  void add_tensor(const std::string& name, const Tensor& t) {
    add_f32(name, t.shape, t.ptr());
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  const Entry& at(const std::string& name) const;

  std::vector<float> get_f32(const std::string& name) const;
  std::vector<double> get_f64(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;
  void read_into(const std::string& name, Tensor& t) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace pgrl::nn
