#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>

#include "vbreg/matrix.hpp"

namespace vbreg {

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  bool has_grad = false;
};

/// Named trainable parameters with their gradients and Adam moments.
/// Iteration order is the lexicographic order of the names.
class ParamStore {
 public:
  /// Declares a parameter; throws if the name already exists.
  Matrix& declare(const std::string& name, Matrix init);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return at(name).value; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// Values only (gradients and moments are ignored).
  bool same_values(const ParamStore& other) const;

 private:
  std::map<std::string, Parameter> params_;
  std::uint64_t step_ = 0;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng);

struct AdamOptions {
  double lr = 1e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction and decoupled weight decay
/// (p <- p - lr * wd * p). Throws UsageError if any parameter lacks a gradient.
void adam_step(ParamStore& store, const AdamOptions& opt);

// Checkpoint container: "VBRG", u32 version, then per parameter
// u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64. All little endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const ParamStore& store);
ParamStore read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace vbreg
