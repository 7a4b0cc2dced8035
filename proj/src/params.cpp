#include "vbreg/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "vbreg/errors.hpp"

namespace vbreg {

Matrix& ParamStore::declare(const std::string& name, Matrix init) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw UsageError("ParamStore: duplicate parameter '" + name + "'");
  Parameter& p = it->second;
  p.grad = Matrix(init.rows(), init.cols());
  p.adam_m = Matrix(init.rows(), init.cols());
  p.adam_v = Matrix(init.rows(), init.cols());
  p.value = std::move(init);
  return p.value;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("ParamStore: no parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("ParamStore: no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) {
    p.grad = Matrix(p.value.rows(), p.value.cols());
    p.has_grad = false;
  }
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (auto a = params_.begin(), b = other.params_.begin(); a != params_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in,
                    std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

void adam_step(ParamStore& store, const AdamOptions& opt) {
  for (const auto& [name, p] : store) {
    if (!p.has_grad) throw UsageError("adam_step: parameter '" + name + "' has no gradient");
  }
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& [name, p] : store) {
    auto& w = p.value.data();
    const auto& g = p.grad.data();
    auto& m = p.adam_m.data();
    auto& v = p.adam_v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= opt.lr * opt.weight_decay * w[i];
      w[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
    if (!p.value.all_finite()) throw NumericalError("adam_step: '" + name + "' became non-finite");
  }
}

namespace {

constexpr char kMagic[4] = {'V', 'B', 'R', 'G'};

template <class T>
void put_le(std::ostream& os, T v) {
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, sizeof(T));
}

template <class T>
bool get_le(std::istream& is, T& v) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return true;
}

}  // namespace

void write_checkpoint(std::ostream& os, const ParamStore& store) {
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kCheckpointVersion);
  for (const auto& [name, p] : store) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(os, p.value.rows());
    put_le<std::uint64_t>(os, p.value.cols());
    for (double d : p.value.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(d));
  }
  if (!os) throw DataError("write_checkpoint: stream write failed");
}

ParamStore read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw DataError("checkpoint: bad magic (expected VBRG)");
  }
  std::uint32_t version = 0;
  if (!get_le(is, version)) throw DataError("checkpoint: truncated header");
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  ParamStore store;
  while (true) {
    std::uint32_t name_len = 0;
    if (!get_le(is, name_len)) {
      if (is.eof() && is.gcount() == 0) break;
      throw DataError("checkpoint: truncated record header");
    }
    std::string name(name_len, '\0');
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    if (!is.read(name.data(), name_len) || !get_le(is, rows) || !get_le(is, cols)) {
      throw DataError("checkpoint: truncated record for '" + name + "'");
    }
    if (rows * cols > (std::uint64_t{1} << 32)) {
      throw DataError("checkpoint: implausible shape for '" + name + "'");
    }
    Matrix m(rows, cols);
    for (double& d : m.data()) {
      std::uint64_t bits = 0;
      if (!get_le(is, bits)) throw DataError("checkpoint: truncated data for '" + name + "'");
      d = std::bit_cast<double>(bits);
    }
    store.declare(name, std::move(m));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(os, store);
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(is);
}

}  // namespace vbreg
