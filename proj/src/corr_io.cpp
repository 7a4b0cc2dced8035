#include "vbreg/corr_io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"

namespace vbreg {

namespace {

constexpr const char* kMagic = "VBREG-CORR";

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::size_t parse_count(std::size_t line, const std::string& tok, const std::string& key) {
  if (tok.rfind(key + "=", 0) != 0) fail(line, "expected " + key + "=<count>, got '" + tok + "'");
  const std::string v = tok.substr(key.size() + 1);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    fail(line, "bad " + key + " value '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail(line, "bad " + key + " value '" + v + "'");
  }
}

}  // namespace

void write_correspondences(std::ostream& os, const CorrespondenceSet& set) {
  os << kMagic << " v1 N=" << set.size() << " D=" << set.descriptor_dim();
  if (set.has_epsilon()) os << " EPS=" << format_real(set.epsilon());
  os << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& x = set.source(i);
    const auto& y = set.target(i);
    os << format_real(x.x()) << ' ' << format_real(x.y()) << ' ' << format_real(x.z()) << ' '
       << format_real(y.x()) << ' ' << format_real(y.y()) << ' ' << format_real(y.z());
    for (double d : set.descriptors().row(i)) os << ' ' << format_real(d);
    if (set.has_labels()) os << ' ' << static_cast<int>(set.labels()[i]);
    os << '\n';
  }
}

CorrespondenceSet read_correspondences(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(1, "missing header");
  const auto head = split_ws(line);
  if (head.size() < 4 || head.size() > 5 || head[0] != kMagic || head[1] != "v1") {
    fail(1, "header must be 'VBREG-CORR v1 N=<n> D=<d> [EPS=<eps>]'");
  }
  const std::size_t n = parse_count(1, head[2], "N");
  const std::size_t d = parse_count(1, head[3], "D");
  std::optional<double> eps;
  if (head.size() == 5) {
    if (head[4].rfind("EPS=", 0) != 0) fail(1, "expected EPS=<epsilon>, got '" + head[4] + "'");
    try {
      eps = parse_real(head[4].substr(4));
    } catch (const DataError& e) {
      fail(1, e.what());
    }
    if (!(*eps > 0.0)) fail(1, "EPS must be > 0");
  }

  CorrespondenceSet set(d);
  std::vector<std::uint8_t> labels;
  std::optional<bool> labelled;
  std::vector<double> desc(d);
  std::size_t lineno = 1;
  while (set.size() < n) {
    if (!std::getline(is, line)) fail(lineno + 1, "expected " + std::to_string(n) + " rows, got " + std::to_string(set.size()));
    ++lineno;
    const auto tok = split_ws(line);
    const bool has_label = tok.size() == 7 + d;
    if (tok.size() != 6 + d && !has_label) {
      fail(lineno, "expected " + std::to_string(6 + d) + " or " + std::to_string(7 + d) +
                       " columns, got " + std::to_string(tok.size()));
    }
    if (!labelled) labelled = has_label;
    if (*labelled != has_label) fail(lineno, "labels must be present on every row or none");
    double v[6];
    try {
      for (int c = 0; c < 6; ++c) v[c] = parse_real(tok[c]);
      for (std::size_t c = 0; c < d; ++c) desc[c] = parse_real(tok[6 + c]);
    } catch (const DataError& e) {
      fail(lineno, e.what());
    }
    if (has_label) {
      const auto& l = tok.back();
      if (l != "0" && l != "1") fail(lineno, "label must be 0 or 1, got '" + l + "'");
      labels.push_back(l == "1" ? 1 : 0);
    }
    try {
      set.add({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, desc);
    } catch (const DataError& e) {
      fail(lineno, e.what());
    }
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (!split_ws(line).empty()) fail(lineno, "unexpected data after " + std::to_string(n) + " rows");
  }
  if (labelled.value_or(false)) set.set_labels(std::move(labels));
  if (eps) set.set_epsilon(*eps);
  return set;
}

void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& set) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_correspondences(os, set);
  if (!os) throw DataError("write failed: " + path.string());
}

CorrespondenceSet read_correspondences(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  try {
    return read_correspondences(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace vbreg
