#include "vbreg/nn.hpp"

#include "vbreg/errors.hpp"

namespace vbreg::nn {

void declare_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                    std::mt19937_64& rng) {
  store.declare(prefix + "/W", uniform_init(in, out, in, rng));
  store.declare(prefix + "/b", uniform_init(1, out, in, rng));
}

ad::Var linear(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var x) {
  ad::Var w = tape.param(store, prefix + "/W");
  if (x.cols() != w.rows()) {
    throw UsageError(prefix + ": input has " + std::to_string(x.cols()) + " columns, weight is " +
                     w.value().shape_str());
  }
  return ad::add_row(ad::matmul(x, w), tape.param(store, prefix + "/b"));
}

void declare_mlp(ParamStore& store, const std::string& prefix, std::size_t in,
                 const std::vector<std::size_t>& widths, std::mt19937_64& rng) {
  std::size_t width = in;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    declare_linear(store, prefix + "/l" + std::to_string(l), width, widths[l], rng);
    width = widths[l];
  }
}

std::size_t mlp_depth(const ParamStore& store, const std::string& prefix) {
  std::size_t depth = 0;
  while (store.contains(prefix + "/l" + std::to_string(depth) + "/W")) ++depth;
  return depth;
}

ad::Var mlp(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var x) {
  const std::size_t depth = mlp_depth(store, prefix);
  if (depth == 0) throw UsageError("mlp: no layers under '" + prefix + "'");
  for (std::size_t l = 0; l < depth; ++l) {
    x = linear(tape, store, prefix + "/l" + std::to_string(l), x);
    if (l + 1 < depth) x = ad::relu(x);
  }
  return x;
}

void declare_gru(ParamStore& store, const std::string& prefix, std::size_t input,
                 std::size_t hidden, std::mt19937_64& rng) {
  for (const char* gate : {"z", "r", "c"}) {
    const std::string g(gate);
    store.declare(prefix + "/W" + g, uniform_init(input, hidden, hidden, rng));
    store.declare(prefix + "/U" + g, uniform_init(hidden, hidden, hidden, rng));
    store.declare(prefix + "/b" + g, uniform_init(1, hidden, hidden, rng));
  }
}

ad::Var gru_cell(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var h_prev,
                 ad::Var x) {
  if (h_prev.rows() != x.rows()) {
    throw UsageError(prefix + ": hidden has " + std::to_string(h_prev.rows()) +
                     " rows, input has " + std::to_string(x.rows()));
  }
  auto p = [&](const std::string& name) { return tape.param(store, prefix + "/" + name); };
  auto gate_pre = [&](const std::string& g, ad::Var hidden_in) {
    return ad::add_row(ad::add(ad::matmul(x, p("W" + g)), ad::matmul(hidden_in, p("U" + g))),
                       p("b" + g));
  };
  ad::Var z = ad::sigmoid(gate_pre("z", h_prev));
  ad::Var r = ad::sigmoid(gate_pre("r", h_prev));
  ad::Var c = ad::tanh(gate_pre("c", ad::mul(r, h_prev)));
  // (1 - z) * h + z * c  ==  h + z * (c - h)
  return ad::add(h_prev, ad::mul(z, ad::sub(c, h_prev)));
}

}  // namespace vbreg::nn
