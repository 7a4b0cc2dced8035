#pragma once

#include <random>
#include <string>
#include <vector>

#include "vbreg/autodiff.hpp"
#include "vbreg/params.hpp"

namespace vbreg::nn {

/// Declares <prefix>/W (in x out) and <prefix>/b (1 x out).
void declare_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                    std::mt19937_64& rng);
ad::Var linear(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var x);

/// Layers <prefix>/l0 ... <prefix>/l{k-1}; widths are the output width of each layer.
void declare_mlp(ParamStore& store, const std::string& prefix, std::size_t in,
                 const std::vector<std::size_t>& widths, std::mt19937_64& rng);
/// Affine + relu for every layer except the last, which is affine only.
ad::Var mlp(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var x);
std::size_t mlp_depth(const ParamStore& store, const std::string& prefix);

/// GRU with separate gate blocks:
///   z = sigmoid(x Wz + h Uz + bz)      update gate
///   r = sigmoid(x Wr + h Ur + br)      reset gate
///   c = tanh(x Wc + (r * h) Uc + bc)   candidate
///   h' = (1 - z) * h + z * c
void declare_gru(ParamStore& store, const std::string& prefix, std::size_t input,
                 std::size_t hidden, std::mt19937_64& rng);
ad::Var gru_cell(ad::Tape& tape, const ParamStore& store, const std::string& prefix, ad::Var h_prev,
                 ad::Var x);

}  // namespace vbreg::nn
