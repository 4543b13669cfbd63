#include "nedp/adam.hpp"

#include <cmath>

#include "nedp/error.hpp"

namespace nedp {

void adam_step(AdamState& state, std::span<const ParamRef> blocks) {
  for (const ParamRef& b : blocks) {
    if (b.value.size() != b.grad.size()) {
      throw ValidationError("adam: block '" + std::string(b.name) + "' has mismatched value and gradient sizes");
    }
    for (double g : b.grad) {
      if (!std::isfinite(g)) throw ValidationError("adam: non-finite gradient in block '" + std::string(b.name) + "'");
    }
  }

  if (state.t == 0 && state.m.empty()) {
    for (const ParamRef& b : blocks) {
      state.names.emplace_back(b.name);
      state.m.emplace_back(b.value.size(), 0.0);
      state.v.emplace_back(b.value.size(), 0.0);
    }
  }
  if (state.m.size() != blocks.size()) throw ValidationError("adam: parameter block count changed between steps");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (state.m[k].size() != blocks[k].value.size() || state.names[k] != blocks[k].name) {
      throw ValidationError("adam: block '" + std::string(blocks[k].name) + "' does not match the optimizer state");
    }
  }

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const ParamRef& b = blocks[k];
    for (std::size_t i = 0; i < b.value.size(); ++i) {
      const double g = b.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      b.value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace nedp
