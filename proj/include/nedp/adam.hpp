#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nedp {

/// A named parameter block with its gradient, both viewed as flat arrays.
struct ParamRef {
  std::string_view name;
  std::span<double> value;
  std::span<const double> grad;
};

/// Adam with bias correction. Moment buffers are sized on the first step and
/// must keep the same block layout afterwards.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One update of every block. Throws ValidationError naming the first block
/// with a non-finite gradient (before anything is modified) or a layout that
/// differs from earlier steps.
void adam_step(AdamState& state, std::span<const ParamRef> blocks);

}  // namespace nedp
