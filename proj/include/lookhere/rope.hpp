#pragma once

#include <span>
#include <vector>

#include "lookhere/grid.hpp"

namespace lookhere {

/// Axial 2D rotary encoding: the first head_dim/2 dims rotate with the
/// y coordinate, the rest with x, both over 0-based lattice positions.
struct RotaryConfig {
  int head_dim = 0;
  double base_freq = 100.0;
  PatchGrid grid;
};

RotaryConfig make_rotary(int head_dim, double base_freq, const PatchGrid& grid);

/// Angle table, one row of head_dim/2 pair angles per patch token (1..n).
/// Pair t within an axis half uses frequency base^(-4t/head_dim).
struct RotaryAngles {
  int head_dim = 0;
  int patches = 0;
  std::vector<double> angles;  // n x (head_dim/2)

  std::span<const double> row(int patch_index) const {  // 1-based
    size_t pairs = static_cast<size_t>(head_dim) / 2;
    return {angles.data() + static_cast<size_t>(patch_index - 1) * pairs, pairs};
  }
};

RotaryAngles rotary_angles(const RotaryConfig& cfg);

/// Rotate one head vector in place according to a patch's coordinates.
/// Norm-preserving; CLS is never passed here (it has no coordinates).
void apply_rotary(std::span<double> vec, int i_y, int i_x, const RotaryConfig& cfg);

/// Inverse rotation, used by backpropagation.
void apply_rotary_transposed(std::span<double> vec, int i_y, int i_x,
                             const RotaryConfig& cfg);

/// Same config with a swapped base frequency (the resolution-change tuning
/// knob).
RotaryConfig retune_base(const RotaryConfig& cfg, double new_base);

}  // namespace lookhere
