#include "lookhere/rope.hpp"

#include <cmath>

namespace lookhere {

RotaryConfig make_rotary(int head_dim, double base_freq, const PatchGrid& grid) {
  if (head_dim < 4 || head_dim % 4 != 0) {
    throw std::invalid_argument("make_rotary: head_dim must be a positive multiple of 4");
  }
  if (!(base_freq > 0.0)) {
    throw std::invalid_argument("make_rotary: base frequency must be positive");
  }
  return RotaryConfig{head_dim, base_freq, grid};
}

namespace {

void pair_angles(double coord, double base, int head_dim, double* out) {
  const int pairs_per_axis = head_dim / 4;
  for (int t = 0; t < pairs_per_axis; ++t) {
    out[t] = coord * std::pow(base, -4.0 * t / head_dim);
  }
}

}  // namespace

RotaryAngles rotary_angles(const RotaryConfig& cfg) {
  if (cfg.head_dim < 4 || cfg.head_dim % 4 != 0) {
    throw std::invalid_argument("rotary_angles: head_dim must be a positive multiple of 4");
  }
  RotaryAngles table;
  table.head_dim = cfg.head_dim;
  table.patches = cfg.grid.n();
  const int pairs = cfg.head_dim / 2;
  const int per_axis = cfg.head_dim / 4;
  table.angles.resize(static_cast<size_t>(table.patches) * pairs);
  for (int i = 1; i <= table.patches; ++i) {
    auto [iy, ix] = cfg.grid.coords(i);
    double* row = table.angles.data() + static_cast<size_t>(i - 1) * pairs;
    pair_angles(iy - 1, cfg.base_freq, cfg.head_dim, row);
    pair_angles(ix - 1, cfg.base_freq, cfg.head_dim, row + per_axis);
  }
  return table;
}

namespace {

void rotate(std::span<double> vec, int i_y, int i_x, const RotaryConfig& cfg,
            double sign) {
  if (static_cast<int>(vec.size()) != cfg.head_dim) {
    throw std::invalid_argument("apply_rotary: vector length must equal head_dim");
  }
  const int per_axis = cfg.head_dim / 4;
  for (int axis = 0; axis < 2; ++axis) {
    double coord = axis == 0 ? i_y - 1 : i_x - 1;
    double* v = vec.data() + axis * (cfg.head_dim / 2);
    for (int t = 0; t < per_axis; ++t) {
      double angle = sign * coord * std::pow(cfg.base_freq, -4.0 * t / cfg.head_dim);
      double c = std::cos(angle), s = std::sin(angle);
      double a = v[2 * t], b = v[2 * t + 1];
      v[2 * t] = a * c - b * s;
      v[2 * t + 1] = a * s + b * c;
    }
  }
}

}  // namespace

void apply_rotary(std::span<double> vec, int i_y, int i_x, const RotaryConfig& cfg) {
  rotate(vec, i_y, i_x, cfg, 1.0);
}

void apply_rotary_transposed(std::span<double> vec, int i_y, int i_x,
                             const RotaryConfig& cfg) {
  rotate(vec, i_y, i_x, cfg, -1.0);
}

RotaryConfig retune_base(const RotaryConfig& cfg, double new_base) {
  if (!(new_base > 0.0)) {
    throw std::invalid_argument("retune_base: base frequency must be positive");
  }
  RotaryConfig out = cfg;
  out.base_freq = new_base;
  return out;
}

}  // namespace lookhere
