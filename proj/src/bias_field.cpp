#include "lookhere/bias_field.hpp"

#include <cmath>

#include "lookhere/rng.hpp"

namespace lookhere {

namespace {

// Exact wedge tests run in an (x, y-up) frame so the usual counterclockwise
// cross-product convention applies.
struct Vec2 {
  long long x = 0;
  long long y = 0;
};

Vec2 to_frame(Delta d) { return {d.dx, -d.dy}; }

long long cross(Vec2 u, Vec2 v) { return u.x * v.y - u.y * v.x; }
long long dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }

Vec2 rotate_ccw45(Vec2 u) { return {u.x - u.y, u.x + u.y}; }
Vec2 rotate_cw45(Vec2 u) { return {u.x + u.y, u.y - u.x}; }

double penalty_of(double dist, const PenaltyConfig& cfg) {
  if (cfg.exponent == 2.0) return dist * dist;
  if (cfg.exponent == 0.5) return std::sqrt(dist);
  return dist;
}

}  // namespace

Delta direction_step(Direction d) {
  switch (d) {
    case Direction::kUp: return {-1, 0};
    case Direction::kDown: return {1, 0};
    case Direction::kLeft: return {0, -1};
    case Direction::kRight: return {0, 1};
    case Direction::kUpRight: return {-1, 1};
    case Direction::kDownRight: return {1, 1};
    case Direction::kDownLeft: return {1, -1};
    case Direction::kUpLeft: return {-1, -1};
  }
  throw std::invalid_argument("direction_step: unknown direction");
}

HeadSpec HeadSpec::directed_head(Direction d, int fov_deg, std::optional<Half> half) {
  if (fov_deg != 180 && fov_deg != 90 && fov_deg != 45) {
    throw std::invalid_argument("HeadSpec: fov must be 180, 90 or 45 degrees");
  }
  if ((fov_deg == 45) != half.has_value()) {
    throw std::invalid_argument("HeadSpec: half is required exactly for 45-degree wedges");
  }
  return HeadSpec{DirectedSpec{d, fov_deg, half}};
}

HeadSpec HeadSpec::undirected_head(double slope_scale) {
  if (slope_scale < 0.0) {
    throw std::invalid_argument("HeadSpec: undirected slope scale must be nonnegative");
  }
  return HeadSpec{UndirectedSpec{slope_scale}};
}

bool visible(const HeadSpec& spec, Delta delta) {
  if (!spec.directed()) return true;
  if (delta.dy == 0 && delta.dx == 0) return true;

  const DirectedSpec& d = spec.as_directed();
  Vec2 axis = to_frame(direction_step(d.direction));
  Vec2 v = to_frame(delta);

  switch (d.fov_deg) {
    case 180:
      return dot(axis, v) >= 0;
    case 90:
      // closed sector [axis-45, axis+45]
      return cross(rotate_cw45(axis), v) >= 0 && cross(rotate_ccw45(axis), v) <= 0;
    case 45: {
      // half-open sector [lo, lo+45); kFirst starts on the axis itself
      Vec2 lo = (*d.half == Half::kFirst) ? axis : rotate_cw45(axis);
      Vec2 hi = rotate_ccw45(lo);
      return cross(lo, v) >= 0 && cross(hi, v) < 0;
    }
    default:
      throw std::invalid_argument("visible: unsupported field of view");
  }
}

void SlopeConfig::validate() const {
  if (!(s_g > 0.0)) throw std::invalid_argument("SlopeConfig: s_g must be positive");
  if (!std::isfinite(s_l_start) || !std::isfinite(s_l_end)) {
    throw std::invalid_argument("SlopeConfig: layer schedule endpoints must be finite");
  }
  if (s_h_directed < 0.0) {
    throw std::invalid_argument("SlopeConfig: s_h_directed must be nonnegative");
  }
  for (double v : s_h_undirected) {
    if (v < 0.0) throw std::invalid_argument("SlopeConfig: s_h entries must be nonnegative");
  }
}

void PenaltyConfig::validate() const {
  if (exponent != 1.0 && exponent != 2.0 && exponent != 0.5) {
    throw std::invalid_argument("PenaltyConfig: exponent must be 1, 2 or 0.5");
  }
}

double slope(int layer, int head, const ModelDims& dims, const SlopeConfig& cfg,
             const std::vector<HeadSpec>& specs) {
  if (layer < 1 || layer > dims.depth || head < 1 || head > dims.heads ||
      static_cast<int>(specs.size()) != dims.heads) {
    throw std::invalid_argument("slope: layer/head out of range");
  }
  double layer_scale;
  if (dims.depth <= 1) {
    layer_scale = (cfg.s_l_start + cfg.s_l_end) / 2.0;
  } else {
    double start = cfg.invert_s_l ? cfg.s_l_end : cfg.s_l_start;
    double end = cfg.invert_s_l ? cfg.s_l_start : cfg.s_l_end;
    layer_scale = start + (layer - 1) * (end - start) / (dims.depth - 1);
  }

  double head_scale;
  if (specs[head - 1].directed()) {
    head_scale = cfg.s_h_directed;
  } else {
    int undirected_index = 0;
    for (int h = 0; h < head - 1; ++h) {
      if (!specs[h].directed()) ++undirected_index;
    }
    if (undirected_index >= static_cast<int>(cfg.s_h_undirected.size())) {
      throw std::invalid_argument("slope: undirected head beyond the configured s_h list");
    }
    head_scale = cfg.s_h_undirected[undirected_index];
  }
  return layer_scale * head_scale * cfg.s_g;
}

std::pair<std::vector<HeadSpec>, SlopeConfig> default_head_layout(
    LookHereVariant variant, int heads, const SlopeConfig& base,
    UndirectedMode undirected_mode) {
  if (heads < 1) throw std::invalid_argument("default_head_layout: heads must be positive");
  base.validate();

  static constexpr Direction kOrder[8] = {
      Direction::kUp,       Direction::kDown,     Direction::kLeft,
      Direction::kRight,    Direction::kUpRight,  Direction::kDownRight,
      Direction::kDownLeft, Direction::kUpLeft};
  static constexpr Direction kCardinal[4] = {Direction::kUp, Direction::kDown,
                                             Direction::kLeft, Direction::kRight};

  std::vector<HeadSpec> specs;
  specs.reserve(heads);
  int directed_count = std::min(heads, 8);

  for (int h = 0; h < directed_count; ++h) {
    switch (variant) {
      case LookHereVariant::kLH180:
        specs.push_back(HeadSpec::directed_head(kOrder[h], 180));
        break;
      case LookHereVariant::kLH90:
        specs.push_back(HeadSpec::directed_head(kOrder[h], 90));
        break;
      case LookHereVariant::kLH45: {
        // split cardinal wedges: first halves of up/down/left/right, then
        // second halves, in the same direction order
        Half half = h < 4 ? Half::kFirst : Half::kSecond;
        specs.push_back(HeadSpec::directed_head(kCardinal[h % 4], 45, half));
        break;
      }
    }
  }

  int undirected_count = heads - directed_count;
  SlopeConfig cfg = base;
  while (static_cast<int>(cfg.s_h_undirected.size()) < undirected_count) {
    cfg.s_h_undirected.push_back(cfg.s_h_undirected.back() / 4.0);
  }

  for (int u = 0; u < undirected_count; ++u) {
    switch (undirected_mode) {
      case UndirectedMode::kKeep:
        specs.push_back(HeadSpec::undirected_head(cfg.s_h_undirected[u]));
        break;
      case UndirectedMode::kFov90:
        specs.push_back(HeadSpec::directed_head(kOrder[u % 8], 90));
        break;
      case UndirectedMode::kFov180:
        specs.push_back(HeadSpec::directed_head(kOrder[u % 8], 180));
        break;
    }
  }
  return {std::move(specs), std::move(cfg)};
}

BiasField build_lookhere(const PatchGrid& grid, const ModelDims& dims,
                         const std::vector<HeadSpec>& specs,
                         const SlopeConfig& slopes, const PenaltyConfig& penalty) {
  if (static_cast<int>(specs.size()) != dims.heads) {
    throw std::invalid_argument("build_lookhere: one HeadSpec per head required");
  }
  if (grid.n() < 1) throw std::invalid_argument("build_lookhere: empty grid");
  slopes.validate();
  penalty.validate();

  const int t = grid.tokens();
  const int ey = 2 * grid.n_y - 1;
  const int ex = 2 * grid.n_x - 1;
  const double sentinel = penalty.mask_mode == PenaltyConfig::MaskMode::kZero
                              ? 0.0
                              : BiasField::kMasked;

  BiasField field;
  field.depth = dims.depth;
  field.heads = dims.heads;
  field.grid = grid;
  field.values.assign(static_cast<size_t>(dims.depth) * dims.heads * t * t, 0.0);

  std::vector<double> dtab(static_cast<size_t>(ey) * ex);
  for (int layer = 1; layer <= dims.depth; ++layer) {
    for (int head = 1; head <= dims.heads; ++head) {
      const HeadSpec& spec = specs[head - 1];
      const double m = slope(layer, head, dims, slopes, specs);
      const bool drop_distance =
          penalty.no_distance ||
          (!spec.directed() && penalty.undirected_no_distance);

      // displacement table indexed by (dy, dx) = key minus query
      for (int dy = -(grid.n_y - 1); dy <= grid.n_y - 1; ++dy) {
        for (int dx = -(grid.n_x - 1); dx <= grid.n_x - 1; ++dx) {
          size_t idx = static_cast<size_t>(dy + grid.n_y - 1) * ex + (dx + grid.n_x - 1);
          if (!visible(spec, Delta{dy, dx})) {
            dtab[idx] = sentinel;
          } else if (drop_distance) {
            dtab[idx] = 0.0;
          } else {
            double dist = std::sqrt(static_cast<double>(dy) * dy +
                                    static_cast<double>(dx) * dx);
            dtab[idx] = m * penalty_of(dist, penalty);
          }
        }
      }

      double* slice = field.values.data() +
                      ((static_cast<size_t>(layer - 1) * dims.heads + (head - 1)) *
                       static_cast<size_t>(t) * t);
      for (int i = 1; i <= grid.n(); ++i) {
        auto [iy, ix] = grid.coords(i);
        double* row = slice + static_cast<size_t>(i) * t;
        for (int j = 1; j <= grid.n(); ++j) {
          int jy = (j - 1) / grid.n_x + 1;
          int jx = (j - 1) % grid.n_x + 1;
          row[j] = dtab[static_cast<size_t>(jy - iy + grid.n_y - 1) * ex +
                        (jx - ix + grid.n_x - 1)];
        }
      }
    }
  }
  return field;
}

BiasField build_alibi_2d(const PatchGrid& grid, const ModelDims& dims,
                         const std::vector<double>& head_slopes, double s_g) {
  if (static_cast<int>(head_slopes.size()) != dims.heads) {
    throw std::invalid_argument("build_alibi_2d: one slope per head required");
  }
  for (double s : head_slopes) {
    if (!(s > 0.0)) throw std::invalid_argument("build_alibi_2d: slopes must be positive");
  }
  if (!(s_g > 0.0)) throw std::invalid_argument("build_alibi_2d: s_g must be positive");

  const int t = grid.tokens();
  const int ex = 2 * grid.n_x - 1;
  BiasField field;
  field.depth = dims.depth;
  field.heads = dims.heads;
  field.grid = grid;
  field.values.assign(static_cast<size_t>(dims.depth) * dims.heads * t * t, 0.0);

  std::vector<double> dtab(static_cast<size_t>(2 * grid.n_y - 1) * ex);
  for (int head = 1; head <= dims.heads; ++head) {
    for (int dy = -(grid.n_y - 1); dy <= grid.n_y - 1; ++dy) {
      for (int dx = -(grid.n_x - 1); dx <= grid.n_x - 1; ++dx) {
        double dist = std::sqrt(static_cast<double>(dy) * dy +
                                static_cast<double>(dx) * dx);
        // grouped so retuning s_g rescales every entry exactly
        dtab[static_cast<size_t>(dy + grid.n_y - 1) * ex + (dx + grid.n_x - 1)] =
            s_g * (head_slopes[head - 1] * dist);
      }
    }
    for (int i = 1; i <= grid.n(); ++i) {
      auto [iy, ix] = grid.coords(i);
      for (int j = 1; j <= grid.n(); ++j) {
        int jy = (j - 1) / grid.n_x + 1;
        int jx = (j - 1) % grid.n_x + 1;
        double v = dtab[static_cast<size_t>(jy - iy + grid.n_y - 1) * ex +
                        (jx - ix + grid.n_x - 1)];
        for (int layer = 0; layer < dims.depth; ++layer) {
          field.values[((static_cast<size_t>(layer) * dims.heads + (head - 1)) * t + i) * t + j] = v;
        }
      }
    }
  }
  return field;
}

std::vector<double> alibi_default_slopes(int heads) {
  if (heads < 1) throw std::invalid_argument("alibi_default_slopes: heads must be positive");
  std::vector<double> slopes(heads);
  for (int h = 1; h <= heads; ++h) {
    slopes[h - 1] = std::pow(2.0, -8.0 * h / heads);
  }
  return slopes;
}

double RelativeBiasTable::lookup(int head, int dy, int dx) const {
  if (head < 0 || head >= heads || dy < -(n_y - 1) || dy > n_y - 1 ||
      dx < -(n_x - 1) || dx > n_x - 1) {
    throw std::invalid_argument("RelativeBiasTable: displacement outside table extent");
  }
  return values[(static_cast<size_t>(head) * extent_y() + (dy + n_y - 1)) * extent_x() +
                (dx + n_x - 1)];
}

double& RelativeBiasTable::entry(int head, int dy, int dx) {
  if (head < 0 || head >= heads || dy < -(n_y - 1) || dy > n_y - 1 ||
      dx < -(n_x - 1) || dx > n_x - 1) {
    throw std::invalid_argument("RelativeBiasTable: displacement outside table extent");
  }
  return values[(static_cast<size_t>(head) * extent_y() + (dy + n_y - 1)) * extent_x() +
                (dx + n_x - 1)];
}

RelativeBiasTable init_rpe_table(const PatchGrid& grid, int heads, uint64_t seed) {
  if (heads < 1) throw std::invalid_argument("init_rpe_table: heads must be positive");
  RelativeBiasTable table;
  table.heads = heads;
  table.n_y = grid.n_y;
  table.n_x = grid.n_x;
  GaussianSource rng(seed, 0.02);
  table.values = rng.draw(static_cast<size_t>(heads) * table.extent_y() * table.extent_x());
  return table;
}

BiasField rpe_to_field(const RelativeBiasTable& table, const PatchGrid& grid,
                       const ModelDims& dims) {
  if (dims.heads != table.heads) {
    throw std::invalid_argument("rpe_to_field: head count mismatch");
  }
  if (grid.n_y > table.n_y || grid.n_x > table.n_x) {
    throw std::invalid_argument("rpe_to_field: grid displacement outside table extent");
  }
  const int t = grid.tokens();
  BiasField field;
  field.depth = dims.depth;
  field.heads = dims.heads;
  field.grid = grid;
  field.allow_negative = true;
  field.values.assign(static_cast<size_t>(dims.depth) * dims.heads * t * t, 0.0);

  for (int head = 0; head < dims.heads; ++head) {
    for (int i = 1; i <= grid.n(); ++i) {
      auto [iy, ix] = grid.coords(i);
      for (int j = 1; j <= grid.n(); ++j) {
        int jy = (j - 1) / grid.n_x + 1;
        int jx = (j - 1) % grid.n_x + 1;
        double v = table.lookup(head, iy - jy, ix - jx);
        for (int layer = 0; layer < dims.depth; ++layer) {
          field.values[((static_cast<size_t>(layer) * dims.heads + head) * t + i) * t + j] = v;
        }
      }
    }
  }
  return field;
}

double masked_fraction(const BiasField& field, int layer, int head) {
  if (layer < 1 || layer > field.depth || head < 1 || head > field.heads) {
    throw std::invalid_argument("masked_fraction: layer/head out of range");
  }
  const int n = field.grid.n();
  size_t masked = 0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (std::isinf(field.at(layer - 1, head - 1, i, j))) ++masked;
    }
  }
  return static_cast<double>(masked) / (static_cast<double>(n) * n);
}

}  // namespace lookhere
