#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "lookhere/grid.hpp"

namespace lookhere {

/// The eight compass directions a head can point. Unit steps are in
/// (dy, dx) with y growing downward, so Up is (-1, 0).
enum class Direction : uint8_t {
  kUp,
  kDown,
  kLeft,
  kRight,
  kUpRight,
  kDownRight,
  kDownLeft,
  kUpLeft,
};

struct Delta {
  int dy = 0;
  int dx = 0;
};

Delta direction_step(Direction d);

/// Which half of a split 90-degree wedge a 45-degree head owns.
/// kFirst covers [axis, axis+45deg) and so includes the direction axis;
/// kSecond covers [axis-45deg, axis) and owns the clockwise outer diagonal.
/// Angles turn counterclockwise with y up; together the eight halves tile
/// the plane of nonzero displacements exactly once.
enum class Half : uint8_t { kFirst, kSecond };

struct DirectedSpec {
  Direction direction = Direction::kUp;
  int fov_deg = 90;  // 180, 90 or 45
  std::optional<Half> half;  // required iff fov_deg == 45
};

struct UndirectedSpec {
  double slope_scale = 0.0;  // informational copy of the head's s_h
};

struct HeadSpec {
  std::variant<DirectedSpec, UndirectedSpec> kind;

  bool directed() const { return std::holds_alternative<DirectedSpec>(kind); }
  const DirectedSpec& as_directed() const { return std::get<DirectedSpec>(kind); }
  const UndirectedSpec& as_undirected() const { return std::get<UndirectedSpec>(kind); }

  static HeadSpec directed_head(Direction d, int fov_deg,
                                std::optional<Half> half = std::nullopt);
  static HeadSpec undirected_head(double slope_scale);
};

/// True iff a key at displacement (dy, dx) = (j_y - i_y, j_x - i_x) from the
/// query is inside the head's field of view. (0,0) is always visible.
/// 180 and 90 degree wedges are closed at their boundaries; 45 degree halves
/// are half-open so the eight of them partition nonzero displacements.
/// Exact integer sign tests; no floating point.
bool visible(const HeadSpec& spec, Delta delta);

/// Per-layer / per-head slope schedule for the distance penalty,
/// m(l, h) = s_l(l) * s_h(h) * s_g.
struct SlopeConfig {
  double s_g = 1.0;
  double s_l_start = 1.5;
  double s_l_end = 0.5;
  double s_h_directed = 1.0;
  std::vector<double> s_h_undirected = {1.0 / 2, 1.0 / 8, 1.0 / 32, 1.0 / 128};
  bool invert_s_l = false;

  void validate() const;
};

/// Shape of the distance penalty, including the ablation knobs.
struct PenaltyConfig {
  double exponent = 1.0;  // 1, 2 or 0.5
  bool no_distance = false;
  bool undirected_no_distance = false;
  enum class MaskMode : uint8_t { kHardInfinity, kZero };
  MaskMode mask_mode = MaskMode::kHardInfinity;

  void validate() const;
};

/// m(l, h) for 1-based layer l and head h. Directed heads use
/// s_h_directed; the k-th undirected head (in head order) uses the k-th
/// entry of s_h_undirected, and running past the list is an error.
double slope(int layer, int head, const ModelDims& dims, const SlopeConfig& cfg,
             const std::vector<HeadSpec>& specs);

/// Additive attention bias over all layers, heads and token pairs.
/// Entries are penalties to be SUBTRACTED from attention logits; masked
/// pairs carry +infinity. Row/column 0 (CLS) is zero everywhere.
struct BiasField {
  static constexpr double kMasked = std::numeric_limits<double>::infinity();

  int depth = 0;
  int heads = 0;
  PatchGrid grid;
  bool allow_negative = false;  // set for learned relative-bias fields
  std::vector<double> values;   // depth x heads x T x T, T = grid.n() + 1

  int tokens() const { return grid.tokens(); }

  double at(int layer, int head, int i, int j) const {  // all 0-based here
    size_t t = tokens();
    return values[((static_cast<size_t>(layer) * heads + head) * t + i) * t + j];
  }
  std::span<const double> layer_slice(int layer) const {  // heads x T x T
    size_t t = tokens();
    size_t sz = static_cast<size_t>(heads) * t * t;
    return {values.data() + static_cast<size_t>(layer) * sz, sz};
  }
  std::span<const double> head_slice(int layer, int head) const {  // T x T
    size_t t = tokens();
    size_t sz = t * t;
    return {values.data() +
                ((static_cast<size_t>(layer) * heads + head) * sz),
            sz};
  }
};

enum class LookHereVariant : uint8_t { kLH180, kLH90, kLH45 };

/// Table 10 style substitutions for the undirected heads.
enum class UndirectedMode : uint8_t { kKeep, kFov90, kFov180 };

/// Default head layout: eight directed heads in the order
/// Up, Down, Left, Right, UpRight, DownRight, DownLeft, UpLeft at the
/// variant FOV, remaining heads undirected. The 45-degree variant replaces
/// the eight directed slots with the split cardinal wedges (first halves of
/// Up, Down, Left, Right, then second halves). For fewer than eight heads
/// the directed list is truncated; extra undirected heads extend the
/// s_h list by repeated quartering.
/// Returns the specs together with a SlopeConfig whose s_h_undirected list
/// is extended to cover every undirected head.
std::pair<std::vector<HeadSpec>, SlopeConfig> default_head_layout(
    LookHereVariant variant, int heads, const SlopeConfig& base,
    UndirectedMode undirected_mode = UndirectedMode::kKeep);

/// Build the LookHere bias: masked outside each directed head's wedge,
/// slope * Distance(i, j)^exponent inside. Construction fills one
/// displacement table per (layer, head) and broadcasts it over token pairs.
BiasField build_lookhere(const PatchGrid& grid, const ModelDims& dims,
                         const std::vector<HeadSpec>& specs,
                         const SlopeConfig& slopes,
                         const PenaltyConfig& penalty);

/// Distance-penalty bias with one slope per head and no masking; identical
/// across layers.
BiasField build_alibi_2d(const PatchGrid& grid, const ModelDims& dims,
                         const std::vector<double>& head_slopes, double s_g);

/// Geometric default slopes 2^(-8h/H), h = 1..H.
std::vector<double> alibi_default_slopes(int heads);

/// Learnable relative-position bias table, one (2*n_y-1) x (2*n_x-1) grid
/// of scalars per head, indexed by displacement.
struct RelativeBiasTable {
  int heads = 0;
  int n_y = 0;  // grid the extent was sized for
  int n_x = 0;
  std::vector<double> values;  // heads x (2*n_y-1) x (2*n_x-1)

  int extent_y() const { return 2 * n_y - 1; }
  int extent_x() const { return 2 * n_x - 1; }

  double lookup(int head, int dy, int dx) const;  // dy = i_y - j_y etc.
  double& entry(int head, int dy, int dx);
};

RelativeBiasTable init_rpe_table(const PatchGrid& grid, int heads, uint64_t seed);

/// Expand a relative-bias table to a full field: entry (l, h, i, j) =
/// table[h][i_y - j_y][i_x - j_x], identical across layers, CLS row/column
/// zero. Learned values may be negative; the field is flagged accordingly.
BiasField rpe_to_field(const RelativeBiasTable& table, const PatchGrid& grid,
                       const ModelDims& dims);

/// Fraction of patch-pair entries (CLS excluded) carrying the mask sentinel.
double masked_fraction(const BiasField& field, int layer, int head);

}  // namespace lookhere
