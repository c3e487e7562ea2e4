#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lookhere/bias_field.hpp"
#include "lookhere/grid.hpp"
#include "lookhere/pos_embed.hpp"
#include "lookhere/rope.hpp"

namespace lookhere {

enum class Method : uint8_t {
  kLearned1D,
  kSincos2D,
  kFactorized,
  kFourier,
  kRpeLearn,
  kAlibi2D,
  kRope2D,
  kLookHere,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// How to carry one encoding from a training grid to a test grid.
/// tuned_scalar is the method's single tuning knob: the global slope for
/// the bias methods, the base frequency for rotary; ignored by the rest.
struct AdaptPlan {
  Method method = Method::kLookHere;
  PatchGrid source;
  PatchGrid target;
  std::optional<double> tuned_scalar;

  bool shrinking() const {
    return target.n_y < source.n_y || target.n_x < source.n_x;
  }
};

/// Everything needed to rebuild or resample an encoding. The bias-style
/// states keep their construction recipe so a grid change regenerates the
/// field instead of resampling it.
struct LookHereState {
  ModelDims dims;
  std::vector<HeadSpec> specs;
  SlopeConfig slopes;
  PenaltyConfig penalty;
  BiasField field;
};

struct AlibiState {
  ModelDims dims;
  std::vector<double> head_slopes;
  double s_g = 1.0;
  BiasField field;
};

struct RpeState {
  ModelDims dims;
  RelativeBiasTable table;
  BiasField field;
};

struct RopeState {
  RotaryConfig config;
};

struct EmbedState {
  EmbeddingTable table;
};

using EncodingState = std::variant<LookHereState, AlibiState, RpeState, RopeState, EmbedState>;

/// Dispatch on the plan's method:
///  - learned_1d / sincos_2d: bilinear table resize
///  - factorized: per-axis linear resize
///  - fourier: re-evaluate the same parameters at the target fractions
///  - rpe_learn: bilinear interpolation of the displacement table
///  - alibi_2d / lookhere: rebuild the field at the target grid with the
///    tuned global slope
///  - rope_2d: swap the base frequency
EncodingState adapt(const AdaptPlan& plan, const EncodingState& state);

/// Bilinear (align-corners) resize of a relative-bias table to the extent
/// implied by a new grid.
RelativeBiasTable interp_rpe_table(const RelativeBiasTable& table,
                                   const PatchGrid& new_grid);

/// Pick the best scalar by score; ties go to the smaller candidate.
double tune_scalar(const std::vector<double>& candidates,
                   const std::function<double(double)>& evaluate);

/// Table-mirroring default candidate grids.
std::vector<double> default_slope_candidates();      // 0.5 .. 1.6 step 0.05
std::vector<double> default_base_freq_candidates();  // 100 .. 1500, log-spaced

/// Record of one tuning run, serialized as JSON.
struct TuneRecord {
  Method method;
  PatchGrid source;
  PatchGrid target;
  double scalar = 0.0;
  std::optional<double> score;
};

std::string to_json(const TuneRecord& record);

}  // namespace lookhere
