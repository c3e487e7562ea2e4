#include "lookhere/extrapolate.hpp"

#include <cmath>
#include <sstream>

namespace lookhere {

std::string method_name(Method m) {
  switch (m) {
    case Method::kLearned1D: return "learned_1d";
    case Method::kSincos2D: return "sincos_2d";
    case Method::kFactorized: return "factorized";
    case Method::kFourier: return "fourier";
    case Method::kRpeLearn: return "rpe_learn";
    case Method::kAlibi2D: return "alibi_2d";
    case Method::kRope2D: return "rope_2d";
    case Method::kLookHere: return "lookhere";
  }
  throw std::invalid_argument("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  for (int m = 0; m <= static_cast<int>(Method::kLookHere); ++m) {
    if (method_name(static_cast<Method>(m)) == name) return static_cast<Method>(m);
  }
  throw std::invalid_argument("unknown method name: " + name);
}

namespace {

// align-corners bilinear over an arbitrary 2D scalar grid
std::vector<double> bilinear_2d(const std::vector<double>& src, int rows, int cols,
                                int new_rows, int new_cols) {
  std::vector<double> out(static_cast<size_t>(new_rows) * new_cols);
  auto pos = [](int o, int n, int n_new) -> double {
    if (n_new <= 1 || n <= 1) return 0.0;
    return static_cast<double>(o) * (n - 1) / (n_new - 1);
  };
  for (int oy = 0; oy < new_rows; ++oy) {
    double py = pos(oy, rows, new_rows);
    int y0 = static_cast<int>(py);
    int y1 = std::min(y0 + 1, rows - 1);
    double wy = py - y0;
    for (int ox = 0; ox < new_cols; ++ox) {
      double px = pos(ox, cols, new_cols);
      int x0 = static_cast<int>(px);
      int x1 = std::min(x0 + 1, cols - 1);
      double wx = px - x0;
      double v;
      if (wy == 0.0 && wx == 0.0) {
        v = src[static_cast<size_t>(y0) * cols + x0];
      } else {
        v = (1.0 - wy) * ((1.0 - wx) * src[static_cast<size_t>(y0) * cols + x0] +
                          wx * src[static_cast<size_t>(y0) * cols + x1]) +
            wy * ((1.0 - wx) * src[static_cast<size_t>(y1) * cols + x0] +
                  wx * src[static_cast<size_t>(y1) * cols + x1]);
      }
      out[static_cast<size_t>(oy) * new_cols + ox] = v;
    }
  }
  return out;
}

const EmbeddingTable& expect_table(const EncodingState& state, EmbeddingFamily family,
                                   const char* what) {
  const auto* s = std::get_if<EmbedState>(&state);
  if (!s || s->table.family != family) {
    throw std::invalid_argument(std::string("adapt: state does not match method ") + what);
  }
  return s->table;
}

}  // namespace

RelativeBiasTable interp_rpe_table(const RelativeBiasTable& table,
                                   const PatchGrid& new_grid) {
  RelativeBiasTable out;
  out.heads = table.heads;
  out.n_y = new_grid.n_y;
  out.n_x = new_grid.n_x;
  out.values.reserve(static_cast<size_t>(out.heads) * out.extent_y() * out.extent_x());
  for (int h = 0; h < table.heads; ++h) {
    std::vector<double> plane(
        table.values.begin() + static_cast<size_t>(h) * table.extent_y() * table.extent_x(),
        table.values.begin() +
            static_cast<size_t>(h + 1) * table.extent_y() * table.extent_x());
    std::vector<double> resized = bilinear_2d(plane, table.extent_y(), table.extent_x(),
                                              out.extent_y(), out.extent_x());
    out.values.insert(out.values.end(), resized.begin(), resized.end());
  }
  return out;
}

EncodingState adapt(const AdaptPlan& plan, const EncodingState& state) {
  const PatchGrid& target = plan.target;
  switch (plan.method) {
    case Method::kLearned1D: {
      const EmbeddingTable& t = expect_table(state, EmbeddingFamily::kLearned1D, "learned_1d");
      return EmbedState{resize_bilinear(t, target)};
    }
    case Method::kSincos2D: {
      const EmbeddingTable& t = expect_table(state, EmbeddingFamily::kSincos2D, "sincos_2d");
      return EmbedState{resize_bilinear(t, target)};
    }
    case Method::kFactorized: {
      const EmbeddingTable& t = expect_table(state, EmbeddingFamily::kFactorized, "factorized");
      return EmbedState{resize_factorized(t, target)};
    }
    case Method::kFourier: {
      const EmbeddingTable& t = expect_table(state, EmbeddingFamily::kFourier, "fourier");
      return EmbedState{fourier_reevaluate(t, target)};
    }
    case Method::kRpeLearn: {
      const auto* s = std::get_if<RpeState>(&state);
      if (!s) throw std::invalid_argument("adapt: state does not match method rpe_learn");
      RpeState out;
      out.dims = s->dims;
      out.table = interp_rpe_table(s->table, target);
      out.field = rpe_to_field(out.table, target, out.dims);
      return out;
    }
    case Method::kAlibi2D: {
      const auto* s = std::get_if<AlibiState>(&state);
      if (!s) throw std::invalid_argument("adapt: state does not match method alibi_2d");
      AlibiState out;
      out.dims = s->dims;
      out.head_slopes = s->head_slopes;
      out.s_g = plan.tuned_scalar.value_or(s->s_g);
      out.field = build_alibi_2d(target, out.dims, out.head_slopes, out.s_g);
      return out;
    }
    case Method::kRope2D: {
      const auto* s = std::get_if<RopeState>(&state);
      if (!s) throw std::invalid_argument("adapt: state does not match method rope_2d");
      RotaryConfig cfg = s->config;
      cfg.grid = target;
      if (plan.tuned_scalar) cfg = retune_base(cfg, *plan.tuned_scalar);
      return RopeState{cfg};
    }
    case Method::kLookHere: {
      const auto* s = std::get_if<LookHereState>(&state);
      if (!s) throw std::invalid_argument("adapt: state does not match method lookhere");
      LookHereState out;
      out.dims = s->dims;
      out.specs = s->specs;
      out.slopes = s->slopes;
      out.penalty = s->penalty;
      if (plan.tuned_scalar) out.slopes.s_g = *plan.tuned_scalar;
      out.field = build_lookhere(target, out.dims, out.specs, out.slopes, out.penalty);
      return out;
    }
  }
  throw std::invalid_argument("adapt: unknown method");
}

double tune_scalar(const std::vector<double>& candidates,
                   const std::function<double(double)>& evaluate) {
  if (candidates.empty()) {
    throw std::invalid_argument("tune_scalar: candidate list is empty");
  }
  double best = candidates[0];
  double best_score = evaluate(candidates[0]);
  for (size_t i = 1; i < candidates.size(); ++i) {
    double score = evaluate(candidates[i]);
    if (score > best_score || (score == best_score && candidates[i] < best)) {
      best = candidates[i];
      best_score = score;
    }
  }
  return best;
}

std::vector<double> default_slope_candidates() {
  std::vector<double> out;
  for (int i = 0; i <= 22; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

std::vector<double> default_base_freq_candidates() {
  std::vector<double> out;
  const double lo = std::log(100.0), hi = std::log(1500.0);
  for (int i = 0; i <= 16; ++i) out.push_back(std::exp(lo + (hi - lo) * i / 16.0));
  return out;
}

std::string to_json(const TuneRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"method\":\"" << method_name(record.method) << "\",\"source\":\""
      << record.source.n_y << "x" << record.source.n_x << "\",\"target\":\""
      << record.target.n_y << "x" << record.target.n_x << "\",\"scalar\":" << record.scalar
      << ",\"score\":";
  if (record.score) {
    out << *record.score;
  } else {
    out << "null";
  }
  out << "}";
  return out.str();
}

}  // namespace lookhere
