#pragma once

#include <string>
#include <vector>

#include "lookhere/attention.hpp"
#include "lookhere/grid.hpp"

namespace lookhere {

/// Generalized Jensen-Shannon divergence across heads: per attention row,
/// entropy of the head-averaged distribution minus the mean per-head
/// entropy (natural log), averaged over all rows. Bounded by [0, ln H].
double head_jsd(const std::vector<double>& weights, int heads, int tokens);
double head_jsd(const AttentionResult& res);

/// Attention-weighted mean patch distance: for each head and patch query,
/// sum over patch keys of weight * Distance, averaged over heads and patch
/// queries. CLS row and column are excluded.
double attention_distance(const std::vector<double>& weights, int heads, int tokens,
                          const PatchGrid& grid);
double attention_distance(const AttentionResult& res, const PatchGrid& grid);

/// Mean pairwise cosine similarity between patch representations
/// (n x width, CLS already excluded).
double patch_similarity(const std::vector<double>& reps, int n, int width);

/// Expected calibration error over equal-width confidence bins. The last
/// bin is closed so confidence 1.0 lands in it.
double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
           int bins = 15);

/// Per-layer metric values for serialization.
struct MetricReport {
  std::string metric;
  PatchGrid grid;
  std::string resolution_tag;
  std::vector<double> per_layer;
};

/// JSON lines, one object per layer:
/// {"metric":..., "layer":..., "value":..., "grid":"NyxNx"}
std::string to_json_lines(const MetricReport& report);

}  // namespace lookhere
