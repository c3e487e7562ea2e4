#include "lookhere/analysis.hpp"

#include <cmath>
#include <sstream>

namespace lookhere {

namespace {

double entropy_nats(const double* p, int n) {
  double h = 0.0;
  for (int i = 0; i < n; ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

void check_rows_normalized(const std::vector<double>& weights, int heads, int tokens) {
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < tokens; ++i) {
      const double* row = weights.data() + (static_cast<size_t>(h) * tokens + i) * tokens;
      double sum = 0.0;
      for (int j = 0; j < tokens; ++j) sum += row[j];
      if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("attention rows must be normalized");
      }
    }
  }
}

}  // namespace

double head_jsd(const std::vector<double>& weights, int heads, int tokens) {
  if (heads < 1 || tokens < 1 ||
      weights.size() != static_cast<size_t>(heads) * tokens * tokens) {
    throw std::invalid_argument("head_jsd: shape mismatch");
  }
  check_rows_normalized(weights, heads, tokens);

  std::vector<double> mixture(tokens);
  double total = 0.0;
  for (int i = 0; i < tokens; ++i) {
    std::fill(mixture.begin(), mixture.end(), 0.0);
    double mean_entropy = 0.0;
    for (int h = 0; h < heads; ++h) {
      const double* row = weights.data() + (static_cast<size_t>(h) * tokens + i) * tokens;
      for (int j = 0; j < tokens; ++j) mixture[j] += row[j];
      mean_entropy += entropy_nats(row, tokens);
    }
    for (double& v : mixture) v /= heads;
    mean_entropy /= heads;
    total += entropy_nats(mixture.data(), tokens) - mean_entropy;
  }
  return total / tokens;
}

double head_jsd(const AttentionResult& res) {
  return head_jsd(res.weights, res.heads, res.tokens);
}

double attention_distance(const std::vector<double>& weights, int heads, int tokens,
                          const PatchGrid& grid) {
  if (grid.tokens() != tokens) {
    throw std::invalid_argument("attention_distance: grid does not match token count");
  }
  check_rows_normalized(weights, heads, tokens);

  const int n = grid.n();
  double total = 0.0;
  for (int h = 0; h < heads; ++h) {
    for (int i = 1; i <= n; ++i) {
      const double* row = weights.data() + (static_cast<size_t>(h) * tokens + i) * tokens;
      double acc = 0.0;
      for (int j = 1; j <= n; ++j) {
        if (row[j] != 0.0) acc += row[j] * distance(grid, i, j);
      }
      total += acc;
    }
  }
  return total / (static_cast<double>(heads) * n);
}

double attention_distance(const AttentionResult& res, const PatchGrid& grid) {
  return attention_distance(res.weights, res.heads, res.tokens, grid);
}

double patch_similarity(const std::vector<double>& reps, int n, int width) {
  if (n < 2 || width < 1 || reps.size() != static_cast<size_t>(n) * width) {
    throw std::invalid_argument("patch_similarity: need at least two rows");
  }
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    const double* r = reps.data() + static_cast<size_t>(i) * width;
    double s = 0.0;
    for (int c = 0; c < width; ++c) s += r[c] * r[c];
    norms[i] = std::sqrt(s);
    if (norms[i] == 0.0) {
      throw std::invalid_argument("patch_similarity: zero-norm representation");
    }
  }
  double total = 0.0;
  size_t pairs = 0;
  for (int i = 0; i < n; ++i) {
    const double* ri = reps.data() + static_cast<size_t>(i) * width;
    for (int j = i + 1; j < n; ++j) {
      const double* rj = reps.data() + static_cast<size_t>(j) * width;
      double dot = 0.0;
      for (int c = 0; c < width; ++c) dot += ri[c] * rj[c];
      total += dot / (norms[i] * norms[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
           int bins) {
  if (confidences.empty() || confidences.size() != correct.size()) {
    throw std::invalid_argument("ece: empty or mismatched inputs");
  }
  if (bins < 1) throw std::invalid_argument("ece: bins must be positive");
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("ece: confidences must lie in [0, 1]");
    }
  }
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<size_t> count(bins, 0);
  for (size_t s = 0; s < confidences.size(); ++s) {
    int b = std::min(static_cast<int>(confidences[s] * bins), bins - 1);
    conf_sum[b] += confidences[s];
    acc_sum[b] += correct[s] ? 1.0 : 0.0;
    ++count[b];
  }
  double total = static_cast<double>(confidences.size());
  double e = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    double frac = count[b] / total;
    e += frac * std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
  }
  return e;
}

std::string to_json_lines(const MetricReport& report) {
  std::ostringstream out;
  out.precision(17);
  for (size_t l = 0; l < report.per_layer.size(); ++l) {
    out << "{\"metric\":\"" << report.metric << "\",\"layer\":" << l + 1
        << ",\"value\":" << report.per_layer[l] << ",\"grid\":\"" << report.grid.n_y
        << "x" << report.grid.n_x << "\"";
    if (!report.resolution_tag.empty()) {
      out << ",\"resolution\":\"" << report.resolution_tag << "\"";
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace lookhere
