#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lookhere/bias_field.hpp"
#include "lookhere/grid.hpp"
#include "lookhere/rope.hpp"

namespace lookhere {

/// One layer's attention: row-stochastic weights per head plus the
/// head-concatenated outputs. Weights are exactly zero on masked pairs.
struct AttentionResult {
  int heads = 0;
  int tokens = 0;
  int head_dim = 0;
  std::vector<double> weights;  // heads x tokens x tokens, post-softmax
  std::vector<double> outputs;  // tokens x (heads * head_dim)
  std::optional<std::vector<double>> logits_prebias;  // heads x tokens x tokens

  double weight(int head, int i, int j) const {
    return weights[(static_cast<size_t>(head) * tokens + i) * tokens + j];
  }
};

struct AttendOptions {
  // one layer's bias slice, heads x tokens x tokens; +inf entries are
  // excluded from the softmax rather than subtracted
  const double* bias = nullptr;
  const RotaryConfig* rotary = nullptr;
  bool keep_prebias = false;
};

/// Saved forward state for attend_backward.
struct AttendCache {
  int heads = 0, tokens = 0, head_dim = 0;
  std::vector<double> q, k, v;  // post-rotation copies, heads x tokens x head_dim
  std::vector<double> weights;  // heads x tokens x tokens
  const double* bias = nullptr;
  const RotaryConfig* rotary = nullptr;
};

/// Scaled dot-product attention over heads x tokens x head_dim inputs.
/// Token 0 is CLS; rotary rotation skips it. A row with no visible key is a
/// logic error (self-visibility makes it unreachable from valid fields).
AttentionResult attend(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, int heads, int tokens,
                       int head_dim, const AttendOptions& opts = {},
                       AttendCache* cache = nullptr);

/// Reverse-mode gradients of attend. grad_outputs is tokens x (heads*head_dim);
/// the returned gradients are with respect to the (unrotated) inputs.
void attend_backward(const AttendCache& cache, std::span<const double> grad_outputs,
                     std::vector<double>& grad_q, std::vector<double>& grad_k,
                     std::vector<double>& grad_v);

/// Max relative error between an analytic gradient and central finite
/// differences of f, probed at sample_count random coordinates.
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& params,
                  const std::vector<double>& analytic_grad, double eps,
                  int sample_count, uint64_t seed);

}  // namespace lookhere
