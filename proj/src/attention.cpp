#include "lookhere/attention.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lookhere {

namespace {

void rotate_tokens(std::vector<double>& heads_tensor, int heads, int tokens,
                   int head_dim, const RotaryConfig& cfg, bool transposed) {
  const PatchGrid& grid = cfg.grid;
  if (grid.n() + 1 != tokens) {
    throw std::invalid_argument("attend: rotary grid does not match token count");
  }
  for (int h = 0; h < heads; ++h) {
    for (int t = 1; t < tokens; ++t) {  // CLS stays untouched
      auto [iy, ix] = grid.coords(t);
      std::span<double> vec(heads_tensor.data() +
                                (static_cast<size_t>(h) * tokens + t) * head_dim,
                            head_dim);
      if (transposed) {
        apply_rotary_transposed(vec, iy, ix, cfg);
      } else {
        apply_rotary(vec, iy, ix, cfg);
      }
    }
  }
}

}  // namespace

AttentionResult attend(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, int heads, int tokens,
                       int head_dim, const AttendOptions& opts, AttendCache* cache) {
  const size_t expect = static_cast<size_t>(heads) * tokens * head_dim;
  if (q.size() != expect || k.size() != expect || v.size() != expect) {
    throw std::invalid_argument("attend: q/k/v shape mismatch");
  }
  const int width = heads * head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<double> qr(q.begin(), q.end());
  std::vector<double> kr(k.begin(), k.end());
  if (opts.rotary) {
    rotate_tokens(qr, heads, tokens, head_dim, *opts.rotary, false);
    rotate_tokens(kr, heads, tokens, head_dim, *opts.rotary, false);
  }

  AttentionResult res;
  res.heads = heads;
  res.tokens = tokens;
  res.head_dim = head_dim;
  res.weights.assign(static_cast<size_t>(heads) * tokens * tokens, 0.0);
  res.outputs.assign(static_cast<size_t>(tokens) * width, 0.0);
  if (opts.keep_prebias) {
    res.logits_prebias.emplace(static_cast<size_t>(heads) * tokens * tokens, 0.0);
  }

  std::vector<double> row_logits(tokens);
  for (int h = 0; h < heads; ++h) {
    const double* qh = qr.data() + static_cast<size_t>(h) * tokens * head_dim;
    const double* kh = kr.data() + static_cast<size_t>(h) * tokens * head_dim;
    const double* vh = v.data() + static_cast<size_t>(h) * tokens * head_dim;
    const double* bh =
        opts.bias ? opts.bias + static_cast<size_t>(h) * tokens * tokens : nullptr;

    for (int i = 0; i < tokens; ++i) {
      const double* qi = qh + static_cast<size_t>(i) * head_dim;
      double max_logit = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < tokens; ++j) {
        const double* kj = kh + static_cast<size_t>(j) * head_dim;
        double s = 0.0;
        for (int d = 0; d < head_dim; ++d) s += qi[d] * kj[d];
        s *= scale;
        if (res.logits_prebias) {
          (*res.logits_prebias)[(static_cast<size_t>(h) * tokens + i) * tokens + j] = s;
        }
        double b = bh ? bh[static_cast<size_t>(i) * tokens + j] : 0.0;
        if (std::isinf(b)) {
          row_logits[j] = -std::numeric_limits<double>::infinity();
        } else {
          row_logits[j] = s - b;
          if (row_logits[j] > max_logit) max_logit = row_logits[j];
        }
      }
      if (!std::isfinite(max_logit)) {
        throw std::logic_error("attend: fully masked attention row");
      }

      double* wrow = res.weights.data() + (static_cast<size_t>(h) * tokens + i) * tokens;
      double sum = 0.0;
      for (int j = 0; j < tokens; ++j) {
        if (std::isinf(row_logits[j])) {
          wrow[j] = 0.0;
        } else {
          wrow[j] = std::exp(row_logits[j] - max_logit);
          sum += wrow[j];
        }
      }
      double inv = 1.0 / sum;
      double* orow = res.outputs.data() + static_cast<size_t>(i) * width + h * head_dim;
      for (int j = 0; j < tokens; ++j) {
        if (wrow[j] == 0.0) continue;
        wrow[j] *= inv;
        const double* vj = vh + static_cast<size_t>(j) * head_dim;
        for (int d = 0; d < head_dim; ++d) orow[d] += wrow[j] * vj[d];
      }
    }
  }

  if (cache) {
    cache->heads = heads;
    cache->tokens = tokens;
    cache->head_dim = head_dim;
    cache->q = std::move(qr);
    cache->k = std::move(kr);
    cache->v.assign(v.begin(), v.end());
    cache->weights = res.weights;
    cache->bias = opts.bias;
    cache->rotary = opts.rotary;
  }
  return res;
}

void attend_backward(const AttendCache& cache, std::span<const double> grad_outputs,
                     std::vector<double>& grad_q, std::vector<double>& grad_k,
                     std::vector<double>& grad_v) {
  const int heads = cache.heads, tokens = cache.tokens, head_dim = cache.head_dim;
  const int width = heads * head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const size_t sz = static_cast<size_t>(heads) * tokens * head_dim;
  grad_q.assign(sz, 0.0);
  grad_k.assign(sz, 0.0);
  grad_v.assign(sz, 0.0);

  std::vector<double> dw(tokens);
  for (int h = 0; h < heads; ++h) {
    const double* qh = cache.q.data() + static_cast<size_t>(h) * tokens * head_dim;
    const double* kh = cache.k.data() + static_cast<size_t>(h) * tokens * head_dim;
    const double* vh = cache.v.data() + static_cast<size_t>(h) * tokens * head_dim;
    double* gq = grad_q.data() + static_cast<size_t>(h) * tokens * head_dim;
    double* gk = grad_k.data() + static_cast<size_t>(h) * tokens * head_dim;
    double* gv = grad_v.data() + static_cast<size_t>(h) * tokens * head_dim;

    for (int i = 0; i < tokens; ++i) {
      const double* go = grad_outputs.data() + static_cast<size_t>(i) * width + h * head_dim;
      const double* w = cache.weights.data() + (static_cast<size_t>(h) * tokens + i) * tokens;

      // dL/dw and accumulate dL/dv
      for (int j = 0; j < tokens; ++j) {
        if (w[j] == 0.0) {
          dw[j] = 0.0;
          continue;
        }
        const double* vj = vh + static_cast<size_t>(j) * head_dim;
        double* gvj = gv + static_cast<size_t>(j) * head_dim;
        double acc = 0.0;
        for (int d = 0; d < head_dim; ++d) {
          acc += go[d] * vj[d];
          gvj[d] += w[j] * go[d];
        }
        dw[j] = acc;
      }

      // softmax backward over the visible set; masked entries stay zero
      double inner = 0.0;
      for (int j = 0; j < tokens; ++j) inner += w[j] * dw[j];
      const double* qi = qh + static_cast<size_t>(i) * head_dim;
      double* gqi = gq + static_cast<size_t>(i) * head_dim;
      for (int j = 0; j < tokens; ++j) {
        if (w[j] == 0.0) continue;
        double ds = w[j] * (dw[j] - inner) * scale;
        const double* kj = kh + static_cast<size_t>(j) * head_dim;
        double* gkj = gk + static_cast<size_t>(j) * head_dim;
        for (int d = 0; d < head_dim; ++d) {
          gqi[d] += ds * kj[d];
          gkj[d] += ds * qi[d];
        }
      }
    }
  }

  if (cache.rotary) {
    rotate_tokens(grad_q, heads, tokens, head_dim, *cache.rotary, true);
    rotate_tokens(grad_k, heads, tokens, head_dim, *cache.rotary, true);
  }
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& params,
                  const std::vector<double>& analytic_grad, double eps,
                  int sample_count, uint64_t seed) {
  if (params.size() != analytic_grad.size()) {
    throw std::invalid_argument("grad_check: gradient size mismatch");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, params.size() - 1);
  std::vector<double> p = params;

  double worst = 0.0;
  int count = std::min<size_t>(sample_count, params.size());
  for (int s = 0; s < count; ++s) {
    size_t idx = pick(rng);
    double saved = p[idx];
    p[idx] = saved + eps;
    double up = f(p);
    p[idx] = saved - eps;
    double down = f(p);
    p[idx] = saved;
    double numeric = (up - down) / (2.0 * eps);
    double a = analytic_grad[idx];
    double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace lookhere
