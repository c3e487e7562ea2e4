#include "lookhere/vit.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "lookhere/rng.hpp"

namespace lookhere {

namespace {

constexpr double kLnEps = 1e-6;

// C (MxN) += A (MxK) * B (KxN)
void mm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C (MxN) += A (MxK) * B^T, with B stored N x K
void mm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C (MxN) += A^T * B, with A stored K x M and B stored K x N
void mm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void add_bias_rows(double* x, const double* b, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* xi = x + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) xi[j] += b[j];
  }
}

void col_sums(const double* x, double* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) out[j] += xi[j];
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

struct LnCache {
  std::vector<double> xhat;  // rows x cols
  std::vector<double> rstd;  // rows
};

void layer_norm(const double* x, const double* gamma, const double* beta, int rows,
                int cols, double* y, LnCache& cache) {
  cache.xhat.resize(static_cast<size_t>(rows) * cols);
  cache.rstd.resize(rows);
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<size_t>(i) * cols;
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += xi[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      double d = xi[j] - mean;
      var += d * d;
    }
    var /= cols;
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.rstd[i] = rstd;
    double* xh = cache.xhat.data() + static_cast<size_t>(i) * cols;
    double* yi = y + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      xh[j] = (xi[j] - mean) * rstd;
      yi[j] = gamma[j] * xh[j] + beta[j];
    }
  }
}

// accumulates into dx, dgamma, dbeta
void layer_norm_backward(const double* dy, const LnCache& cache, const double* gamma,
                         int rows, int cols, double* dx, double* dgamma, double* dbeta) {
  for (int i = 0; i < rows; ++i) {
    const double* dyi = dy + static_cast<size_t>(i) * cols;
    const double* xh = cache.xhat.data() + static_cast<size_t>(i) * cols;
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j < cols; ++j) {
      double dyh = dyi[j] * gamma[j];
      m1 += dyh;
      m2 += dyh * xh[j];
      dgamma[j] += dyi[j] * xh[j];
      dbeta[j] += dyi[j];
    }
    m1 /= cols;
    m2 /= cols;
    double rstd = cache.rstd[i];
    double* dxi = dx + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      double dyh = dyi[j] * gamma[j];
      dxi[j] += rstd * (dyh - m1 - xh[j] * m2);
    }
  }
}

}  // namespace

struct VitCache {
  std::vector<double> patches;
  struct Layer {
    std::vector<double> x_in;  // tokens x width
    LnCache ln1;
    std::vector<double> a;  // ln1 output
    AttendCache attend;
    std::vector<double> x_mid;  // after attention residual
    LnCache ln2;
    std::vector<double> b;      // ln2 output
    std::vector<double> m1, g;  // tokens x mlp_hidden
  };
  std::vector<Layer> layers;
  std::vector<double> x_final;  // tokens x width, pre final LN
  LnCache lnf;
  std::vector<double> cls_in, cls_hid_pre, cls_hid;
};

TinyViTParams::Layout TinyViTParams::layout() const {
  Layout l{};
  const int d = dims.width, m = mlp_hidden, c = num_classes;
  size_t off = 0;
  l.patch_w = off; off += static_cast<size_t>(patch_dim) * d;
  l.patch_b = off; off += d;
  l.cls = off; off += d;
  l.layer_base = off;

  size_t rel = 0;
  l.ln1_g = rel; rel += d;
  l.ln1_b = rel; rel += d;
  l.wqkv = rel; rel += static_cast<size_t>(d) * 3 * d;
  l.bqkv = rel; rel += 3 * d;
  l.wo = rel; rel += static_cast<size_t>(d) * d;
  l.bo = rel; rel += d;
  l.ln2_g = rel; rel += d;
  l.ln2_b = rel; rel += d;
  l.w1 = rel; rel += static_cast<size_t>(d) * m;
  l.b1 = rel; rel += m;
  l.w2 = rel; rel += static_cast<size_t>(m) * d;
  l.b2 = rel; rel += d;
  l.layer_stride = rel;

  off += l.layer_stride * dims.depth;
  l.lnf_g = off; off += d;
  l.lnf_b = off; off += d;
  l.head_w1 = off; off += static_cast<size_t>(d) * d;
  l.head_b1 = off; off += d;
  l.head_w2 = off; off += static_cast<size_t>(d) * c;
  l.head_b2 = off; off += c;
  l.total = off;
  return l;
}

TinyViTParams TinyViTParams::init(const ModelDims& dims, int patch_dim,
                                  int num_classes, uint64_t seed) {
  dims.validate();
  if (patch_dim < 1 || num_classes < 1) {
    throw std::invalid_argument("TinyViTParams: bad patch_dim / num_classes");
  }
  TinyViTParams p;
  p.dims = dims;
  p.patch_dim = patch_dim;
  p.num_classes = num_classes;
  p.mlp_hidden = 4 * dims.width;
  Layout lay = p.layout();
  p.data.assign(lay.total, 0.0);

  GaussianSource rng(seed, 0.02);
  auto fill = [&](size_t off, size_t count) {
    for (size_t i = 0; i < count; ++i) p.data[off + i] = rng.next();
  };
  auto ones = [&](size_t off, size_t count) {
    for (size_t i = 0; i < count; ++i) p.data[off + i] = 1.0;
  };
  const int d = dims.width;
  fill(lay.patch_w, static_cast<size_t>(patch_dim) * d);
  fill(lay.cls, d);
  for (int layer = 0; layer < dims.depth; ++layer) {
    size_t base = lay.layer_base + layer * lay.layer_stride;
    ones(base + lay.ln1_g, d);
    fill(base + lay.wqkv, static_cast<size_t>(d) * 3 * d);
    fill(base + lay.wo, static_cast<size_t>(d) * d);
    ones(base + lay.ln2_g, d);
    fill(base + lay.w1, static_cast<size_t>(d) * p.mlp_hidden);
    fill(base + lay.w2, static_cast<size_t>(p.mlp_hidden) * d);
  }
  ones(lay.lnf_g, d);
  fill(lay.head_w1, static_cast<size_t>(d) * d);
  fill(lay.head_w2, static_cast<size_t>(d) * num_classes);
  return p;
}

void EncodingRef::validate(const PatchGrid& grid, const ModelDims& dims) const {
  int set = (table != nullptr) + (bias != nullptr) + (rotary != nullptr);
  if (set > 1) {
    throw std::invalid_argument("EncodingRef: at most one positional mechanism");
  }
  if (table) {
    if (!(table->grid == grid) || table->width != dims.width) {
      throw std::invalid_argument("EncodingRef: embedding table does not match grid/width");
    }
  }
  if (bias) {
    if (!(bias->grid == grid) || bias->heads != dims.heads || bias->depth != dims.depth) {
      throw std::invalid_argument("EncodingRef: bias field does not match grid/dims");
    }
  }
  if (rotary) {
    if (!(rotary->grid == grid) || rotary->head_dim != dims.head_dim) {
      throw std::invalid_argument("EncodingRef: rotary config does not match grid/dims");
    }
  }
}

VitForward vit_forward(const std::vector<double>& patches, const TinyViTParams& params,
                       const EncodingRef& encoding, const PatchGrid& grid,
                       bool want_cache, bool keep_prebias) {
  const ModelDims& dims = params.dims;
  encoding.validate(grid, dims);
  const int n = grid.n();
  if (patches.size() != static_cast<size_t>(n) * params.patch_dim) {
    throw std::invalid_argument("vit_forward: patch array does not match grid");
  }
  const int t = n + 1;
  const int d = dims.width;
  const int m = params.mlp_hidden;
  const auto lay = params.layout();

  VitForward fwd;
  auto cache = std::make_shared<VitCache>();
  cache->layers.resize(dims.depth);
  if (want_cache) cache->patches = patches;

  // embed tokens
  std::vector<double> x(static_cast<size_t>(t) * d, 0.0);
  std::memcpy(x.data(), params.at(lay.cls), sizeof(double) * d);
  mm_nn(patches.data(), params.at(lay.patch_w), x.data() + d, n, params.patch_dim, d);
  add_bias_rows(x.data() + d, params.at(lay.patch_b), n, d);
  if (encoding.table) {
    for (int i = 1; i <= n; ++i) {
      const double* row = encoding.table->row(i);
      double* xi = x.data() + static_cast<size_t>(i) * d;
      for (int c = 0; c < d; ++c) xi[c] += row[c];
    }
  }

  fwd.attn.reserve(dims.depth);
  fwd.layer_reps.reserve(dims.depth);

  std::vector<double> a(static_cast<size_t>(t) * d), qkv(static_cast<size_t>(t) * 3 * d);
  std::vector<double> q(static_cast<size_t>(dims.heads) * t * dims.head_dim);
  std::vector<double> k(q.size()), v(q.size());

  for (int layer = 0; layer < dims.depth; ++layer) {
    auto& lc = cache->layers[layer];
    size_t base = lay.layer_base + layer * lay.layer_stride;
    if (want_cache) lc.x_in = x;

    layer_norm(x.data(), params.at(base + lay.ln1_g), params.at(base + lay.ln1_b), t, d,
               a.data(), lc.ln1);
    if (want_cache) lc.a = a;

    std::fill(qkv.begin(), qkv.end(), 0.0);
    mm_nn(a.data(), params.at(base + lay.wqkv), qkv.data(), t, d, 3 * d);
    add_bias_rows(qkv.data(), params.at(base + lay.bqkv), t, 3 * d);

    const int dh = dims.head_dim;
    for (int h = 0; h < dims.heads; ++h) {
      for (int tok = 0; tok < t; ++tok) {
        const double* row = qkv.data() + static_cast<size_t>(tok) * 3 * d;
        double* qd = q.data() + (static_cast<size_t>(h) * t + tok) * dh;
        double* kd = k.data() + (static_cast<size_t>(h) * t + tok) * dh;
        double* vd = v.data() + (static_cast<size_t>(h) * t + tok) * dh;
        for (int c = 0; c < dh; ++c) {
          qd[c] = row[h * dh + c];
          kd[c] = row[d + h * dh + c];
          vd[c] = row[2 * d + h * dh + c];
        }
      }
    }

    AttendOptions opts;
    if (encoding.bias) opts.bias = encoding.bias->layer_slice(layer).data();
    opts.rotary = encoding.rotary;
    opts.keep_prebias = keep_prebias;
    AttentionResult res = attend(q, k, v, dims.heads, t, dims.head_dim, opts,
                                 want_cache ? &lc.attend : nullptr);

    // output projection + residual
    std::vector<double> proj(static_cast<size_t>(t) * d, 0.0);
    mm_nn(res.outputs.data(), params.at(base + lay.wo), proj.data(), t, d, d);
    add_bias_rows(proj.data(), params.at(base + lay.bo), t, d);
    for (size_t i = 0; i < x.size(); ++i) x[i] += proj[i];
    if (want_cache) lc.x_mid = x;

    fwd.attn.push_back(std::move(res));

    // MLP block
    std::vector<double> b(static_cast<size_t>(t) * d);
    layer_norm(x.data(), params.at(base + lay.ln2_g), params.at(base + lay.ln2_b), t, d,
               b.data(), lc.ln2);
    std::vector<double> m1(static_cast<size_t>(t) * m, 0.0);
    mm_nn(b.data(), params.at(base + lay.w1), m1.data(), t, d, m);
    add_bias_rows(m1.data(), params.at(base + lay.b1), t, m);
    std::vector<double> g(m1.size());
    for (size_t i = 0; i < m1.size(); ++i) g[i] = gelu(m1[i]);
    std::vector<double> m2(static_cast<size_t>(t) * d, 0.0);
    mm_nn(g.data(), params.at(base + lay.w2), m2.data(), t, m, d);
    add_bias_rows(m2.data(), params.at(base + lay.b2), t, d);
    for (size_t i = 0; i < x.size(); ++i) x[i] += m2[i];

    if (want_cache) {
      lc.b = std::move(b);
      lc.m1 = std::move(m1);
      lc.g = std::move(g);
    }
    fwd.layer_reps.push_back(x);
  }

  if (want_cache) cache->x_final = x;
  fwd.final_tokens.resize(x.size());
  layer_norm(x.data(), params.at(lay.lnf_g), params.at(lay.lnf_b), t, d,
             fwd.final_tokens.data(), cache->lnf);

  // classifier head on CLS
  std::vector<double> cls(fwd.final_tokens.begin(), fwd.final_tokens.begin() + d);
  std::vector<double> hid_pre(d, 0.0);
  mm_nn(cls.data(), params.at(lay.head_w1), hid_pre.data(), 1, d, d);
  for (int c = 0; c < d; ++c) hid_pre[c] += params.at(lay.head_b1)[c];
  std::vector<double> hid(d);
  for (int c = 0; c < d; ++c) hid[c] = gelu(hid_pre[c]);
  fwd.logits.assign(params.num_classes, 0.0);
  mm_nn(hid.data(), params.at(lay.head_w2), fwd.logits.data(), 1, d, params.num_classes);
  for (int c = 0; c < params.num_classes; ++c) fwd.logits[c] += params.at(lay.head_b2)[c];

  if (want_cache) {
    cache->cls_in = std::move(cls);
    cache->cls_hid_pre = std::move(hid_pre);
    cache->cls_hid = std::move(hid);
    fwd.cache = std::move(cache);
  } else {
    fwd.cache = std::move(cache);  // keeps lnf for analysis-free paths; cheap
  }
  return fwd;
}

VitForward vit_forward(const Image& image, const TinyViTParams& params,
                       const EncodingRef& encoding, bool want_cache) {
  Patchified p = patchify(image, params.dims.patch_size);
  if (p.patch_dim != params.patch_dim) {
    throw std::invalid_argument("vit_forward: image patch_dim does not match params");
  }
  return vit_forward(p.patches, params, encoding, p.grid, want_cache);
}

std::vector<double> vit_backward(const VitForward& fwd, const TinyViTParams& params,
                                 const std::vector<double>& dlogits) {
  const VitCache& cache = *fwd.cache;
  if (cache.cls_hid.empty()) {
    throw std::invalid_argument("vit_backward: forward pass was run without cache");
  }
  const ModelDims& dims = params.dims;
  const int d = dims.width, m = params.mlp_hidden, c = params.num_classes;
  const int t = static_cast<int>(cache.x_final.size()) / d;
  const int n = t - 1;
  const auto lay = params.layout();
  std::vector<double> grad(params.data.size(), 0.0);

  // classifier head
  std::vector<double> dhid(d, 0.0);
  mm_nt(dlogits.data(), params.at(lay.head_w2), dhid.data(), 1, c, d);
  mm_tn(cache.cls_hid.data(), dlogits.data(), grad.data() + lay.head_w2, d, 1, c);
  for (int i = 0; i < c; ++i) grad[lay.head_b2 + i] += dlogits[i];

  std::vector<double> dhid_pre(d);
  for (int i = 0; i < d; ++i) dhid_pre[i] = dhid[i] * gelu_grad(cache.cls_hid_pre[i]);
  std::vector<double> dcls(d, 0.0);
  mm_nt(dhid_pre.data(), params.at(lay.head_w1), dcls.data(), 1, d, d);
  mm_tn(cache.cls_in.data(), dhid_pre.data(), grad.data() + lay.head_w1, d, 1, d);
  for (int i = 0; i < d; ++i) grad[lay.head_b1 + i] += dhid_pre[i];

  // final LN
  std::vector<double> df(static_cast<size_t>(t) * d, 0.0);
  std::copy(dcls.begin(), dcls.end(), df.begin());
  std::vector<double> dx(static_cast<size_t>(t) * d, 0.0);
  layer_norm_backward(df.data(), cache.lnf, params.at(lay.lnf_g), t, d, dx.data(),
                      grad.data() + lay.lnf_g, grad.data() + lay.lnf_b);

  std::vector<double> dmid(static_cast<size_t>(t) * d);
  std::vector<double> dqkv(static_cast<size_t>(t) * 3 * d);
  for (int layer = dims.depth - 1; layer >= 0; --layer) {
    const auto& lc = cache.layers[layer];
    size_t base = lay.layer_base + layer * lay.layer_stride;

    // MLP block backward: x_out = x_mid + m2(ln2(x_mid))
    std::vector<double> dg(static_cast<size_t>(t) * m, 0.0);
    mm_nt(dx.data(), params.at(base + lay.w2), dg.data(), t, d, m);
    mm_tn(lc.g.data(), dx.data(), grad.data() + base + lay.w2, m, t, d);
    col_sums(dx.data(), grad.data() + base + lay.b2, t, d);

    std::vector<double> dm1(dg.size());
    for (size_t i = 0; i < dg.size(); ++i) dm1[i] = dg[i] * gelu_grad(lc.m1[i]);

    std::vector<double> db(static_cast<size_t>(t) * d, 0.0);
    mm_nt(dm1.data(), params.at(base + lay.w1), db.data(), t, m, d);
    mm_tn(lc.b.data(), dm1.data(), grad.data() + base + lay.w1, d, t, m);
    col_sums(dm1.data(), grad.data() + base + lay.b1, t, m);

    std::copy(dx.begin(), dx.end(), dmid.begin());  // residual path
    layer_norm_backward(db.data(), lc.ln2, params.at(base + lay.ln2_g), t, d,
                        dmid.data(), grad.data() + base + lay.ln2_g,
                        grad.data() + base + lay.ln2_b);

    // attention block backward: x_mid = x_in + proj(attend(...))
    std::vector<double> dproj = dmid;
    std::vector<double> dout(static_cast<size_t>(t) * d, 0.0);
    mm_nt(dproj.data(), params.at(base + lay.wo), dout.data(), t, d, d);
    mm_tn(fwd.attn[layer].outputs.data(), dproj.data(), grad.data() + base + lay.wo, d,
          t, d);
    col_sums(dproj.data(), grad.data() + base + lay.bo, t, d);

    std::vector<double> gq, gk, gv;
    attend_backward(lc.attend, dout, gq, gk, gv);

    const int dh = dims.head_dim;
    std::fill(dqkv.begin(), dqkv.end(), 0.0);
    for (int h = 0; h < dims.heads; ++h) {
      for (int tok = 0; tok < t; ++tok) {
        double* row = dqkv.data() + static_cast<size_t>(tok) * 3 * d;
        const double* qd = gq.data() + (static_cast<size_t>(h) * t + tok) * dh;
        const double* kd = gk.data() + (static_cast<size_t>(h) * t + tok) * dh;
        const double* vd = gv.data() + (static_cast<size_t>(h) * t + tok) * dh;
        for (int cc = 0; cc < dh; ++cc) {
          row[h * dh + cc] = qd[cc];
          row[d + h * dh + cc] = kd[cc];
          row[2 * d + h * dh + cc] = vd[cc];
        }
      }
    }

    std::vector<double> da(static_cast<size_t>(t) * d, 0.0);
    mm_nt(dqkv.data(), params.at(base + lay.wqkv), da.data(), t, 3 * d, d);
    mm_tn(lc.a.data(), dqkv.data(), grad.data() + base + lay.wqkv, d, t, 3 * d);
    col_sums(dqkv.data(), grad.data() + base + lay.bqkv, t, 3 * d);

    std::copy(dmid.begin(), dmid.end(), dx.begin());  // residual path
    layer_norm_backward(da.data(), lc.ln1, params.at(base + lay.ln1_g), t, d, dx.data(),
                        grad.data() + base + lay.ln1_g, grad.data() + base + lay.ln1_b);
  }

  // token embedding backward
  for (int i = 0; i < d; ++i) grad[lay.cls + i] += dx[i];
  mm_tn(cache.patches.data(), dx.data() + d, grad.data() + lay.patch_w,
        params.patch_dim, n, d);
  col_sums(dx.data() + d, grad.data() + lay.patch_b, n, d);
  return grad;
}

double cross_entropy(const std::vector<double>& logits, int label,
                     std::vector<double>* dlogits) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  double log_z = mx + std::log(sum);
  if (dlogits) {
    dlogits->resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
      (*dlogits)[i] = std::exp(logits[i] - log_z) - (static_cast<int>(i) == label ? 1.0 : 0.0);
    }
  }
  return log_z - logits[label];
}

}  // namespace lookhere
