#pragma once

#include <memory>
#include <vector>

#include "lookhere/attention.hpp"
#include "lookhere/bias_field.hpp"
#include "lookhere/grid.hpp"
#include "lookhere/pos_embed.hpp"
#include "lookhere/rope.hpp"

namespace lookhere {

/// Flat parameter store for a small pre-norm ViT with GELU MLPs (ratio 4)
/// and a one-hidden-layer classifier on the CLS token. The flat layout
/// keeps finite-difference probing and the optimizer trivial.
struct TinyViTParams {
  ModelDims dims;
  int patch_dim = 0;    // P*P*C
  int num_classes = 0;
  int mlp_hidden = 0;   // 4 * width
  std::vector<double> data;

  static TinyViTParams init(const ModelDims& dims, int patch_dim, int num_classes,
                            uint64_t seed);

  // per-layer block sizes
  struct Layout {
    size_t patch_w, patch_b, cls;
    size_t layer_base, layer_stride;
    size_t ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
    size_t lnf_g, lnf_b, head_w1, head_b1, head_w2, head_b2;
    size_t total;
  };
  Layout layout() const;

  double* at(size_t offset) { return data.data() + offset; }
  const double* at(size_t offset) const { return data.data() + offset; }
};

/// Exactly one of these may be set; none means no positional information.
struct EncodingRef {
  const EmbeddingTable* table = nullptr;
  const BiasField* bias = nullptr;
  const RotaryConfig* rotary = nullptr;

  void validate(const PatchGrid& grid, const ModelDims& dims) const;
};

struct VitCache;  // opaque; defined in vit.cpp

struct VitForward {
  std::vector<double> logits;                   // num_classes
  std::vector<AttentionResult> attn;            // one per layer
  std::vector<std::vector<double>> layer_reps;  // per layer, tokens x width
  std::vector<double> final_tokens;             // tokens x width, post final LN
  std::shared_ptr<VitCache> cache;              // present iff requested
};

/// Run the transformer on pre-patchified input (n x patch_dim). Exposes the
/// per-layer attention matrices and token representations for analysis.
VitForward vit_forward(const std::vector<double>& patches, const TinyViTParams& params,
                       const EncodingRef& encoding, const PatchGrid& grid,
                       bool want_cache = false, bool keep_prebias = false);

VitForward vit_forward(const Image& image, const TinyViTParams& params,
                       const EncodingRef& encoding, bool want_cache = false);

/// Gradient of a scalar loss with respect to every parameter, given
/// d(loss)/d(logits). Requires the forward cache.
std::vector<double> vit_backward(const VitForward& fwd, const TinyViTParams& params,
                                 const std::vector<double>& dlogits);

/// Softmax cross-entropy; fills dlogits if non-null.
double cross_entropy(const std::vector<double>& logits, int label,
                     std::vector<double>* dlogits);

}  // namespace lookhere
