#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lookhere {

/// Patch lattice of a plain ViT. Token 0 is the CLS slot; patch tokens
/// occupy 1..n in row-major order (y outer, x inner), with 1-based lattice
/// coordinates. The y axis grows downward (image convention).
struct PatchGrid {
  int n_y = 0;
  int n_x = 0;

  static constexpr int cls_index = 0;

  int n() const { return n_y * n_x; }
  int tokens() const { return n() + 1; }

  bool is_patch(int token) const { return token >= 1 && token <= n(); }

  // token index 1..n -> (i_y, i_x), both 1-based
  std::pair<int, int> coords(int token) const {
    if (!is_patch(token)) {
      throw std::invalid_argument("coords: token is not a patch index");
    }
    int zero_based = token - 1;
    return {zero_based / n_x + 1, zero_based % n_x + 1};
  }

  int token_at(int i_y, int i_x) const {
    if (i_y < 1 || i_y > n_y || i_x < 1 || i_x > n_x) {
      throw std::invalid_argument("token_at: lattice coordinate out of range");
    }
    return (i_y - 1) * n_x + (i_x - 1) + 1;
  }

  bool operator==(const PatchGrid&) const = default;
};

PatchGrid make_grid(int n_y, int n_x);

/// Euclidean distance between two patch tokens, in patch units.
/// CLS has no lattice position and is rejected.
double distance(const PatchGrid& grid, int i, int j);

/// Transformer shape parameters. width == heads * head_dim.
struct ModelDims {
  int depth = 0;     // L
  int heads = 0;     // H
  int width = 0;     // D
  int head_dim = 0;  // D_H
  int patch_size = 0;

  void validate() const;
};

ModelDims make_dims(int depth, int heads, int width, int patch_size);

/// Dense row-major (y, x, c) pixel array.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  double at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

struct Patchified {
  PatchGrid grid;
  int patch_dim = 0;            // P*P*C
  std::vector<double> patches;  // n x patch_dim, row-major
};

/// Split an image into non-overlapping P x P patches, flattened (y, x, c)
/// within each patch, ordered to match PatchGrid indexing. Dimensions must
/// divide evenly; no padding.
Patchified patchify(const Image& image, int patch_size);

/// Inverse of patchify; used by tests and render paths.
Image unpatchify(const Patchified& p, int patch_size, int channels);

}  // namespace lookhere
