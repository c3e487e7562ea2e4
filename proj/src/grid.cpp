#include "lookhere/grid.hpp"

#include <cmath>

namespace lookhere {

PatchGrid make_grid(int n_y, int n_x) {
  if (n_y < 1 || n_x < 1) {
    throw std::invalid_argument("make_grid: grid dimensions must be positive");
  }
  return PatchGrid{n_y, n_x};
}

double distance(const PatchGrid& grid, int i, int j) {
  auto [iy, ix] = grid.coords(i);
  auto [jy, jx] = grid.coords(j);
  double dy = iy - jy;
  double dx = ix - jx;
  return std::sqrt(dy * dy + dx * dx);
}

void ModelDims::validate() const {
  if (depth < 1 || heads < 1 || width < 1 || head_dim < 1 || patch_size < 1) {
    throw std::invalid_argument("ModelDims: all dimensions must be positive");
  }
  if (width != heads * head_dim) {
    throw std::invalid_argument("ModelDims: width must equal heads * head_dim");
  }
}

ModelDims make_dims(int depth, int heads, int width, int patch_size) {
  if (heads < 1 || width % heads != 0) {
    throw std::invalid_argument("make_dims: width must be divisible by heads");
  }
  ModelDims d{depth, heads, width, width / heads, patch_size};
  d.validate();
  return d;
}

Patchified patchify(const Image& image, int patch_size) {
  const int p = patch_size;
  if (p < 1) {
    throw std::invalid_argument("patchify: patch size must be positive");
  }
  if (image.height % p != 0 || image.width % p != 0) {
    throw std::invalid_argument("patchify: image dimensions must be divisible by patch size");
  }
  Patchified out;
  out.grid = make_grid(image.height / p, image.width / p);
  out.patch_dim = p * p * image.channels;
  out.patches.resize(static_cast<size_t>(out.grid.n()) * out.patch_dim);

  for (int gy = 0; gy < out.grid.n_y; ++gy) {
    for (int gx = 0; gx < out.grid.n_x; ++gx) {
      size_t base = (static_cast<size_t>(gy) * out.grid.n_x + gx) * out.patch_dim;
      size_t k = 0;
      for (int py = 0; py < p; ++py) {
        for (int px = 0; px < p; ++px) {
          for (int c = 0; c < image.channels; ++c) {
            out.patches[base + k++] = image.at(gy * p + py, gx * p + px, c);
          }
        }
      }
    }
  }
  return out;
}

Image unpatchify(const Patchified& p, int patch_size, int channels) {
  const int ps = patch_size;
  if (p.patch_dim != ps * ps * channels) {
    throw std::invalid_argument("unpatchify: patch_dim inconsistent with patch size and channels");
  }
  Image img;
  img.height = p.grid.n_y * ps;
  img.width = p.grid.n_x * ps;
  img.channels = channels;
  img.pixels.resize(static_cast<size_t>(img.height) * img.width * channels);

  for (int gy = 0; gy < p.grid.n_y; ++gy) {
    for (int gx = 0; gx < p.grid.n_x; ++gx) {
      size_t base = (static_cast<size_t>(gy) * p.grid.n_x + gx) * p.patch_dim;
      size_t k = 0;
      for (int py = 0; py < ps; ++py) {
        for (int px = 0; px < ps; ++px) {
          for (int c = 0; c < channels; ++c) {
            img.at(gy * ps + py, gx * ps + px, c) = p.patches[base + k++];
          }
        }
      }
    }
  }
  return img;
}

}  // namespace lookhere
