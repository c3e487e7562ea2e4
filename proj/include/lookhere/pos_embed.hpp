#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lookhere/grid.hpp"

namespace lookhere {

enum class EmbeddingFamily : uint8_t {
  kLearned1D,
  kSincos2D,
  kFactorized,
  kFourier,
};

/// Parameters of the Fourier-feature embedding map. Retained on the table
/// so a grid change can re-evaluate the same map at new fractional
/// coordinates.
struct FourierParams {
  int feature_count = 0;  // rows of the frequency matrix
  int hidden = 0;
  int width = 0;
  double sigma = 1.0;
  std::vector<double> frequencies;  // feature_count x 2, (y, x) order
  std::vector<double> w1, b1;       // 2*feature_count -> hidden
  std::vector<double> w2, b2;       // hidden -> width
};

/// Absolute position embeddings added to patch embeddings before layer 1.
/// One row per patch; CLS carries no position.
struct EmbeddingTable {
  PatchGrid grid;
  int width = 0;
  EmbeddingFamily family = EmbeddingFamily::kLearned1D;
  std::vector<double> values;  // n x width

  // factorized keeps its axis tables so it can be resized per axis
  std::vector<double> axis_y;  // n_y x width
  std::vector<double> axis_x;  // n_x x width

  std::optional<FourierParams> fourier;

  const double* row(int patch_index) const {  // 1-based patch token
    return values.data() + static_cast<size_t>(patch_index - 1) * width;
  }
};

/// Fixed sinusoids: the first width/2 dims encode i_y, the rest i_x, each
/// axis with interleaved sin/cos pairs at base 10000 over 0-based positions.
EmbeddingTable sincos_2d(const PatchGrid& grid, int width);

/// Learnable factorized embeddings: row(i) = Y[i_y] + X[i_x], both axis
/// tables seeded Gaussian(0, 0.02).
EmbeddingTable factorized_init(const PatchGrid& grid, int width, uint64_t seed);

/// Fourier features of fractional coordinates (i_y/n_y, i_x/n_x) passed
/// through a one-hidden-layer GELU MLP. sigma scales the Gaussian frequency
/// init.
EmbeddingTable fourier_embed(const PatchGrid& grid, int width, int hidden,
                             uint64_t seed, double sigma = 1.0);

/// Re-evaluate a Fourier table's map on a different grid; parameters are
/// untouched.
EmbeddingTable fourier_reevaluate(const EmbeddingTable& table, const PatchGrid& new_grid);

/// Plain learnable table over flattened patch indices.
EmbeddingTable learned_1d_init(const PatchGrid& grid, int width, uint64_t seed);

/// Per-channel bilinear resampling (align-corners) of a learned_1d or
/// sincos_2d table to a new grid.
EmbeddingTable resize_bilinear(const EmbeddingTable& table, const PatchGrid& new_grid);

/// Axis-wise linear interpolation of a factorized table's Y and X tables,
/// then re-addition.
EmbeddingTable resize_factorized(const EmbeddingTable& table, const PatchGrid& new_grid);

}  // namespace lookhere
