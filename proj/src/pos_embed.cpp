#include "lookhere/pos_embed.hpp"

#include <cmath>
#include <numbers>

#include "lookhere/rng.hpp"

namespace lookhere {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// align-corners source position for output index o
double sample_pos(int o, int src, int dst) {
  if (dst <= 1 || src <= 1) return 0.0;
  return static_cast<double>(o) * (src - 1) / (dst - 1);
}

// 1D linear interpolation of a (rows x width) table to new_rows
std::vector<double> interp_rows(const std::vector<double>& v, int rows, int width,
                                int new_rows) {
  std::vector<double> out(static_cast<size_t>(new_rows) * width);
  for (int o = 0; o < new_rows; ++o) {
    double p = sample_pos(o, rows, new_rows);
    int lo = static_cast<int>(p);
    double w = p - lo;
    const double* a = v.data() + static_cast<size_t>(lo) * width;
    if (w == 0.0) {
      std::copy(a, a + width, out.begin() + static_cast<size_t>(o) * width);
    } else {
      const double* b = v.data() + static_cast<size_t>(std::min(lo + 1, rows - 1)) * width;
      for (int c = 0; c < width; ++c) {
        out[static_cast<size_t>(o) * width + c] = (1.0 - w) * a[c] + w * b[c];
      }
    }
  }
  return out;
}

}  // namespace

EmbeddingTable sincos_2d(const PatchGrid& grid, int width) {
  if (width % 4 != 0 || width < 4) {
    throw std::invalid_argument("sincos_2d: width must be divisible by 4");
  }
  EmbeddingTable table;
  table.grid = grid;
  table.width = width;
  table.family = EmbeddingFamily::kSincos2D;
  table.values.resize(static_cast<size_t>(grid.n()) * width);

  const int half = width / 2;
  const int pairs = width / 4;
  for (int i = 1; i <= grid.n(); ++i) {
    auto [iy, ix] = grid.coords(i);
    double* row = table.values.data() + static_cast<size_t>(i - 1) * width;
    for (int t = 0; t < pairs; ++t) {
      double freq = std::pow(10000.0, -4.0 * t / width);
      row[2 * t] = std::sin((iy - 1) * freq);
      row[2 * t + 1] = std::cos((iy - 1) * freq);
      row[half + 2 * t] = std::sin((ix - 1) * freq);
      row[half + 2 * t + 1] = std::cos((ix - 1) * freq);
    }
  }
  return table;
}

EmbeddingTable factorized_init(const PatchGrid& grid, int width, uint64_t seed) {
  if (width < 1) throw std::invalid_argument("factorized_init: width must be positive");
  EmbeddingTable table;
  table.grid = grid;
  table.width = width;
  table.family = EmbeddingFamily::kFactorized;

  GaussianSource rng(seed, 0.02);
  table.axis_y = rng.draw(static_cast<size_t>(grid.n_y) * width);
  table.axis_x = rng.draw(static_cast<size_t>(grid.n_x) * width);

  table.values.resize(static_cast<size_t>(grid.n()) * width);
  for (int i = 1; i <= grid.n(); ++i) {
    auto [iy, ix] = grid.coords(i);
    double* row = table.values.data() + static_cast<size_t>(i - 1) * width;
    const double* y = table.axis_y.data() + static_cast<size_t>(iy - 1) * width;
    const double* x = table.axis_x.data() + static_cast<size_t>(ix - 1) * width;
    for (int c = 0; c < width; ++c) row[c] = y[c] + x[c];
  }
  return table;
}

namespace {

std::vector<double> fourier_evaluate(const FourierParams& p, const PatchGrid& grid) {
  const int f = p.feature_count;
  std::vector<double> values(static_cast<size_t>(grid.n()) * p.width);
  std::vector<double> feat(2 * f), hid(p.hidden);
  for (int i = 1; i <= grid.n(); ++i) {
    auto [iy, ix] = grid.coords(i);
    double cy = static_cast<double>(iy) / grid.n_y;
    double cx = static_cast<double>(ix) / grid.n_x;
    for (int k = 0; k < f; ++k) {
      double theta = 2.0 * std::numbers::pi *
                     (p.frequencies[2 * k] * cy + p.frequencies[2 * k + 1] * cx);
      feat[k] = std::sin(theta);
      feat[f + k] = std::cos(theta);
    }
    for (int h = 0; h < p.hidden; ++h) {
      double acc = p.b1[h];
      for (int k = 0; k < 2 * f; ++k) acc += feat[k] * p.w1[static_cast<size_t>(k) * p.hidden + h];
      hid[h] = gelu(acc);
    }
    double* row = values.data() + static_cast<size_t>(i - 1) * p.width;
    for (int c = 0; c < p.width; ++c) {
      double acc = p.b2[c];
      for (int h = 0; h < p.hidden; ++h) acc += hid[h] * p.w2[static_cast<size_t>(h) * p.width + c];
      row[c] = acc;
    }
  }
  return values;
}

}  // namespace

EmbeddingTable fourier_embed(const PatchGrid& grid, int width, int hidden,
                             uint64_t seed, double sigma) {
  if (width < 1 || hidden < 1) {
    throw std::invalid_argument("fourier_embed: width and hidden must be positive");
  }
  FourierParams p;
  p.feature_count = (hidden + 1) / 2;
  p.hidden = hidden;
  p.width = width;
  p.sigma = sigma;

  GaussianSource freq_rng(seed, sigma);
  p.frequencies = freq_rng.draw(static_cast<size_t>(p.feature_count) * 2);
  GaussianSource mlp_rng(seed ^ 0x9e3779b97f4a7c15ull, 0.02);
  p.w1 = mlp_rng.draw(static_cast<size_t>(2 * p.feature_count) * hidden);
  p.b1.assign(hidden, 0.0);
  p.w2 = mlp_rng.draw(static_cast<size_t>(hidden) * width);
  p.b2.assign(width, 0.0);

  EmbeddingTable table;
  table.grid = grid;
  table.width = width;
  table.family = EmbeddingFamily::kFourier;
  table.values = fourier_evaluate(p, grid);
  table.fourier = std::move(p);
  return table;
}

EmbeddingTable fourier_reevaluate(const EmbeddingTable& table, const PatchGrid& new_grid) {
  if (table.family != EmbeddingFamily::kFourier || !table.fourier) {
    throw std::invalid_argument("fourier_reevaluate: table is not a Fourier embedding");
  }
  EmbeddingTable out;
  out.grid = new_grid;
  out.width = table.width;
  out.family = EmbeddingFamily::kFourier;
  out.fourier = table.fourier;
  out.values = fourier_evaluate(*out.fourier, new_grid);
  return out;
}

EmbeddingTable learned_1d_init(const PatchGrid& grid, int width, uint64_t seed) {
  if (width < 1) throw std::invalid_argument("learned_1d_init: width must be positive");
  EmbeddingTable table;
  table.grid = grid;
  table.width = width;
  table.family = EmbeddingFamily::kLearned1D;
  GaussianSource rng(seed, 0.02);
  table.values = rng.draw(static_cast<size_t>(grid.n()) * width);
  return table;
}

EmbeddingTable resize_bilinear(const EmbeddingTable& table, const PatchGrid& new_grid) {
  if (table.family != EmbeddingFamily::kLearned1D &&
      table.family != EmbeddingFamily::kSincos2D) {
    throw std::invalid_argument("resize_bilinear: table family does not reshape to a 2D map");
  }
  const PatchGrid& g = table.grid;
  const int w = table.width;
  EmbeddingTable out;
  out.grid = new_grid;
  out.width = w;
  out.family = table.family;
  out.values.resize(static_cast<size_t>(new_grid.n()) * w);

  for (int oy = 0; oy < new_grid.n_y; ++oy) {
    double py = sample_pos(oy, g.n_y, new_grid.n_y);
    int y0 = static_cast<int>(py);
    int y1 = std::min(y0 + 1, g.n_y - 1);
    double wy = py - y0;
    for (int ox = 0; ox < new_grid.n_x; ++ox) {
      double px = sample_pos(ox, g.n_x, new_grid.n_x);
      int x0 = static_cast<int>(px);
      int x1 = std::min(x0 + 1, g.n_x - 1);
      double wx = px - x0;

      double* dst = out.values.data() +
                    (static_cast<size_t>(oy) * new_grid.n_x + ox) * w;
      auto src = [&](int y, int x) {
        return table.values.data() + (static_cast<size_t>(y) * g.n_x + x) * w;
      };
      if (wy == 0.0 && wx == 0.0) {
        std::copy(src(y0, x0), src(y0, x0) + w, dst);
        continue;
      }
      const double *v00 = src(y0, x0), *v01 = src(y0, x1);
      const double *v10 = src(y1, x0), *v11 = src(y1, x1);
      for (int c = 0; c < w; ++c) {
        dst[c] = (1.0 - wy) * ((1.0 - wx) * v00[c] + wx * v01[c]) +
                 wy * ((1.0 - wx) * v10[c] + wx * v11[c]);
      }
    }
  }
  return out;
}

EmbeddingTable resize_factorized(const EmbeddingTable& table, const PatchGrid& new_grid) {
  if (table.family != EmbeddingFamily::kFactorized || table.axis_y.empty()) {
    throw std::invalid_argument("resize_factorized: table is not factorized with axis tables");
  }
  EmbeddingTable out;
  out.grid = new_grid;
  out.width = table.width;
  out.family = EmbeddingFamily::kFactorized;
  out.axis_y = interp_rows(table.axis_y, table.grid.n_y, table.width, new_grid.n_y);
  out.axis_x = interp_rows(table.axis_x, table.grid.n_x, table.width, new_grid.n_x);

  out.values.resize(static_cast<size_t>(new_grid.n()) * table.width);
  for (int i = 1; i <= new_grid.n(); ++i) {
    auto [iy, ix] = new_grid.coords(i);
    double* row = out.values.data() + static_cast<size_t>(i - 1) * table.width;
    const double* y = out.axis_y.data() + static_cast<size_t>(iy - 1) * table.width;
    const double* x = out.axis_x.data() + static_cast<size_t>(ix - 1) * table.width;
    for (int c = 0; c < table.width; ++c) row[c] = y[c] + x[c];
  }
  return out;
}

}  // namespace lookhere
