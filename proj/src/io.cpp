#include "lookhere/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lookhere {

namespace {

static_assert(std::endian::native == std::endian::little,
              "LHBF writer assumes a little-endian host");

constexpr char kMagic[4] = {'L', 'H', 'B', 'F'};
constexpr uint8_t kVersion = 1;

void put_u16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32_block(std::ostream& out, const std::vector<double>& values) {
  std::vector<float> buf(values.size());
  for (size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<double> read_f32_block(std::istream& in, size_t count) {
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error("LHBF: truncated payload");
  return {buf.begin(), buf.end()};
}

struct Header {
  uint8_t kind = 0;
  uint32_t l = 0, h = 0, t = 0, n_y = 0, n_x = 0;
};

Header read_header(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("LHBF: bad magic in " + path);
  }
  uint16_t tag = get_u16(in);
  if ((tag & 0xff) != kVersion) {
    throw std::runtime_error("LHBF: unsupported version in " + path);
  }
  Header hd;
  hd.kind = static_cast<uint8_t>(tag >> 8);
  hd.l = get_u32(in);
  hd.h = get_u32(in);
  hd.t = get_u32(in);
  hd.n_y = get_u32(in);
  hd.n_x = get_u32(in);
  if (!in) throw std::runtime_error("LHBF: truncated header in " + path);
  return hd;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

void write_lhbf(const std::string& path, const BiasField& field) {
  auto out = open_out(path);
  out.write(kMagic, 4);
  put_u16(out, kVersion);  // kind 0 in the high byte
  put_u32(out, static_cast<uint32_t>(field.depth));
  put_u32(out, static_cast<uint32_t>(field.heads));
  put_u32(out, static_cast<uint32_t>(field.tokens()));
  put_u32(out, static_cast<uint32_t>(field.grid.n_y));
  put_u32(out, static_cast<uint32_t>(field.grid.n_x));
  write_f32_block(out, field.values);
  if (!out) throw std::runtime_error("LHBF: write failed: " + path);
}

BiasField load_lhbf_bias(const std::string& path) {
  auto in = open_in(path);
  Header hd = read_header(in, path);
  if (hd.kind != 0) throw std::runtime_error("LHBF: not a bias payload: " + path);
  PatchGrid grid = make_grid(static_cast<int>(hd.n_y), static_cast<int>(hd.n_x));
  if (hd.t != static_cast<uint32_t>(grid.tokens())) {
    throw std::runtime_error("LHBF: token count inconsistent with grid: " + path);
  }
  BiasField field;
  field.depth = static_cast<int>(hd.l);
  field.heads = static_cast<int>(hd.h);
  field.grid = grid;
  field.values = read_f32_block(
      in, static_cast<size_t>(hd.l) * hd.h * hd.t * hd.t);
  for (double v : field.values) {
    if (v < 0.0) {
      field.allow_negative = true;
      break;
    }
  }
  return field;
}

void write_lhbf(const std::string& path, const EmbeddingTable& table) {
  auto out = open_out(path);
  out.write(kMagic, 4);
  uint16_t kind = static_cast<uint16_t>(static_cast<int>(table.family) + 1);
  put_u16(out, static_cast<uint16_t>(kVersion | (kind << 8)));
  put_u32(out, static_cast<uint32_t>(table.width));  // L slot carries the width
  put_u32(out, 1);
  put_u32(out, static_cast<uint32_t>(table.grid.n()));
  put_u32(out, static_cast<uint32_t>(table.grid.n_y));
  put_u32(out, static_cast<uint32_t>(table.grid.n_x));
  write_f32_block(out, table.values);
  if (!out) throw std::runtime_error("LHBF: write failed: " + path);
}

EmbeddingTable load_lhbf_embedding(const std::string& path) {
  auto in = open_in(path);
  Header hd = read_header(in, path);
  if (hd.kind < 1 || hd.kind > 4) {
    throw std::runtime_error("LHBF: not an embedding payload: " + path);
  }
  PatchGrid grid = make_grid(static_cast<int>(hd.n_y), static_cast<int>(hd.n_x));
  if (hd.t != static_cast<uint32_t>(grid.n())) {
    throw std::runtime_error("LHBF: row count inconsistent with grid: " + path);
  }
  EmbeddingTable table;
  table.grid = grid;
  table.width = static_cast<int>(hd.l);
  table.family = static_cast<EmbeddingFamily>(hd.kind - 1);
  table.values = read_f32_block(in, static_cast<size_t>(hd.t) * hd.l);
  return table;
}

int lhbf_payload_kind(const std::string& path) {
  auto in = open_in(path);
  return read_header(in, path).kind;
}

std::vector<std::string> write_bias_csv(const std::string& prefix,
                                        const BiasField& field) {
  std::vector<std::string> paths;
  const int t = field.tokens();
  for (int l = 0; l < field.depth; ++l) {
    for (int h = 0; h < field.heads; ++h) {
      std::string path = prefix + "_l" + std::to_string(l + 1) + "_h" +
                         std::to_string(h + 1) + ".csv";
      std::ofstream out(path, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open for writing: " + path);
      out.precision(17);
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
          double v = field.at(l, h, i, j);
          if (j) out << ',';
          if (std::isinf(v)) {
            out << "inf";
          } else {
            out << v;
          }
        }
        out << '\n';
      }
      paths.push_back(std::move(path));
    }
  }
  return paths;
}

void write_pgm(const std::string& path, int width, int height,
               const std::vector<double>& values) {
  if (values.size() != static_cast<size_t>(width) * height) {
    throw std::invalid_argument("write_pgm: size mismatch");
  }
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("write_pgm: values must be finite (map masks first)");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto out = open_out(path);
  out << "P5\n" << width << " " << height << "\n255\n";
  for (double v : values) {
    int pix = hi > lo ? static_cast<int>(255.0 * (v - lo) / (hi - lo) + 0.5) : 128;
    out.put(static_cast<char>(std::clamp(pix, 0, 255)));
  }
  if (!out) throw std::runtime_error("PGM: write failed: " + path);
}

}  // namespace lookhere
