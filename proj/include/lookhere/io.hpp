#pragma once

#include <string>
#include <vector>

#include "lookhere/bias_field.hpp"
#include "lookhere/pos_embed.hpp"

namespace lookhere {

/// LHBF container layout (all multi-byte fields little-endian):
///   bytes 0..3   magic "LHBF"
///   bytes 4..5   u16 tag: low byte = format version (1),
///                high byte = payload kind (0 bias field, 1..4 embedding
///                table: learned_1d, sincos_2d, factorized, fourier)
///   then u32 L, H, T, n_y, n_x
///   bias payload:      L*H*T*T f32, row-major, T = n+1, +inf where masked
///   embedding payload: T*L f32 with T = n rows and L = embedding width,
///                      H = 1
/// Values are stored as f32; loading a field written from doubles rounds
/// once and round-trips bit-exactly afterwards.

void write_lhbf(const std::string& path, const BiasField& field);
BiasField load_lhbf_bias(const std::string& path);

void write_lhbf(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_lhbf_embedding(const std::string& path);

/// Peek at the payload kind byte (0 = bias, >0 = embedding).
int lhbf_payload_kind(const std::string& path);

/// One CSV file per (layer, head) named <prefix>_l<L>_h<H>.csv, T rows of
/// T comma-separated values with "inf" for masked entries.
std::vector<std::string> write_bias_csv(const std::string& prefix, const BiasField& field);

/// 8-bit binary PGM (P5). Values are min-max normalized per panel unless
/// the range is degenerate, in which case the panel is mid-gray.
void write_pgm(const std::string& path, int width, int height,
               const std::vector<double>& values);

}  // namespace lookhere
