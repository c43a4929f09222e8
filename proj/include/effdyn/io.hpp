#pragma once

#include "effdyn/density.hpp"
#include "effdyn/grid.hpp"
#include "effdyn/lattice.hpp"

#include <filesystem>
#include <string>

namespace effdyn {

/// Field record: uint32 dimension, uint32 points_per_axis, float64 box_length,
/// then interleaved (re, im) float64 pairs in grid order. Little-endian.
std::string encode_field(const Field& f);
Field decode_field(const std::string& bytes);
void write_field(const Field& f, const std::filesystem::path& path);
Field read_field(const std::filesystem::path& path);

/// State record: uint32 N, uint32 M, uint64 dimension, then (re, im) pairs in
/// colex basis order.
std::string encode_state(const ManyBodyState& s);
ManyBodyState decode_state(const std::string& bytes, std::int64_t cap = default_basis_cap);
void write_state(const ManyBodyState& s, const std::filesystem::path& path);
ManyBodyState read_state(const std::filesystem::path& path, std::int64_t cap = default_basis_cap);

struct ReducedDensityRecord {
  int n_particles = 0;
  double time = 0.0;
  ReducedDensity density;
};

/// First line "# {json metadata}", then a header "row,col,re,im" and one line per entry.
std::string format_reduced_density(const ReducedDensityRecord& record);
ReducedDensityRecord parse_reduced_density(const std::string& text);

} // namespace effdyn
