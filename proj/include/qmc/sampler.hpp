#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "qmc/errors.hpp"

namespace qmc {

enum class SamplerKind { iid_uniform, sobol };

// Raw Sobol index 0 is the origin, which the normal ICDF maps to -inf, so
// generation starts at index 1 unless the caller overrides it.
inline constexpr std::uint64_t kDefaultSobolStart = 1;

struct SamplerSpec {
  SamplerKind kind = SamplerKind::sobol;
  int dimension = 1;
  std::uint64_t seed = 0;
  bool scrambled = true;  // sobol only; ignored for iid_uniform
};

// N x d points in the open unit cube. Rows are reproducible from
// (spec, start_index) alone.
struct UnitPointSet {
  Eigen::MatrixXd points;
  SamplerSpec spec;
  std::uint64_t start_index = 0;

  Eigen::Index n() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

// Largest dimension the embedded Joe-Kuo direction-number table supports.
int sobol_max_dimension();

// Points start_index .. start_index+n-1 of the (optionally scrambled) Sobol
// sequence in Gray-code order. Coordinates are 32-bit lattice values mapped
// to cell centres, (x + 0.5) * 2^-32, so every coordinate lies in (0,1).
// Scrambling is a seeded random linear matrix scramble of the base-2 digits
// followed by a random digital XOR shift; it preserves the net structure of
// the sequence and the expectation of any integral estimate.
UnitPointSet sobol_points(const SamplerSpec& spec, std::uint64_t start_index, std::int64_t n);

// n IID uniform points. The generator is std::mt19937_64 (bit-exact across
// platforms); each coordinate consumes one draw x and maps it to
// ((x >> 11) + 0.5) * 2^-53, filling rows left to right.
UnitPointSet uniform_points(const SamplerSpec& spec, std::int64_t n);

}  // namespace qmc
