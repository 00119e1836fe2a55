#include "qmc/sampler.hpp"

#include <bit>
#include <random>
#include <vector>

#include "qmc/rng.hpp"
#include "qmc/sobol_table.hpp"

namespace qmc {

namespace {

constexpr int kBits = 32;
constexpr double kCellCenterScale = 0x1.0p-32;

// Direction integers v_1..v_32 for one dimension, MSB-aligned.
void direction_integers(int dim_index, std::uint32_t v[kBits]) {
  if (dim_index == 0) {
    // van der Corput: m_k = 1 for all k.
    for (int k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
    return;
  }
  const std::uint32_t poly = detail::kSobolPoly[dim_index - 1];
  const int degree = std::bit_width(poly) - 1;
  const std::uint16_t* m = detail::kSobolMinit + detail::kSobolMinitOffset[dim_index - 1];
  for (int k = 0; k < degree && k < kBits; ++k) {
    v[k] = static_cast<std::uint32_t>(m[k]) << (kBits - 1 - k);
  }
  for (int k = degree; k < kBits; ++k) {
    // Bratley-Fox recurrence driven by the polynomial's inner coefficients.
    std::uint32_t value = v[k - degree] ^ (v[k - degree] >> degree);
    for (int j = 1; j < degree; ++j) {
      if ((poly >> (degree - j)) & 1u) value ^= v[k - j];
    }
    v[k] = value;
  }
}

struct Scramble {
  // Column c of the lower-triangular digit matrix, keyed by bit position:
  // column[p] has bit p set and random bits strictly below p.
  std::uint32_t column[kBits];
  std::uint32_t shift;

  std::uint32_t apply(std::uint32_t x) const {
    std::uint32_t y = 0;
    while (x != 0) {
      const int p = std::countr_zero(x);
      y ^= column[p];
      x &= x - 1;
    }
    return y ^ shift;
  }
};

Scramble make_scramble(std::mt19937_64& rng) {
  Scramble s;
  for (int p = kBits - 1; p >= 0; --p) {
    const std::uint32_t mask = p == 0 ? 0u : ((1u << p) - 1u);
    s.column[p] = (1u << p) | (static_cast<std::uint32_t>(rng()) & mask);
  }
  s.shift = static_cast<std::uint32_t>(rng());
  return s;
}

}  // namespace

int sobol_max_dimension() { return detail::kSobolMaxDimension; }

UnitPointSet sobol_points(const SamplerSpec& spec, std::uint64_t start_index, std::int64_t n) {
  if (spec.kind != SamplerKind::sobol) {
    throw ConfigError("sobol_points: spec.kind must be sobol");
  }
  if (spec.dimension < 1) {
    throw ConfigError("sobol_points: dimension must be >= 1");
  }
  if (spec.dimension > detail::kSobolMaxDimension) {
    throw UnsupportedDimensionError(
        "sobol_points: dimension " + std::to_string(spec.dimension) +
        " exceeds the direction-number table (max " +
        std::to_string(detail::kSobolMaxDimension) + ")");
  }
  if (n < 0) throw ConfigError("sobol_points: n must be >= 0");
  if (start_index + static_cast<std::uint64_t>(n) > (1ULL << kBits)) {
    throw ConfigError("sobol_points: start_index + n exceeds the 2^32 point budget");
  }

  const int d = spec.dimension;
  UnitPointSet out;
  out.points.resize(n, d);
  out.spec = spec;
  out.start_index = start_index;
  if (n == 0) return out;

  std::vector<std::uint32_t> dirs(static_cast<std::size_t>(d) * kBits);
  for (int j = 0; j < d; ++j) direction_integers(j, dirs.data() + static_cast<std::size_t>(j) * kBits);

  std::vector<Scramble> scrambles;
  if (spec.scrambled) {
    std::mt19937_64 rng(spec.seed);
    scrambles.reserve(d);
    for (int j = 0; j < d; ++j) scrambles.push_back(make_scramble(rng));
  }

  // State at start_index via the Gray code of the index, then one XOR per
  // point after that.
  std::vector<std::uint32_t> state(d, 0u);
  const std::uint64_t gray = start_index ^ (start_index >> 1);
  for (int b = 0; b < kBits; ++b) {
    if ((gray >> b) & 1ULL) {
      for (int j = 0; j < d; ++j) state[j] ^= dirs[static_cast<std::size_t>(j) * kBits + b];
    }
  }

  std::uint64_t index = start_index;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const std::uint32_t x = spec.scrambled ? scrambles[j].apply(state[j]) : state[j];
      out.points(i, j) = (static_cast<double>(x) + 0.5) * kCellCenterScale;
    }
    const int flip = std::countr_zero(~index);  // lowest zero bit of index
    ++index;
    if (i + 1 < n) {
      for (int j = 0; j < d; ++j) state[j] ^= dirs[static_cast<std::size_t>(j) * kBits + flip];
    }
  }
  return out;
}

UnitPointSet uniform_points(const SamplerSpec& spec, std::int64_t n) {
  if (spec.kind != SamplerKind::iid_uniform) {
    throw ConfigError("uniform_points: spec.kind must be iid_uniform");
  }
  if (spec.dimension < 1) {
    throw ConfigError("uniform_points: dimension must be >= 1");
  }
  if (n < 0) throw ConfigError("uniform_points: n must be >= 0");

  UnitPointSet out;
  out.points.resize(n, spec.dimension);
  out.spec = spec;
  out.start_index = 0;

  std::mt19937_64 rng(spec.seed);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < spec.dimension; ++j) out.points(i, j) = uniform_open01(rng);
  }
  return out;
}

}  // namespace qmc
