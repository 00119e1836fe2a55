#pragma once

#include <cstdint>

namespace qmc::detail {

// Joe-Kuo initialisation data for Sobol dimensions 2..kSobolMaxDimension.
// Dimension 1 is the van der Corput recurrence and has no table entry.
inline constexpr int kSobolTableDims = 2047;
inline constexpr int kSobolMaxDimension = kSobolTableDims + 1;
inline constexpr int kSobolMinitCount = 26522;

extern const std::uint32_t kSobolPoly[kSobolTableDims];
extern const std::uint32_t kSobolMinitOffset[kSobolTableDims + 1];
extern const std::uint16_t kSobolMinit[kSobolMinitCount];

}  // namespace qmc::detail
