#pragma once

#include <string>

#include "qmc/frechet.hpp"
#include "qmc/inception.hpp"

namespace qmc {

// FMAT: "FMAT" magic, u32 version (=1), u64 rows, u64 cols, u8 dtype
// (0 = f32, 1 = f64), then the row-major little-endian payload.
// GSTA: "GSTA" magic, u32 version (=1), u64 dim, mean (dim f64),
// covariance (dim^2 f64, row-major), u64 n_source.
//
// Paths ending in .csv read/write comma-separated text with an optional
// header line; everything else is FMAT. f32 payloads are promoted to f64
// on load; saving in the stored dtype and loading back is bit-exact.

enum class FmatDtype : std::uint8_t { f32 = 0, f64 = 1 };

FeatureMatrix load_features(const std::string& path);
void save_features(const std::string& path, const Eigen::MatrixXd& data,
                   FmatDtype dtype = FmatDtype::f64);

PosteriorMatrix load_posteriors(const std::string& path);

GaussianStats load_stats(const std::string& path);
void save_stats(const std::string& path, const GaussianStats& stats);

}  // namespace qmc
