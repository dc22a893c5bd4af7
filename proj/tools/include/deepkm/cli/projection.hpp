#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "deepkm/common.hpp"

namespace deepkm::cli {

struct Projection2D {
  Matrix coords;              // N x 2
  Eigen::Vector2d variances;  // explained variance per component (N - 1 divisor)
  Matrix components;          // l x 2, unit columns
};

/// Top two principal components of the rows of `latents`. Each component is
/// oriented so that its largest-magnitude loading is positive. Inputs with
/// fewer than two columns give a zero second coordinate.
Projection2D project_2d(const Matrix& latents);

/// Rows "x  y  pred [truth]" with a header line.
std::string projection_tsv(const Projection2D& projection, std::span<const int> predicted,
                           std::optional<std::span<const int>> truth);

}  // namespace deepkm::cli
