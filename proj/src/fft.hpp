#pragma once

#include "effdyn/grid.hpp"

namespace effdyn::detail {

enum class FftDirection { forward, backward };

/// Unnormalized in-place multidimensional DFT over the grid layout.
void fft_inplace(const GridSpec& g, Eigen::VectorXcd& data, FftDirection dir);

} // namespace effdyn::detail
