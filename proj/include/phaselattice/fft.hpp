#pragma once

#include <complex>
#include <vector>

namespace phaselattice {

/// Unnormalised DFT, X_k = sum_j x_j exp(sign 2 pi i j k / n), sign = -1 forward.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

/// Row-major 2-D transform of a rows x cols array.
void fft2_inplace(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse = false);

/// Transforms each of `count` contiguous sequences of length n.
void fft_batch(std::vector<std::complex<double>>& data, int n, int count, bool inverse = false);

}  // namespace phaselattice
