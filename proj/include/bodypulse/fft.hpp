#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bodypulse {

// Smallest power of two >= n (n = 0 maps to 1).
std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 FFT. data.size() must be a power of two.
// inverse = true computes the unscaled inverse; callers divide by N.
void fft_inplace(std::span<std::complex<double>> data, bool inverse = false);

// DFT of any length: radix-2 directly, otherwise Bluestein's chirp-z
// algorithm on a power-of-two convolution.
void dft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

// Zero-pads x to nfft (a power of two >= x.size()) and transforms.
std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t nfft);

}  // namespace bodypulse
