#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace pace::dsp {

std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 FFT. data.size() must be a power of two.
void fft(std::vector<std::complex<double>>& data);

// Periodic Hann window of length n.
std::vector<double> hann(std::size_t n);

}  // namespace pace::dsp
