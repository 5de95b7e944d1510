#include "sblab/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace sblab {

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("FftPlan: size must be a power of two");
  bitrev_.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    bitrev_[i] = r;
  }
  twiddle_.resize(n / 2);
  const double step = -2.0 * M_PI / static_cast<double>(n);
  for (std::size_t j = 0; j < n / 2; ++j)
    twiddle_[j] = std::polar(1.0, step * static_cast<double>(j));
}

void FftPlan::transform(std::complex<double>* a, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i)
    if (bitrev_[i] > i) std::swap(a[i], a[bitrev_[i]]);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = n_ / len;
    for (std::size_t i = 0; i < n_; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<double> w = twiddle_[j * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

void FftPlan::forward(std::complex<double>* data) const { transform(data, false); }

void FftPlan::inverse(std::complex<double>* data) const {
  transform(data, true);
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) data[i] *= inv;
}

}  // namespace sblab
