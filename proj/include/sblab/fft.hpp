#ifndef SBLAB_FFT_HPP
#define SBLAB_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace sblab {

// Radix-2 complex FFT with precomputed twiddles. Sizes must be powers of two.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  // In-place forward transform: X_k = sum_j x_j exp(-2*pi*i*jk/n).
  void forward(std::complex<double>* data) const;
  // In-place inverse transform including the 1/n factor.
  void inverse(std::complex<double>* data) const;

 private:
  void transform(std::complex<double>* data, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2*pi*i*j/n), j < n/2
};

}  // namespace sblab

#endif
