#pragma once

#include <memory>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

/// In-place square 2-D complex FFT of side n (FFTW underneath). The inverse is
/// normalized so that inverse(forward(x)) == x.
class FFT2 {
 public:
  explicit FFT2(int n);
  ~FFT2();
  FFT2(const FFT2&) = delete;
  FFT2& operator=(const FFT2&) = delete;

  int size() const { return n_; }
  void forward(std::vector<Complex>& data);
  void inverse(std::vector<Complex>& data);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

/// Angular wavenumber of FFT index m on a periodic box of side `side`.
double wavenumber(int m, int n, double side);

}  // namespace qclab
