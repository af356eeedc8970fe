#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <fftw3.h>

#include "phlim/errors.hpp"

namespace phlim {

/// In-place complex 3D transform on an owned buffer. Sign convention
/// FFTW_BACKWARD (e^{+i 2 pi m j / n}), unnormalized. Plans are created with
/// FFTW_ESTIMATE, which keeps planning deterministic and cheap.
class InPlaceFft3 {
public:
  explicit InPlaceFft3(int n) : n_(n), buf_(static_cast<std::size_t>(n) * n * n) {
    plan_ = fftw_plan_dft_3d(n, n, n, raw(), raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_) throw Error("InPlaceFft3: planner failed");
  }
  ~InPlaceFft3() {
    if (plan_) fftw_destroy_plan(plan_);
  }
  InPlaceFft3(const InPlaceFft3&) = delete;
  InPlaceFft3& operator=(const InPlaceFft3&) = delete;

  int n() const { return n_; }
  std::size_t size() const { return buf_.size(); }
  std::complex<double>* data() { return buf_.data(); }
  const std::complex<double>* data() const { return buf_.data(); }

  void execute() { fftw_execute(plan_); }

private:
  fftw_complex* raw() { return reinterpret_cast<fftw_complex*>(buf_.data()); }

  int n_;
  std::vector<std::complex<double>> buf_;
  fftw_plan plan_ = nullptr;
};

/// In-place complex 2D transform, same conventions as InPlaceFft3.
class InPlaceFft2 {
public:
  explicit InPlaceFft2(int n) : n_(n), buf_(static_cast<std::size_t>(n) * n) {
    plan_ = fftw_plan_dft_2d(n, n, raw(), raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_) throw Error("InPlaceFft2: planner failed");
  }
  ~InPlaceFft2() {
    if (plan_) fftw_destroy_plan(plan_);
  }
  InPlaceFft2(const InPlaceFft2&) = delete;
  InPlaceFft2& operator=(const InPlaceFft2&) = delete;

  int n() const { return n_; }
  std::size_t size() const { return buf_.size(); }
  std::complex<double>* data() { return buf_.data(); }

  void execute() { fftw_execute(plan_); }

private:
  fftw_complex* raw() { return reinterpret_cast<fftw_complex*>(buf_.data()); }

  int n_;
  std::vector<std::complex<double>> buf_;
  fftw_plan plan_ = nullptr;
};

} // namespace phlim
