#ifndef NORMSOL_FFT_HPP
#define NORMSOL_FFT_HPP

// Thin RAII layer over FFTW: aligned buffers and a process-wide plan cache.
// Plans are created once per (transform, rank, size) under a mutex and then
// executed with the new-array interface, which FFTW guarantees thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstring>
#include <map>
#include <mutex>
#include <new>
#include <tuple>
#include <vector>

namespace normsol::fft {

template <typename T> class Buffer {
public:
  explicit Buffer(std::size_t n) : size_(n) {
    data_ = static_cast<T *>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)));
    if (data_ == nullptr)
      throw std::bad_alloc();
  }
  Buffer(const Buffer &) = delete;
  Buffer &operator=(const Buffer &) = delete;
  Buffer(Buffer &&other) noexcept : data_(other.data_), size_(other.size_) {
    other.data_ = nullptr;
    other.size_ = 0;
  }
  ~Buffer() {
    if (data_ != nullptr)
      fftw_free(data_);
  }

  T *data() noexcept { return data_; }
  const T *data() const noexcept { return data_; }
  std::size_t size() const noexcept { return size_; }
  T &operator[](std::size_t i) noexcept { return data_[i]; }
  const T &operator[](std::size_t i) const noexcept { return data_[i]; }

private:
  T *data_ = nullptr;
  std::size_t size_ = 0;
};

enum class Transform { r2c, c2r, dst1 };

inline std::size_t real_size(int rank, int m) {
  std::size_t n = 1;
  for (int d = 0; d < rank; ++d)
    n *= static_cast<std::size_t>(m);
  return n;
}

/// Number of complex coefficients of an r2c transform (last axis halved).
inline std::size_t complex_size(int rank, int m) {
  return real_size(rank - 1, m) * static_cast<std::size_t>(m / 2 + 1);
}

namespace detail {

inline std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_plan make_plan(Transform kind, int rank, int m) {
  std::vector<int> dims(static_cast<std::size_t>(rank), m);
  const std::size_t nr = real_size(rank, m);
  const std::size_t nc = complex_size(rank, m);
  Buffer<double> r(nr);
  Buffer<fftw_complex> c(nc);
  switch (kind) {
  case Transform::r2c:
    return fftw_plan_dft_r2c(rank, dims.data(), r.data(), c.data(), FFTW_ESTIMATE);
  case Transform::c2r:
    return fftw_plan_dft_c2r(rank, dims.data(), c.data(), r.data(), FFTW_ESTIMATE);
  case Transform::dst1: {
    Buffer<double> r2(nr);
    std::vector<fftw_r2r_kind> kinds(static_cast<std::size_t>(rank), FFTW_RODFT00);
    return fftw_plan_r2r(rank, dims.data(), r.data(), r2.data(), kinds.data(), FFTW_ESTIMATE);
  }
  }
  return nullptr;
}

inline fftw_plan plan(Transform kind, int rank, int m) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  const auto key = std::make_tuple(static_cast<int>(kind), rank, m);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  fftw_plan p = make_plan(kind, rank, m);
  cache.emplace(key, p);
  return p;
}

} // namespace detail

/// Unnormalized forward real-to-complex transform of an m^rank array.
inline void forward(int rank, int m, const double *in, Buffer<fftw_complex> &out) {
  Buffer<double> scratch(real_size(rank, m));
  std::memcpy(scratch.data(), in, sizeof(double) * scratch.size());
  fftw_execute_dft_r2c(detail::plan(Transform::r2c, rank, m), scratch.data(), out.data());
}

/// Unnormalized inverse transform; the caller divides by m^rank.
inline void backward(int rank, int m, const Buffer<fftw_complex> &in, double *out) {
  Buffer<fftw_complex> scratch(complex_size(rank, m));
  std::memcpy(scratch.data(), in.data(), sizeof(fftw_complex) * scratch.size());
  Buffer<double> result(real_size(rank, m));
  fftw_execute_dft_c2r(detail::plan(Transform::c2r, rank, m), scratch.data(), result.data());
  std::memcpy(out, result.data(), sizeof(double) * result.size());
}

/// Unnormalized DST-I (RODFT00) along every axis. Applying it twice scales by
/// (2(m+1))^rank.
inline void dst1(int rank, int m, const double *in, double *out) {
  const std::size_t n = real_size(rank, m);
  Buffer<double> a(n);
  Buffer<double> b(n);
  std::memcpy(a.data(), in, sizeof(double) * n);
  fftw_execute_r2r(detail::plan(Transform::dst1, rank, m), a.data(), b.data());
  std::memcpy(out, b.data(), sizeof(double) * n);
}

} // namespace normsol::fft

#endif
