#include "homsim/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace homsim {

namespace {
// Planner calls are not thread-safe in FFTW; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("FFT size must be positive");
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
    inverse_plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
    if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("FFTW planning failed");
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_), forward_plan_(other.forward_plan_), inverse_plan_(other.inverse_plan_) {
    other.forward_plan_ = nullptr;
    other.inverse_plan_ = nullptr;
}

Fft::~Fft() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft::forward(std::vector<std::complex<double>>& data) const {
    if (data.size() != n_) throw std::invalid_argument("FFT buffer size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), buf, buf);
}

void Fft::inverse(std::vector<std::complex<double>>& data) const {
    if (data.size() != n_) throw std::invalid_argument("FFT buffer size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), buf, buf);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= scale;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace homsim
