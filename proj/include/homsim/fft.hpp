#pragma once

// Thin RAII wrapper over FFTW complex transforms. Plans are created with
// FFTW_ESTIMATE so results do not depend on runtime timing measurements.

#include <complex>
#include <cstddef>
#include <vector>

namespace homsim {

class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    Fft(Fft&& other) noexcept;
    Fft& operator=(Fft&&) = delete;

    std::size_t size() const { return n_; }

    /// In-place, unnormalized. `data.size()` must equal size().
    void forward(std::vector<std::complex<double>>& data) const;
    /// In-place, scaled by 1/n so that inverse(forward(x)) == x.
    void inverse(std::vector<std::complex<double>>& data) const;

private:
    std::size_t n_;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace homsim
