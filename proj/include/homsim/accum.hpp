#pragma once

// Fixed-point running sums. Each addend is rounded to a multiple of 2^-40 and
// added as a 128-bit integer, so sums are exactly associative and commutative
// and any partitioning of the input gives bit-identical totals.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace homsim {

class FixedSum {
public:
    static constexpr int kFractionBits = 40;

    void add(double x) { raw_ += quantize(x); }
    void merge(const FixedSum& o) { raw_ += o.raw_; }
    double value() const { return std::ldexp(static_cast<double>(raw_), -kFractionBits); }
    __int128 raw() const { return raw_; }
    bool operator==(const FixedSum&) const = default;

    static __int128 quantize(double x) {
        const double y = std::nearbyint(std::ldexp(x, kFractionBits));
        // Leaves ample headroom for summing many addends of this size.
        if (!std::isfinite(y) || std::abs(y) > 0x1p100) throw std::overflow_error("fixed-point addend out of range");
        return static_cast<__int128>(y);
    }

private:
    __int128 raw_ = 0;
};

struct ComplexFixedSum {
    FixedSum re, im;

    void add(std::complex<double> z) {
        re.add(z.real());
        im.add(z.imag());
    }
    void merge(const ComplexFixedSum& o) {
        re.merge(o.re);
        im.merge(o.im);
    }
    std::complex<double> value() const { return {re.value(), im.value()}; }
    bool operator==(const ComplexFixedSum&) const = default;
};

/// Mean and standard error of the mean over batch estimates.
struct BatchStat {
    double mean = 0.0;
    double error = 0.0;
};

template <class Range>
BatchStat batch_stat(const Range& values) {
    double n = 0.0, s = 0.0;
    for (double v : values) {
        s += v;
        n += 1.0;
    }
    if (n == 0.0) return {};
    const double m = s / n;
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return {m, n > 1.0 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0};
}

}  // namespace homsim
