#include "homsim/mle.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace homsim {

MomentChi2::MomentChi2(const MomentSet& moments, const MLEOptions& opt) {
    if (opt.cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    if (!(opt.sigma_floor > 0.0)) throw std::invalid_argument("sigma floor must be positive");
    dim_ = (opt.cutoff + 1) * (opt.cutoff + 1);
    for (const auto& [idx, e] : moments.entries()) {
        if (idx.order() == 0 || idx.order() > opt.max_order || idx.order() > 2 * opt.cutoff) continue;
        ops_.push_back(moment_operator(opt.cutoff, idx));
        data_.push_back(e.value);
        const double s = std::max(e.stderr_value, opt.sigma_floor);
        weights_.push_back(1.0 / (s * s));
    }
    if (ops_.empty()) throw std::invalid_argument("no moments within the fitted orders");
}

Eigen::MatrixXcd MomentChi2::unpack(const std::vector<double>& x) const {
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(dim_, dim_);
    std::size_t p = 0;
    for (int c = 0; c < dim_; ++c)
        for (int r = c; r < dim_; ++r, p += 2) t(r, c) = cplx(x[p], x[p + 1]);
    return t;
}

std::vector<double> MomentChi2::pack(const Eigen::MatrixXcd& t) const {
    std::vector<double> x;
    for (int c = 0; c < dim_; ++c)
        for (int r = c; r < dim_; ++r) {
            x.push_back(t(r, c).real());
            x.push_back(t(r, c).imag());
        }
    return x;
}

double MomentChi2::value(const std::vector<double>& x, std::vector<double>* grad) const {
    const Eigen::MatrixXcd t = unpack(x);
    const Eigen::MatrixXcd a = t.adjoint() * t;
    const double tr = a.trace().real();
    if (!(tr > 0.0)) throw std::runtime_error("degenerate parametrization (zero trace)");
    const Eigen::MatrixXcd rho = a / tr;
    double chi2 = 0.0;
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (std::size_t i = 0; i < ops_.size(); ++i) {
        const cplx r = (rho.cwiseProduct(ops_[i].transpose())).sum() - data_[i];  // tr(ρ M) - m
        chi2 += weights_[i] * std::norm(r);
        if (grad) d += weights_[i] * std::conj(r) * ops_[i];
    }
    if (grad) {
        // dχ² = 2 Re tr(dA E), E = D/t - tr(A D)/t² I, A = T†T.
        const cplx tad = (a * d).trace();
        Eigen::MatrixXcd e = d / tr;
        e.diagonal().array() -= tad / (tr * tr);
        const Eigen::MatrixXcd g = 2.0 * t * (e + e.adjoint());
        grad->assign(x.size(), 0.0);
        std::size_t p = 0;
        for (int c = 0; c < dim_; ++c)
            for (int r = c; r < dim_; ++r, p += 2) {
                (*grad)[p] = g(r, c).real();
                (*grad)[p + 1] = g(r, c).imag();
            }
    }
    return chi2;
}

double MomentChi2::numerical_gradient(const std::vector<double>& x, std::vector<double>& grad, double h) const {
    grad.assign(x.size(), 0.0);
    std::vector<double> y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] + h;
        const double fp = value(y, nullptr);
        y[i] = x[i] - h;
        const double fm = value(y, nullptr);
        y[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return value(x, nullptr);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

MLEResult mle_fit(const MomentSet& moments, const MLEOptions& opt) {
    const MomentChi2 f(moments, opt);
    auto eval = [&](const std::vector<double>& x, std::vector<double>& g) {
        return opt.numerical_gradient ? f.numerical_gradient(x, g) : f.value(x, &g);
    };

    std::vector<double> x = f.pack(Eigen::MatrixXcd::Identity(f.dim(), f.dim()));
    std::vector<double> g;
    double fx = eval(x, g);
    MLEResult res;
    res.chi2_history.push_back(fx);

    // L-BFGS with Armijo backtracking.
    constexpr std::size_t kMemory = 12;
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    const std::size_t n = x.size();
    std::vector<double> dir(n), xn(n), gn;
    int stalls = 0;
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (fx == 0.0) {
            res.converged = true;
            break;
        }
        // Two-loop recursion.
        dir = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (auto& v : dir) v *= gamma;
        } else {
            const double gn2 = std::sqrt(dot(g, g));
            for (auto& v : dir) v *= 1.0 / std::max(gn2, 1e-300);
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * dot(y_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += s_hist[k][i] * (alpha[k] - beta);
        }
        for (auto& v : dir) v = -v;
        double slope = dot(g, dir);
        if (!(slope < 0.0)) {  // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            const double gn2 = std::sqrt(dot(g, g));
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i] / std::max(gn2, 1e-300);
            slope = dot(g, dir);
        }
        double step = 1.0, fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * dir[i];
            fn = eval(xn, gn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No decrease possible along the gradient at double precision.
            res.converged = s_hist.empty();
            if (!res.converged) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            break;
        }
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-300) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        const double change = (fx - fn) / std::max(fx, 1e-300);
        x.swap(xn);
        g.swap(gn);
        fx = fn;
        res.chi2_history.push_back(fx);
        // Require a few consecutive tiny changes so one short step does not stop the fit.
        stalls = change < opt.relative_tolerance ? stalls + 1 : 0;
        if (stalls >= 3) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    const Eigen::MatrixXcd t = f.unpack(x);
    Eigen::MatrixXcd rho = t.adjoint() * t;
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    res.rho = DensityMatrix::from_matrix(opt.cutoff, rho);
    res.chi_squared = fx;
    return res;
}

}  // namespace homsim
