#pragma once

// Maximum-likelihood (weighted least-squares) density matrix from moments,
// with ρ = T†T / tr(T†T) and T lower triangular.

#include "homsim/fockspace.hpp"
#include "homsim/moments.hpp"

#include <vector>

namespace homsim {

struct MLEOptions {
    int cutoff = 2;
    int max_order = 4;         ///< moments of higher total order are ignored
    double sigma_floor = 1e-6;
    int max_iterations = 10000;
    double relative_tolerance = 1e-10;
    bool numerical_gradient = false;  ///< central differences instead of the analytic gradient
};

struct MLEResult {
    DensityMatrix rho;
    double chi_squared = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> chi2_history;  ///< after each accepted step, starting with the initial point
};

MLEResult mle_fit(const MomentSet& moments, const MLEOptions& opt = {});

/// χ² and its gradient with respect to (Re, Im) of the lower-triangular
/// entries of T, packed column-major. Exposed for testing.
class MomentChi2 {
public:
    MomentChi2(const MomentSet& moments, const MLEOptions& opt);
    int dim() const { return dim_; }
    int parameters() const { return dim_ * (dim_ + 1); }
    double value(const std::vector<double>& x, std::vector<double>* grad) const;
    double numerical_gradient(const std::vector<double>& x, std::vector<double>& grad, double h = 1e-6) const;
    Eigen::MatrixXcd unpack(const std::vector<double>& x) const;
    std::vector<double> pack(const Eigen::MatrixXcd& t) const;
    std::size_t terms() const { return ops_.size(); }

private:
    int dim_;
    std::vector<Eigen::MatrixXcd> ops_;
    std::vector<cplx> data_;
    std::vector<double> weights_;
};

}  // namespace homsim
