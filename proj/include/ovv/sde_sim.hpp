#pragma once

#include <cstdint>
#include <vector>

namespace ovv {

// Affine stochastic-volatility model with variance-proportional
// double-exponential price jumps. Under the pricing measure:
//
//   dX/X = sqrt(V) dW + d(jumps),   dV = kappa_v (theta_v - V) dt + sigma_v sqrt(V) dB,
//   corr(dW, dB) = rho,  jump measure V_t (c- e^{-lm|x|} 1{x<0} + c+ e^{-lp x} 1{x>0}) dx.
//
// Under the statistical measure the same diffusion runs without jumps.
struct ModelParams {
    double theta_v = 0.02;      // long-run variance (annualized)
    double kappa_v = 7.90;      // mean-reversion speed (1/year)
    double sigma_v = 0.40;      // vol-of-variance coefficient
    double rho = -0.9;          // diffusive price/variance correlation
    double lambda_minus = 50.0; // negative jump tail decay
    double lambda_plus = 100.0; // positive jump tail decay
    double c_minus = 0.9 * 50.0 * 50.0 * 50.0 / 2.0;  // jump density scales chosen so
    double c_plus = 0.1 * 100.0 * 100.0 * 100.0 / 2.0; // jump variation = diffusive variance
    double x0 = 2500.0;         // initial spot level

    void validate() const;      // throws std::invalid_argument on bad values
    bool feller_holds() const { return sigma_v * sigma_v <= 2.0 * kappa_v * theta_v; }

    // Named calibrations: slow / medium / fast variance mean reversion.
    static ModelParams case_s() { return with_variance(0.02, 1.39, 0.15); }
    static ModelParams case_m() { return with_variance(0.02, 7.90, 0.40); }
    static ModelParams case_f() { return with_variance(0.02, 17.50, 0.70); }

private:
    static ModelParams with_variance(double theta, double kappa, double sigv) {
        ModelParams p;
        p.theta_v = theta;
        p.kappa_v = kappa;
        p.sigma_v = sigv;
        return p;
    }
};

struct PricePath {
    std::vector<double> times;      // strictly increasing, constant spacing
    std::vector<double> log_price;  // x_t at each grid point
    std::vector<double> variance;   // V_t at each grid point, >= 0
};

// Statistical-measure path of (x, V) on n_steps intervals over [0, horizon]
// (n_steps + 1 grid points), internally refined with full-truncation Euler
// substeps. Pure function of (params, seed): bit-identical across runs and
// thread counts.
PricePath simulate_path(const ModelParams& params, double v0, double horizon,
                        std::int64_t n_steps, int substeps_per_step, std::uint64_t seed);

// Quantile of the stationary CIR law Gamma(2 kappa theta / sigma_v^2,
// scale sigma_v^2 / (2 kappa)); degenerates to theta_v when sigma_v = 0.
double stationary_variance_quantile(const ModelParams& params, double p);

}  // namespace ovv
