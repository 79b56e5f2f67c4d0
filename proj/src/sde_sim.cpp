#include "ovv/sde_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "ovv/math/rng.hpp"
#include "ovv/math/special.hpp"

namespace ovv {

void ModelParams::validate() const {
    const double fields[] = {theta_v, kappa_v, sigma_v, rho, lambda_minus,
                             lambda_plus, c_minus, c_plus, x0};
    for (double f : fields) {
        if (!std::isfinite(f)) throw std::invalid_argument("ModelParams: non-finite parameter");
    }
    if (!(theta_v > 0.0)) throw std::invalid_argument("ModelParams: theta_v must be > 0");
    if (!(kappa_v > 0.0)) throw std::invalid_argument("ModelParams: kappa_v must be > 0");
    if (sigma_v < 0.0) throw std::invalid_argument("ModelParams: sigma_v must be >= 0");
    if (std::abs(rho) > 1.0) throw std::invalid_argument("ModelParams: |rho| must be <= 1");
    if (!(lambda_minus > 1.0)) {
        throw std::invalid_argument("ModelParams: lambda_minus must exceed 1 (e^x-integrability)");
    }
    if (!(lambda_plus > 0.0)) throw std::invalid_argument("ModelParams: lambda_plus must be > 0");
    if (c_minus < 0.0 || c_plus < 0.0) throw std::invalid_argument("ModelParams: c_minus and c_plus must be >= 0");
    if (!(x0 > 0.0)) throw std::invalid_argument("ModelParams: x0 must be > 0");
}

PricePath simulate_path(const ModelParams& params, double v0, double horizon,
                        std::int64_t n_steps, int substeps_per_step, std::uint64_t seed) {
    params.validate();
    if (!(v0 > 0.0) || !std::isfinite(v0)) {
        throw std::invalid_argument("simulate_path: v0 must be positive and finite");
    }
    if (n_steps <= 0 || substeps_per_step <= 0) {
        throw std::invalid_argument("simulate_path: step counts must be positive");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("simulate_path: horizon must be positive and finite");
    }

    const double dt = horizon / static_cast<double>(n_steps) / substeps_per_step;
    const double sqrt_dt = std::sqrt(dt);
    const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);

    Rng rng(seed);
    PricePath path;
    path.times.resize(n_steps + 1);
    path.log_price.resize(n_steps + 1);
    path.variance.resize(n_steps + 1);

    double x = std::log(params.x0);
    double v = v0;
    path.times[0] = 0.0;
    path.log_price[0] = x;
    path.variance[0] = v;

    for (std::int64_t step = 0; step < n_steps; ++step) {
        for (int sub = 0; sub < substeps_per_step; ++sub) {
            // Full truncation: v may go negative between steps, but only v+
            // enters the drift and diffusion.
            const double v_plus = std::max(v, 0.0);
            const double vol = std::sqrt(v_plus);
            const double zb = rng.normal();
            const double zw_perp = rng.normal();
            const double zw = params.rho * zb + rho_bar * zw_perp;
            x += -0.5 * v_plus * dt + vol * sqrt_dt * zw;
            v += params.kappa_v * (params.theta_v - v_plus) * dt +
                 params.sigma_v * vol * sqrt_dt * zb;
        }
        path.times[step + 1] = (step + 1) * (horizon / static_cast<double>(n_steps));
        path.log_price[step + 1] = x;
        path.variance[step + 1] = std::max(v, 0.0);
    }
    return path;
}

double stationary_variance_quantile(const ModelParams& params, double p) {
    params.validate();
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("stationary_variance_quantile: p must lie in (0,1)");
    }
    if (params.sigma_v == 0.0) return params.theta_v;
    const double shape = 2.0 * params.kappa_v * params.theta_v / (params.sigma_v * params.sigma_v);
    const double scale = params.sigma_v * params.sigma_v / (2.0 * params.kappa_v);
    return scale * gamma_quantile(shape, p);
}

}  // namespace ovv
