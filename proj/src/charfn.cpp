#include "ovv/charfn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ovv {

Transform transform_from_string(const std::string& name) {
    if (name == "identity") return Transform::Identity;
    if (name == "sqrt") return Transform::Sqrt;
    if (name == "log") return Transform::Log;
    if (name == "logsqrt" || name == "log-sqrt") return Transform::LogSqrt;
    throw std::invalid_argument("unknown transform: " + name);
}

const char* transform_name(Transform transform) {
    switch (transform) {
        case Transform::Identity: return "identity";
        case Transform::Sqrt: return "sqrt";
        case Transform::Log: return "log";
        case Transform::LogSqrt: return "logsqrt";
    }
    return "?";
}

double apply_transform(double sigma2, Transform transform) {
    switch (transform) {
        case Transform::Identity: return sigma2;
        case Transform::Sqrt: return std::sqrt(sigma2);
        case Transform::Log: return std::log(sigma2);
        case Transform::LogSqrt: return 0.5 * std::log(sigma2);
    }
    return sigma2;
}

double transform_deriv(double sigma2, Transform transform) {
    switch (transform) {
        case Transform::Identity: return 1.0;
        case Transform::Sqrt: return 0.5 / std::sqrt(sigma2);
        case Transform::Log: return 1.0 / sigma2;
        case Transform::LogSqrt: return 0.5 / sigma2;
    }
    return 1.0;
}

CFEstimate estimate_cf(const TenorQuotes& quotes, double spot, double u) {
    if (quotes.strikes.size() < 3) {
        throw std::invalid_argument("estimate_cf: need at least 3 quotes");
    }
    if (!(spot > 0.0) || !(quotes.tenor > 0.0)) {
        throw std::invalid_argument("estimate_cf: spot and tenor must be > 0");
    }
    const double x = std::log(spot);
    const double sqrt_tenor = std::sqrt(quotes.tenor);
    const cd slope(-1.0, u / sqrt_tenor);  // iu/sqrt(T) - 1
    cd sum(0.0, 0.0);
    for (std::size_t j = 1; j < quotes.strikes.size(); ++j) {
        const double k_prev = std::log(quotes.strikes[j - 1]);
        const double gap = std::log(quotes.strikes[j]) - k_prev;
        sum += std::exp(slope * (k_prev - x)) * quotes.prices[j - 1] * gap;
    }
    const cd prefactor(u * u / quotes.tenor, u / sqrt_tenor);
    CFEstimate cf;
    cf.u = u;
    cf.tenor = quotes.tenor;
    cf.value = 1.0 - prefactor * std::exp(-x) * sum;
    const double mod = std::abs(cf.value);
    cf.modulus_in_unit_interval = std::isfinite(mod) && mod > 0.0 && mod < 1.0;
    return cf;
}

SpotVolEstimate spot_variance(const CFEstimate& cf, double u, Transform transform) {
    if (!(u > 0.0)) throw std::invalid_argument("spot_variance: u must be > 0");
    SpotVolEstimate est;
    est.tenor = cf.tenor;
    est.u = u;
    est.transform = transform;
    const double mod = std::abs(cf.value);
    if (!std::isfinite(mod) || mod <= 0.0 || mod >= 1.0) {
        est.valid = false;
        return est;
    }
    est.sigma2 = -2.0 / (u * u) * std::log(mod);
    est.transformed = apply_transform(est.sigma2, transform);
    est.valid = std::isfinite(est.transformed) && est.sigma2 > 0.0;
    return est;
}

double two_tenor_combine(double v_short, double v_long, double tenor_short, double tenor_long) {
    if (!(tenor_long > tenor_short) || !(tenor_short > 0.0)) {
        throw std::invalid_argument("two_tenor_combine: requires T' > T > 0");
    }
    return (tenor_long * v_short - tenor_short * v_long) / (tenor_long - tenor_short);
}

// |L(u)| on the uniform grid u = step, 2 step, ..., count * step. The phases
// e^{i g step m_j} are built multiplicatively across g, one complex exp per
// quote for the whole scan.
std::vector<double> cf_modulus_scan(const TenorQuotes& quotes, double spot, double step,
                                    int count) {
    if (quotes.strikes.size() < 3) {
        throw std::invalid_argument("cf_modulus_scan: need at least 3 quotes");
    }
    const double x = std::log(spot);
    const double sqrt_tenor = std::sqrt(quotes.tenor);
    const std::size_t n = quotes.strikes.size() - 1;
    std::vector<double> base_re(n), moneyness(n);
    std::vector<cd> phase(n), rotor(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double k_prev = std::log(quotes.strikes[j]);
        const double gap = std::log(quotes.strikes[j + 1]) - k_prev;
        moneyness[j] = k_prev - x;
        base_re[j] = std::exp(-moneyness[j]) * quotes.prices[j] * gap;
        phase[j] = cd(1.0, 0.0);
        rotor[j] = std::exp(cd(0.0, step / sqrt_tenor * moneyness[j]));
    }
    std::vector<double> mods(count);
    const double inv_spot = std::exp(-x);
    for (int g = 1; g <= count; ++g) {
        const double u = g * step;
        cd sum(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            phase[j] *= rotor[j];
            sum += phase[j] * base_re[j];
        }
        const cd value = 1.0 - cd(u * u / quotes.tenor, u / sqrt_tenor) * inv_spot * sum;
        mods[g - 1] = std::abs(value);
    }
    return mods;
}

USelection select_u(const TenorQuotes& quotes, double spot, double atm_iv) {
    if (!(atm_iv > 0.0)) throw std::invalid_argument("select_u: atm_iv must be > 0");
    constexpr double threshold = 0.3;
    constexpr int grid_points = 1000;
    USelection sel;
    sel.u_bar = std::sqrt(-2.0 * std::log(0.05)) / atm_iv;
    const double step = sel.u_bar / grid_points;

    const std::vector<double> mods = cf_modulus_scan(quotes, spot, step, grid_points);
    double argmin_u = step;
    double argmin_mod = mods[0];
    double prev_mod = 1.0;  // |L(0)| = 1 exactly
    double crossing = 0.0;
    for (int g = 1; g <= grid_points; ++g) {
        const double u = g * step;
        const double mod = mods[g - 1];
        if (mod < argmin_mod) {
            argmin_mod = mod;
            argmin_u = u;
        }
        if (!sel.crossed && mod <= threshold) {
            const double u_prev = (g - 1) * step;
            crossing = (prev_mod > mod)
                           ? u_prev + (prev_mod - threshold) / (prev_mod - mod) * step
                           : u;
            sel.crossed = true;
        }
        prev_mod = mod;
    }
    sel.u = sel.crossed ? std::min(crossing, argmin_u) : argmin_u;
    return sel;
}

}  // namespace ovv
