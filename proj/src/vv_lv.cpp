#include "ovv/vv_lv.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ovv/math/quadrature.hpp"
#include "ovv/math/special.hpp"

namespace ovv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sum of term(i) over i in [first, k_n], where valid(i) gates
// each term; the partial sum is rescaled by full_count / valid_count so that
// dropped terms do not bias the total.
template <typename Valid, typename Term>
double rescaled_sum(int first, int k_n, const Valid& valid, const Term& term, bool* any = nullptr) {
    const int full_count = k_n - first + 1;
    if (full_count <= 0) return 0.0;
    double sum = 0.0;
    int n_valid = 0;
    for (int i = first; i <= k_n; ++i) {
        if (!valid(i)) continue;
        sum += term(i);
        ++n_valid;
    }
    if (any) *any = n_valid > 0;
    if (n_valid == 0) return 0.0;
    return sum * (static_cast<double>(full_count) / n_valid);
}

}  // namespace

void IncrementSeries::check(bool need_x) const {
    if (!(delta_n > 0.0)) throw std::invalid_argument("IncrementSeries: delta_n must be > 0");
    if (!missing.empty() && missing.size() != v_increments.size()) {
        throw std::invalid_argument("IncrementSeries: missing mask length mismatch");
    }
    if (need_x && x_increments.size() != v_increments.size()) {
        throw std::invalid_argument("IncrementSeries: x/v increment length mismatch");
    }
}

double truncate(double x, double upsilon) { return std::abs(x) <= upsilon ? x : 0.0; }

double truncation_threshold(const std::vector<std::vector<double>>& abs_increments_by_day,
                            double delta_n) {
    if (abs_increments_by_day.size() != 4) {
        throw std::invalid_argument("truncation_threshold: needs the current and 3 prior days");
    }
    if (!(delta_n > 0.0)) throw std::invalid_argument("truncation_threshold: delta_n must be > 0");
    const std::size_t k_n = abs_increments_by_day.front().size();
    if (k_n < 2) throw std::invalid_argument("truncation_threshold: needs at least 2 increments");
    double sum = 0.0;
    for (const auto& day : abs_increments_by_day) {
        for (std::size_t i = 1; i < day.size(); ++i) sum += day[i] * day[i - 1];
    }
    const double scaled = std::numbers::pi / 8.0 * sum / ((k_n - 1) * delta_n);
    return 3.0 * std::pow(scaled, 0.49);
}

double vv_estimate(const IncrementSeries& series, double upsilon) {
    series.check(false);
    const int k_n = static_cast<int>(series.size());
    if (k_n < 2) throw std::invalid_argument("vv_estimate: needs k_n >= 2");
    const auto d = [&](int i) { return truncate(series.v_increments[i - 1], upsilon); };
    const auto q_valid = [&](int i) { return series.present(i - 1) && series.present(i - 2); };
    const auto q = [&](int i) { return d(i) * d(i) + 2.0 * d(i - 1) * d(i); };
    return rescaled_sum(2, k_n, q_valid, q) / (k_n * series.delta_n);
}

double lv_estimate(const IncrementSeries& series, double upsilon) {
    series.check(true);
    const int k_n = static_cast<int>(series.size());
    if (k_n < 1) throw std::invalid_argument("lv_estimate: needs k_n >= 1");
    const auto valid = [&](int i) { return series.present(i - 1); };
    const auto term = [&](int i) {
        return truncate(series.x_increments[i - 1], upsilon) *
               truncate(series.v_increments[i - 1], upsilon);
    };
    return rescaled_sum(1, k_n, valid, term) / (k_n * series.delta_n);
}

double vv_avar(const IncrementSeries& series, double upsilon, double floor_eps, bool* floored) {
    series.check(false);
    const int k_n = static_cast<int>(series.size());
    if (k_n < 2) throw std::invalid_argument("vv_avar: needs k_n >= 2");
    const auto d = [&](int i) { return truncate(series.v_increments[i - 1], upsilon); };
    const auto q_valid = [&](int i) { return series.present(i - 1) && series.present(i - 2); };
    const auto q = [&](int i) { return d(i) * d(i) + 2.0 * d(i - 1) * d(i); };

    const double sum_sq = rescaled_sum(2, k_n, q_valid, [&](int i) { return q(i) * q(i); });
    const double lag1 = rescaled_sum(
        3, k_n, [&](int i) { return q_valid(i) && q_valid(i - 1); },
        [&](int i) { return q(i - 1) * q(i); });
    const double lag2 = rescaled_sum(
        4, k_n, [&](int i) { return q_valid(i) && q_valid(i - 2); },
        [&](int i) { return q(i - 2) * q(i); });

    const double norm = k_n * series.delta_n * series.delta_n;
    const double avar0 = (sum_sq - lag2) / norm;
    const double avar1 = (lag1 - lag2) / norm;
    double avar = avar0 + 2.0 * avar1;
    if (floored) *floored = false;
    if (avar < 0.0) {
        avar = floor_eps;
        if (floored) *floored = true;
    }
    return avar;
}

double lv_avar(const IncrementSeries& series, double upsilon, double floor_eps, bool* floored) {
    series.check(true);
    const int k_n = static_cast<int>(series.size());
    if (k_n < 1) throw std::invalid_argument("lv_avar: needs k_n >= 1");
    const auto dv = [&](int i) { return truncate(series.v_increments[i - 1], upsilon); };
    const auto dx = [&](int i) { return truncate(series.x_increments[i - 1], upsilon); };
    const auto valid = [&](int i) { return series.present(i - 1); };

    const double sum_sq = rescaled_sum(1, k_n, valid, [&](int i) {
        const double t = dv(i) * dx(i);
        return t * t;
    });
    const double lag2 = rescaled_sum(
        3, k_n, [&](int i) { return valid(i) && valid(i - 2); },
        [&](int i) { return dv(i) * dx(i) * dv(i - 2) * dx(i - 2); });

    double avar = (sum_sq - lag2) / (k_n * series.delta_n * series.delta_n);
    if (floored) *floored = false;
    if (avar < 0.0) {
        avar = floor_eps;
        if (floored) *floored = true;
    }
    return avar;
}

Interval confidence_interval(double estimate, double avar, int k_n, double level) {
    if (k_n <= 0) throw std::invalid_argument("confidence_interval: k_n must be > 0");
    if (!(level >= 0.0 && level < 1.0)) {
        throw std::invalid_argument("confidence_interval: level must lie in [0,1)");
    }
    if (avar < 0.0) throw std::invalid_argument("confidence_interval: avar must be >= 0");
    if (level == 0.0) return {estimate, estimate};
    const double half = norm_quantile(0.5 * (1.0 + level)) * std::sqrt(avar / k_n);
    return {estimate - half, estimate + half};
}

namespace {

VVLVResult make_result(const IncrementSeries& series, double upsilon, double level, bool is_vv) {
    VVLVResult res;
    res.k_n = static_cast<int>(series.size());
    res.upsilon = upsilon;
    res.level = level;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series.present(i)) {
            ++res.missing_count;
        } else if (std::abs(series.v_increments[i]) > upsilon) {
            ++res.truncated_count;
        }
    }
    res.estimate = is_vv ? vv_estimate(series, upsilon) : lv_estimate(series, upsilon);
    res.avar = is_vv ? vv_avar(series, upsilon, 1e-12, &res.avar_floored)
                     : lv_avar(series, upsilon, 1e-12, &res.avar_floored);
    const Interval ci = confidence_interval(res.estimate, res.avar, res.k_n, level);
    res.ci_low = ci.low;
    res.ci_high = ci.high;
    res.valid = std::isfinite(res.estimate) && std::isfinite(res.avar);
    return res;
}

}  // namespace

VVLVResult vv_result(const IncrementSeries& series, double upsilon, double level) {
    return make_result(series, upsilon, level, true);
}

VVLVResult lv_result(const IncrementSeries& series, double upsilon, double level) {
    return make_result(series, upsilon, level, false);
}

double phi_tilde(double k) {
    const double a = std::abs(k);
    return norm_pdf(a) + a * norm_cdf(-a);
}

namespace {

// Noise-variance scale v_{t,tau}(u) of the option observation error in the
// transformed spot-variance estimate.
double noise_scale(const TheoreticalAVarInputs& in) {
    const double sigma = std::sqrt(in.sigma2);
    const double deriv = transform_deriv(in.sigma2, in.transform);
    const auto integrand = [&](double k) {
        const double c = std::cos(in.u * sigma * k);
        const double pt = phi_tilde(k);
        return c * c * pt * pt;
    };
    const double integral = 2.0 * integrate_to_inf(integrand, 0.0, 1.0, 1e-8);
    return 4.0 * std::exp(in.u * in.u * in.sigma2) * deriv * deriv * sigma * sigma * sigma *
           in.rho0 * in.zeta0 * in.zeta0 * integral;
}

}  // namespace

double theoretical_avar(const TheoreticalAVarInputs& in, AVarKind which, TenorMode mode) {
    if (!(in.phi >= 0.0 && in.phi <= 1.0)) {
        throw std::invalid_argument("theoretical_avar: phi must lie in [0,1]");
    }
    if (!(in.sigma2 > 0.0)) throw std::invalid_argument("theoretical_avar: sigma2 must be > 0");
    double v;
    if (mode == TenorMode::Single) {
        v = noise_scale(in);
    } else {
        if (!(in.tau > 1.0)) throw std::invalid_argument("theoretical_avar: tau must exceed 1");
        const double v1 = noise_scale(in);
        const double ratio = in.tau / (in.tau - 1.0);
        const double inv = 1.0 / (in.tau - 1.0);
        v = ratio * ratio * v1 + inv * inv * v1;  // rho/zeta shared across tenors
    }
    const double phi = in.phi;
    if (which == AVarKind::VV) {
        return 6.0 * in.vv * in.vv * phi * phi + 8.0 * in.vv * v * phi * (1.0 - phi) +
               40.0 * v * v * (1.0 - phi) * (1.0 - phi);
    }
    return (in.vv * in.sigma2 + in.lv * in.lv) * phi + 2.0 * in.sigma2 * v * (1.0 - phi);
}

std::complex<double> return_cf(const std::vector<double>& returns, double u, double delta_fine) {
    if (returns.empty()) throw std::invalid_argument("return_cf: empty return block");
    if (!(delta_fine > 0.0)) throw std::invalid_argument("return_cf: delta_fine must be > 0");
    const double scale = u / std::sqrt(delta_fine);
    std::complex<double> sum(0.0, 0.0);
    for (double r : returns) sum += std::exp(std::complex<double>(0.0, scale * r));
    return sum / static_cast<double>(returns.size());
}

double return_spot_variance(const std::vector<double>& returns, double u, double delta_fine) {
    if (!(u > 0.0)) throw std::invalid_argument("return_spot_variance: u must be > 0");
    const double mod = std::abs(return_cf(returns, u, delta_fine));
    if (!std::isfinite(mod) || mod <= 0.0 || mod >= 1.0) return kNaN;
    return -2.0 / (u * u) * std::log(mod);
}

double vv_ret_estimate(const std::vector<double>& v_increments, int k_n, double delta_n,
                       double upsilon) {
    if (static_cast<int>(v_increments.size()) != k_n - 1) {
        throw std::invalid_argument("vv_ret_estimate: expected k_n - 1 increments");
    }
    const auto d = [&](int i) {
        const double x = v_increments[i - 1];
        return std::isfinite(x) ? truncate(x, upsilon) : 0.0;
    };
    double sum = 0.0;
    for (int i = 2; i <= k_n - 1; ++i) sum += d(i) * d(i) + 2.0 * d(i - 1) * d(i);
    return sum / (k_n * delta_n);
}

double lv_ret_estimate(const std::vector<double>& two_step_x_increments,
                       const std::vector<double>& v_increments, int k_n, double delta_n,
                       double upsilon) {
    if (static_cast<int>(v_increments.size()) < k_n - 2 ||
        static_cast<int>(two_step_x_increments.size()) < k_n - 2) {
        throw std::invalid_argument("lv_ret_estimate: expected k_n - 2 increments");
    }
    double sum = 0.0;
    for (int i = 1; i <= k_n - 2; ++i) {
        const double dv = v_increments[i - 1];
        if (!std::isfinite(dv)) continue;
        sum += truncate(two_step_x_increments[i - 1], upsilon) * truncate(dv, upsilon);
    }
    return sum / (k_n * delta_n);
}

RvBv rv_bv(const std::vector<double>& returns, double delta_fine) {
    if (returns.empty()) throw std::invalid_argument("rv_bv: empty return window");
    if (!(delta_fine > 0.0)) throw std::invalid_argument("rv_bv: delta_fine must be > 0");
    const double window = returns.size() * delta_fine;
    RvBv out;
    for (double r : returns) out.rv += r * r;
    for (std::size_t j = 1; j < returns.size(); ++j) {
        out.bv += std::abs(returns[j]) * std::abs(returns[j - 1]);
    }
    out.rv /= window;
    out.bv *= std::numbers::pi / 2.0 / window;
    return out;
}

double select_u_ret(const RvBv& bipower) {
    const double floor_var = std::min(bipower.rv, bipower.bv);
    if (!(floor_var > 0.0)) throw std::invalid_argument("select_u_ret: RV and BV must be > 0");
    return std::sqrt(-2.0 * std::log(0.3) / floor_var);
}

}  // namespace ovv
