#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ovv/math/rng.hpp"
#include "ovv/math/special.hpp"
#include "ovv/vv_lv.hpp"

using namespace ovv;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

IncrementSeries series_of(std::vector<double> dv, std::vector<double> dx, double delta_n) {
    IncrementSeries s;
    s.delta_n = delta_n;
    s.v_increments = std::move(dv);
    s.x_increments = std::move(dx);
    return s;
}

}  // namespace

TEST_CASE("truncation function") {
    CHECK(truncate(0.5, 1.0) == 0.5);
    CHECK(truncate(2.0, 1.0) == 0.0);
    CHECK(truncate(-3.0, kInf) == -3.0);
}

TEST_CASE("empirical truncation threshold") {
    const int k_n = 80;
    const double c = 0.01, delta_n = 1.0 / (252 * 80);
    std::vector<std::vector<double>> days(4, std::vector<double>(k_n, c));
    const double expected =
        3.0 * std::pow(std::numbers::pi / 8.0 * 4.0 * (k_n - 1) * c * c / ((k_n - 1) * delta_n), 0.49);
    CHECK(truncation_threshold(days, delta_n) == doctest::Approx(expected).epsilon(1e-12));

    std::vector<std::vector<double>> zeros(4, std::vector<double>(k_n, 0.0));
    CHECK(truncation_threshold(zeros, delta_n) == 0.0);
    CHECK_THROWS_AS(truncation_threshold({{1.0}, {1.0}}, delta_n), std::invalid_argument);
}

TEST_CASE("threshold clears diffusive increments by a wide margin") {
    // Gaussian transformed-variance increments at the simulator's scale
    const double vv = 9.56, delta_n = 1.0 / (252 * 80);
    const int k_n = 80;
    Rng rng(2024);
    std::vector<std::vector<double>> days(4, std::vector<double>(k_n));
    double max_abs = 0.0;
    for (auto& day : days) {
        for (double& d : day) {
            d = std::abs(std::sqrt(vv * delta_n) * rng.normal());
            max_abs = std::max(max_abs, d);
        }
    }
    const double upsilon = truncation_threshold(days, delta_n);
    const double q999 = norm_quantile(0.9995) * std::sqrt(vv * delta_n);
    CHECK(upsilon > q999);
    CHECK(upsilon > max_abs);
}

TEST_CASE("vv estimator arithmetic") {
    const auto s = series_of({1.0, 1.0, 1.0}, {}, 1.0);
    CHECK(vv_estimate(s, kInf) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(vv_estimate(series_of({1.0}, {}, 1.0), kInf), std::invalid_argument);
}

TEST_CASE("lv estimator arithmetic") {
    const auto s = series_of({2.0, 3.0}, {1.0, -1.0}, 1.0);
    CHECK(lv_estimate(s, kInf) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("noise-bias cancellation of the q statistic") {
    // V-hat is pure iid noise: E[q] = 2v - 2v = 0
    Rng rng(31);
    const int k_n = 80, reps = 1500;
    const double noise_sd = 0.01, delta_n = 1.0 / (252 * 80);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> eps(k_n + 1);
        for (double& e : eps) e = noise_sd * rng.normal();
        IncrementSeries s;
        s.delta_n = delta_n;
        for (int i = 1; i <= k_n; ++i) s.v_increments.push_back(eps[i - 1] - eps[i]);
        const double est = vv_estimate(s, kInf);
        sum += est;
        sum_sq += est * est;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("lv estimator centered at zero when price and noise are independent") {
    Rng rng(32);
    const int k_n = 80, reps = 1500;
    const double delta_n = 1.0 / (252 * 80);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        IncrementSeries s;
        s.delta_n = delta_n;
        for (int i = 0; i < k_n; ++i) {
            s.v_increments.push_back(0.01 * rng.normal());
            s.x_increments.push_back(0.001 * rng.normal());
        }
        const double est = lv_estimate(s, kInf);
        sum += est;
        sum_sq += est * est;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("feasible avar identities on constant sequences") {
    const int k_n = 10;
    const double c = 0.7, delta_n = 0.5;
    const auto s = series_of(std::vector<double>(k_n, c), std::vector<double>(k_n, 0.3), delta_n);
    const double q = 3.0 * c * c;
    // AVar^0 = ((k-1) - (k-3)) q^2 / (k dn^2), AVar^1 = ((k-2) - (k-3)) q^2 / (k dn^2)
    const double avar0 = 2.0 * q * q / (k_n * delta_n * delta_n);
    const double avar1 = q * q / (k_n * delta_n * delta_n);
    CHECK(vv_avar(s, kInf) == doctest::Approx(avar0 + 2.0 * avar1).epsilon(1e-12));

    // LV: (k v^2 c^2 - (k-2) v^2 c^2) / (k dn^2) with v = dv, c = dx
    const double lv_expected = 2.0 * (c * 0.3) * (c * 0.3) / (k_n * delta_n * delta_n);
    CHECK(lv_avar(s, kInf) == doctest::Approx(lv_expected).epsilon(1e-12));

    const auto zeros = series_of(std::vector<double>(k_n, 0.0), std::vector<double>(k_n, 0.0), 1.0);
    CHECK(vv_avar(zeros, kInf) == 0.0);
    CHECK(lv_avar(zeros, kInf) == 0.0);
    CHECK(vv_estimate(zeros, kInf) == 0.0);
}

TEST_CASE("negative feasible avar clamps to epsilon with a flag") {
    // crafted so that 2 lag1 dominates negatively
    const auto s = series_of({1.0, -1.0, 1.0, -1.0, 1.0, -1.0}, {}, 1.0);
    bool floored = false;
    const double avar = vv_avar(s, kInf, 1e-12, &floored);
    if (floored) {
        CHECK(avar == 1e-12);
    } else {
        CHECK(avar >= 0.0);
    }
}

TEST_CASE("confidence interval arithmetic") {
    const Interval ci = confidence_interval(2.0, 4.0, 100, 0.95);
    CHECK(ci.low == doctest::Approx(2.0 - 1.959963984540054 * 0.2).epsilon(1e-12));
    CHECK(ci.high == doctest::Approx(2.0 + 1.959963984540054 * 0.2).epsilon(1e-12));
    const Interval point = confidence_interval(2.0, 4.0, 100, 0.0);
    CHECK(point.low == 2.0);
    CHECK(point.high == 2.0);
    CHECK_THROWS_AS(confidence_interval(1.0, 1.0, 0, 0.95), std::invalid_argument);
    CHECK_THROWS_AS(confidence_interval(1.0, -1.0, 10, 0.95), std::invalid_argument);
}

TEST_CASE("scale equivariance and truncation monotonicity") {
    Rng rng(91);
    IncrementSeries s;
    s.delta_n = 1.0 / (252 * 80);
    for (int i = 0; i < 60; ++i) {
        s.v_increments.push_back(0.02 * rng.normal());
        s.x_increments.push_back(0.003 * rng.normal());
    }
    const double c = 2.7;
    IncrementSeries scaled = s;
    for (double& d : scaled.v_increments) d *= c;

    const double upsilon = 0.03;
    CHECK(vv_estimate(scaled, c * upsilon) ==
          doctest::Approx(c * c * vv_estimate(s, upsilon)).epsilon(1e-12));
    CHECK(lv_estimate(scaled, c * upsilon) ==
          doctest::Approx(c * lv_estimate(s, upsilon)).epsilon(1e-12));

    double max_abs = 0.0;
    for (double d : s.v_increments) max_abs = std::max(max_abs, std::abs(d));
    for (double d : s.x_increments) max_abs = std::max(max_abs, std::abs(d));
    CHECK(vv_estimate(s, kInf) == vv_estimate(s, max_abs * 1.0001));
    CHECK(lv_estimate(s, kInf) == lv_estimate(s, max_abs * 1.0001));
    CHECK(vv_avar(s, kInf) == vv_avar(s, max_abs * 1.0001));
}

TEST_CASE("missing increments are excluded pairwise with count rescaling") {
    IncrementSeries s = series_of({1.0, 1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0, 1.0}, 1.0);
    s.missing = {0, 0, 1, 0, 0};
    // q valid only for i in {2, 5}: both equal 3; rescale by (k-1)/2 = 2
    CHECK(vv_estimate(s, kInf) == doctest::Approx(2.0 * (3.0 + 3.0) / 5.0).epsilon(1e-12));
    // LV terms valid for i in {1,2,4,5}: each 1; rescale by 5/4
    CHECK(lv_estimate(s, kInf) == doctest::Approx((4.0 * 5.0 / 4.0) / 5.0).epsilon(1e-12));
    VVLVResult res = vv_result(s, kInf, 0.95);
    CHECK(res.missing_count == 1);
}

TEST_CASE("theoretical avar limits and the density integral oracle") {
    TheoreticalAVarInputs in;
    in.sigma2 = 0.0167;
    in.vv = 9.56;
    in.lv = -0.36;
    in.u = 11.0;
    in.rho0 = 1.0;
    in.zeta0 = 0.015;
    in.tau = 2.0;
    in.transform = Transform::Log;

    in.phi = 1.0;  // no observation noise: only the leading terms survive
    CHECK(theoretical_avar(in, AVarKind::VV, TenorMode::Single) ==
          doctest::Approx(6.0 * in.vv * in.vv).epsilon(1e-12));
    CHECK(theoretical_avar(in, AVarKind::LV, TenorMode::Single) ==
          doctest::Approx(in.vv * in.sigma2 + in.lv * in.lv).epsilon(1e-12));

    // the k-integral against a plain Simpson oracle
    const double sigma = std::sqrt(in.sigma2);
    auto integrand = [&](double k) {
        const double c = std::cos(in.u * sigma * k);
        const double pt = phi_tilde(k);
        return c * c * pt * pt;
    };
    const int n = 40000;
    const double h = 24.0 / n;
    double simpson = integrand(-12.0) + integrand(12.0);
    for (int i = 1; i < n; ++i) simpson += integrand(-12.0 + i * h) * (i % 2 ? 4.0 : 2.0);
    simpson *= h / 3.0;

    in.phi = 0.0;
    const double vv_noise_only = theoretical_avar(in, AVarKind::VV, TenorMode::Single);
    const double deriv = transform_deriv(in.sigma2, in.transform);
    const double v1 = 4.0 * std::exp(in.u * in.u * in.sigma2) * deriv * deriv * sigma * sigma *
                      sigma * in.rho0 * in.zeta0 * in.zeta0 * simpson;
    CHECK(vv_noise_only == doctest::Approx(40.0 * v1 * v1).epsilon(1e-6));

    // u = 0 removes the cosine: the integral is the plain PhiTilde^2 mass
    TheoreticalAVarInputs flat = in;
    flat.u = 1e-12;
    double mass = phi_tilde(-12.0) * phi_tilde(-12.0) + phi_tilde(12.0) * phi_tilde(12.0);
    for (int i = 1; i < n; ++i) {
        const double k = -12.0 + i * h;
        mass += phi_tilde(k) * phi_tilde(k) * (i % 2 ? 4.0 : 2.0);
    }
    mass *= h / 3.0;
    const double v1_flat = 4.0 * deriv * deriv * sigma * sigma * sigma * in.zeta0 * in.zeta0 * mass;
    CHECK(theoretical_avar(flat, AVarKind::VV, TenorMode::Single) ==
          doctest::Approx(40.0 * v1_flat * v1_flat).epsilon(1e-5));

    // two-tenor inflation with shared rho/zeta: v2 = 5 v1 at tau = 2
    in.phi = 0.0;
    CHECK(theoretical_avar(in, AVarKind::VV, TenorMode::Double) ==
          doctest::Approx(25.0 * vv_noise_only).epsilon(1e-9));
}

TEST_CASE("return-based pieces") {
    CHECK(std::abs(return_cf({0.01, -0.02, 0.005}, 0.0, 1e-4) - std::complex<double>(1, 0)) <
          1e-15);

    // LLN: constant-vol Gaussian returns recover the variance
    Rng rng(444);
    const double var = 0.02, delta_fine = 1.0 / (252 * 80 * 72);
    std::vector<double> returns(100000);
    for (double& r : returns) r = std::sqrt(var * delta_fine) * rng.normal();
    const double sigma2 = return_spot_variance(returns, 1.0, delta_fine);
    CHECK(sigma2 == doctest::Approx(var).epsilon(0.01));

    const RvBv bp = rv_bv(returns, delta_fine);
    CHECK(bp.rv == doctest::Approx(var).epsilon(0.02));
    CHECK(bp.bv == doctest::Approx(var).epsilon(0.02));

    // constant |returns|: RV = r^2 n / window, BV = (pi/2) r^2 (n-1) / window
    const std::vector<double> flat(10, 0.001);
    const RvBv cb = rv_bv(flat, 0.1);
    CHECK(cb.rv == doctest::Approx(0.001 * 0.001 * 10 / 1.0).epsilon(1e-12));
    CHECK(cb.bv == doctest::Approx(std::numbers::pi / 2.0 * 0.001 * 0.001 * 9 / 1.0).epsilon(1e-12));

    RvBv pick;
    pick.rv = 0.02;
    pick.bv = 0.05;
    CHECK(select_u_ret(pick) == doctest::Approx(std::sqrt(-2.0 * std::log(0.3) / 0.02)).epsilon(1e-12));
    CHECK(select_u_ret(pick) == doctest::Approx(10.9726).epsilon(1e-4));

    // arithmetic of the return-based estimators
    const std::vector<double> dv = {1.0, 1.0, 1.0};  // k_n = 4: i = 1..3
    CHECK(vv_ret_estimate(dv, 4, 1.0, kInf) == doctest::Approx((3.0 + 3.0) / 4.0));
    const std::vector<double> two_step = {1.0, -1.0};
    const std::vector<double> dv2 = {2.0, 3.0};
    CHECK(lv_ret_estimate(two_step, dv2, 4, 1.0, kInf) == doctest::Approx((2.0 - 3.0) / 4.0));
}

TEST_CASE("ci width shrinks like the square root of the window size") {
    Rng rng(777);
    const double vv_true = 9.56, delta_n = 1.0 / (252 * 80);
    const int reps = 1200;
    double median_width[2];
    for (int which = 0; which < 2; ++which) {
        const int k_n = which == 0 ? 80 : 160;
        std::vector<double> widths(reps);
        for (int r = 0; r < reps; ++r) {
            IncrementSeries s;
            s.delta_n = delta_n;
            for (int i = 0; i < k_n; ++i)
                s.v_increments.push_back(std::sqrt(vv_true * delta_n) * rng.normal());
            const VVLVResult res = vv_result(s, kInf, 0.95);
            widths[r] = res.ci_high - res.ci_low;
        }
        std::sort(widths.begin(), widths.end());
        median_width[which] = widths[reps / 2];
    }
    const double ratio = median_width[1] / median_width[0];
    CHECK(ratio > 0.8 / std::numbers::sqrt2);
    CHECK(ratio < 1.2 / std::numbers::sqrt2);
}
