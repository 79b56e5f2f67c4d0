#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ovv/affine_pricer.hpp"

namespace ovv {

enum class Transform { Identity, Sqrt, Log, LogSqrt };

Transform transform_from_string(const std::string& name);
const char* transform_name(Transform transform);
double apply_transform(double sigma2, Transform transform);
double transform_deriv(double sigma2, Transform transform);

struct CFEstimate {
    double u = 0.0;       // exponent on the sqrt(T)-normalized scale
    double tenor = 0.0;
    cd value{1.0, 0.0};
    bool modulus_in_unit_interval = true;  // false when |value| is not in (0,1)
};

struct SpotVolEstimate {
    double obs_time = 0.0;
    double tenor = 0.0;
    double u = 0.0;
    double sigma2 = 0.0;       // estimated spot variance
    double transformed = 0.0;  // F(sigma2)
    Transform transform = Transform::Log;
    bool valid = false;
};

// Left-endpoint Riemann sum of the option-spanning integral:
//   L = 1 - (u^2/T + iu/sqrt(T)) e^{-x} sum_j e^{(iu/sqrt(T)-1)(k_{j-1}-x)} O(k_{j-1}) dk_j,
// with x = log spot. Requires >= 3 quotes on strictly increasing strikes.
CFEstimate estimate_cf(const TenorQuotes& quotes, double spot, double u);

// sigma2 = -(2/u^2) log |L|; valid only while |L| lies strictly inside (0,1).
SpotVolEstimate spot_variance(const CFEstimate& cf, double u, Transform transform = Transform::Log);

// Two-tenor bias correction (T' v_short - T v_long) / (T' - T), applied to
// already transformed values.
double two_tenor_combine(double v_short, double v_long, double tenor_short, double tenor_long);

struct USelection {
    double u = 0.0;
    double u_bar = 0.0;
    bool crossed = false;  // |L| reached the 0.3 threshold inside [0, u_bar]
};

// |L| on the uniform grid u = step..count*step, built with multiplicative
// phase updates (one complex exp per quote for the whole scan).
std::vector<double> cf_modulus_scan(const TenorQuotes& quotes, double spot, double step,
                                    int count);

// Data-driven exponent: first u with |L(u)| <= 0.3 (linearly interpolated on a
// u_bar/1000 grid), capped by the grid argmin, with u_bar = sqrt(-2 log 0.05) / atm_iv.
USelection select_u(const TenorQuotes& quotes, double spot, double atm_iv);

}  // namespace ovv
