#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ovv/charfn.hpp"

namespace ovv {

// Increments of one estimation window, ordered i = 1..k_n back in time
// (i = 1 is the most recent increment). Entries
// flagged missing came from invalid spot-vol estimates and are excluded
// pairwise, with the normalizing counts adjusted.
struct IncrementSeries {
    double delta_n = 0.0;
    std::vector<double> v_increments;
    std::vector<double> x_increments;  // may be empty when only VV is needed
    std::vector<char> missing;         // same length as v_increments; 0 = present

    std::size_t size() const { return v_increments.size(); }
    bool present(std::size_t i) const { return missing.empty() || !missing[i]; }
    void check(bool need_x) const;
};

struct VVLVResult {
    double estimate = 0.0;
    double avar = 0.0;        // feasible asymptotic variance
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    int k_n = 0;
    double upsilon = 0.0;
    int truncated_count = 0;
    int missing_count = 0;
    bool avar_floored = false;  // negative feasible AVar clamped to epsilon
    bool valid = false;
};

double truncate(double x, double upsilon);

// Empirical threshold from the current day plus three prior days of absolute
// increments: 3 ((pi/8) (1/((k_n-1) delta_n)) sum_l sum_i |D_i||D_{i-1}|)^0.49.
double truncation_threshold(const std::vector<std::vector<double>>& abs_increments_by_day,
                            double delta_n);

double vv_estimate(const IncrementSeries& series, double upsilon);
double lv_estimate(const IncrementSeries& series, double upsilon);

// Feasible asymptotic variances (AVar^0 + 2 AVar^1 built from the q-statistic
// autocovariances for VV; the squared-product/lag-2 difference for LV).
// Negative finite-sample values are clamped to floor_eps with a flag.
double vv_avar(const IncrementSeries& series, double upsilon, double floor_eps = 1e-12,
               bool* floored = nullptr);
double lv_avar(const IncrementSeries& series, double upsilon, double floor_eps = 1e-12,
               bool* floored = nullptr);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// estimate +- z_level sqrt(avar / k_n); level = 0 degenerates to a point.
Interval confidence_interval(double estimate, double avar, int k_n, double level);

VVLVResult vv_result(const IncrementSeries& series, double upsilon, double level = 0.95);
VVLVResult lv_result(const IncrementSeries& series, double upsilon, double level = 0.95);

enum class AVarKind { VV, LV };
enum class TenorMode { Single, Double };

struct TheoreticalAVarInputs {
    double sigma2 = 0.0;  // true spot variance
    double vv = 0.0;      // true volatility-of-volatility of the transform
    double lv = 0.0;      // true leverage of the transform
    double phi = 0.0;     // error-balance constant in [0,1]
    double rho0 = 1.0;    // limiting relative strike gap at the money
    double zeta0 = 0.0;   // relative option noise scale at the money
    double u = 0.0;
    double tau = 2.0;     // tenor ratio T'/T
    Transform transform = Transform::Log;
};

// Limit variances of the normalized estimation errors; the noise component
// carries the integral of cos^2(u sigma k) PhiTilde(k)^2 with
// PhiTilde(k) = phi(k) + |k| Phi(-|k|).
double theoretical_avar(const TheoreticalAVarInputs& inputs, AVarKind which, TenorMode mode);
double phi_tilde(double k);

// Return-based competitors built from fine-grid log-returns.
std::complex<double> return_cf(const std::vector<double>& returns, double u, double delta_fine);
// -(2/u^2) log |return_cf|; NaN when the modulus leaves (0,1).
double return_spot_variance(const std::vector<double>& returns, double u, double delta_fine);

// sum_{i=2}^{k_n-1} q_i / (k_n delta_n) over the k_n - 1 return-based
// volatility increments (i = 1..k_n-1).
double vv_ret_estimate(const std::vector<double>& v_increments, int k_n, double delta_n,
                       double upsilon);
// sum_{i=1}^{k_n-2} tau(two-step x increment) tau(dV_i) / (k_n delta_n).
double lv_ret_estimate(const std::vector<double>& two_step_x_increments,
                       const std::vector<double>& v_increments, int k_n, double delta_n,
                       double upsilon);

struct RvBv {
    double rv = 0.0;
    double bv = 0.0;
};
RvBv rv_bv(const std::vector<double>& returns, double delta_fine);
double select_u_ret(const RvBv& bipower);

}  // namespace ovv
