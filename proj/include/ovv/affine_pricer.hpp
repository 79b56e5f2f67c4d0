#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "ovv/sde_sim.hpp"

namespace ovv {

using cd = std::complex<double>;

// Exponents of the conditional characteristic function,
// E[e^{w (x_{t+T} - x_t)} | V_t = v] = exp(alpha + beta * v).
struct CfSolution {
    cd alpha{0.0, 0.0};
    cd beta{0.0, 0.0};
};

// kappa(w) = c- Int_{-inf}^0 (e^{wx}-1) e^{-lm |x|} dx + c+ Int_0^inf (e^{wx}-1) e^{-lp x} dx
//          = -c- w / (lm (lm + w)) + c+ w / (lp (lp - w)),
// per unit of V; finite for Re(w) in (-lambda_minus, lambda_plus).
cd jump_transform(const ModelParams& params, cd w);

// kappa(1); the price drift carries -kappa(1) V so the asset is a martingale.
double jump_compensator(const ModelParams& params);

// kappa''(0) = 2 c- / lm^3 + 2 c+ / lp^3: spot jump variation per unit of
// diffusive variance (1.0 under the default calibration).
double jump_variance_per_unit_v(const ModelParams& params);

// Riccati exponents for E[e^{w dx}] at a single (w, tenor); adaptive
// Dormand-Prince solve to 1e-10. Throws on non-convergence.
CfSolution riccati_solve(const ModelParams& params, cd w, double tenor);

// E[e^{iu (x_{t+T} - x_t)} | V_t = v] with u real and unnormalized (callers
// working on the sqrt(T) scale pass u / sqrt(T)).
cd conditional_cf(const ModelParams& params, double v, double tenor, double u);

struct TenorQuotes {
    double tenor = 0.0;             // years; always tenor_days / 252.0
    double tenor_days = 0.0;        // canonical value, the one serialized to CSV
    std::vector<double> strikes;    // strictly increasing, currency units
    std::vector<double> prices;     // out-of-the-money prices (put iff strike <= forward)
    int floored_count = 0;          // quotes clamped to the minimum tick by noise

    static double years_of(double days) { return days / 252.0; }
    void set_tenor_days(double days) {
        tenor_days = days;
        tenor = years_of(days);
    }
};

struct OptionPanel {
    double obs_time = 0.0;          // years
    double forward = 0.0;           // equals spot under zero rates
    std::vector<TenorQuotes> tenors;  // one or two slices, ascending tenor

    void validate() const;          // throws std::invalid_argument
};

// Precomputed characteristic-function tables shared by every strike and
// observation time of a scenario: one Riccati solve per quadrature node
// covers the whole tenor ladder. Immutable after construction, safe for
// concurrent readers.
class PanelPricer {
    struct Impl;

public:
    struct Options {
        double v_floor = 1e-3;   // smallest variance the node grid must support
        double alpha_put = -2.5; // damping exponents of the Fourier inversion
        double alpha_call = 1.5;
    };

    PanelPricer(const ModelParams& params, std::vector<double> tenors);
    PanelPricer(const ModelParams& params, std::vector<double> tenors, Options options);
    ~PanelPricer();
    PanelPricer(PanelPricer&&) noexcept;
    PanelPricer& operator=(PanelPricer&&) noexcept;

    // OTM price (put iff strike <= spot) at the tenor registered under
    // tenor_index. Accuracy ~1e-8 x spot for quotes down to ~1e-7 x spot.
    double price(std::size_t tenor_index, double v, double spot, double strike) const;

    // Characteristic-function factors frozen at one (tenor, variance); pricing
    // a whole strike ladder through a slice costs one complex exponential per
    // node and strike.
    class Slice {
    public:
        double price(double spot, double strike) const;

    private:
        friend class PanelPricer;
        const Impl* impl_ = nullptr;
        double v_ = 0.0;
        double tenor_ = 0.0;
        bool fallback_ = false;     // CF not decayed inside the node grid
        std::size_t n_used_[2] = {0, 0};  // nodes kept after tail truncation
        std::vector<cd> factors_[2];
    };
    Slice slice(std::size_t tenor_index, double v) const;

    std::size_t tenor_index(double tenor) const;  // exact match, throws if absent
    const std::vector<double>& tenors() const;

private:
    std::unique_ptr<Impl> impl_;
};

enum class VanillaSide { Put, Call };

// Single-shot price by damped Fourier inversion of conditional_cf; the
// damping escalates for deep strikes so tiny prices stay accurate in
// relative terms. Absolute accuracy <= 1e-6 x spot (typically ~1e-9 x spot).
// price_option applies the OTM side rule (put iff log_strike <= log spot);
// price_vanilla prices an explicit side.
double price_option(const ModelParams& params, double spot, double v, double tenor,
                    double log_strike);
double price_vanilla(const ModelParams& params, double spot, double v, double tenor,
                     double log_strike, VanillaSide side);

struct StrikeGridOptions {
    double price_floor = 0.075;
    double step = 5.0;
    int max_strikes_per_side = 4000;
};

struct GridQuotes {
    std::vector<double> strikes;
    std::vector<double> prices;
};

// Strike grid and prices in one outward walk from the spot.
GridQuotes grid_quotes(const PanelPricer::Slice& slice, double spot,
                       const StrikeGridOptions& options = {});

// Maximal contiguous grid of strike multiples of `step` whose true OTM price
// is >= price_floor, extended by one terminating strike on each side. The two
// strikes bracketing the spot are always present.
std::vector<double> build_strike_grid(const PanelPricer& pricer, std::size_t tenor_index,
                                      double spot, double v, const StrikeGridOptions& options = {});
std::vector<double> build_strike_grid(const PanelPricer::Slice& slice, double spot,
                                      const StrikeGridOptions& options = {});
std::vector<double> build_strike_grid(const ModelParams& params, double spot, double v,
                                      double tenor, const StrikeGridOptions& options = {});

// Multiplies every price by (1 + noise_scale * z), z iid standard normal in
// (tenor, strike) order; non-positive results are clamped to min_tick and
// counted in floored_count.
OptionPanel observe_panel(const OptionPanel& panel, double noise_scale, std::uint64_t seed,
                          double min_tick = 0.01);

// Model value of the squared VIX at the one-month horizon.
double vix_squared(const ModelParams& params, double v);

// Ratio of the diffusion coefficients of log VIX^2 and log spot variance.
double vix_scaling_ratio(const ModelParams& params, double v);

}  // namespace ovv
