#include "ovv/affine_pricer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "ovv/math/ode.hpp"
#include "ovv/math/quadrature.hpp"
#include "ovv/math/rng.hpp"
#include "ovv/math/special.hpp"

namespace ovv {

namespace {

constexpr double kGl16Nodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr double kGl16Weights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Flattened Gauss-Legendre nodes on geometrically growing panels over
// [0, u_max]: fine near the origin where the inversion kernel curves, wide in
// the Gaussian tail.
void build_node_grid(double u_max, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    double lo = 0.0;
    double width = 2.0;
    while (lo < u_max) {
        const double hi = std::min(lo + width, u_max);
        const double center = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        for (int j = 0; j < 8; ++j) {
            nodes.push_back(center - half * kGl16Nodes[j]);
            weights.push_back(half * kGl16Weights[j]);
            nodes.push_back(center + half * kGl16Nodes[j]);
            weights.push_back(half * kGl16Weights[j]);
        }
        lo = hi;
        width = std::min(width * 1.3, 16.0);
    }
}

struct RiccatiRhs {
    const ModelParams& p;
    cd w;
    cd drift_term;  // (-1/2 - kappa(1)) w + kappa(w), constant in beta

    void operator()(double /*t*/, const std::array<cd, 2>& y, std::array<cd, 2>& dy) const {
        const cd beta = y[1];
        dy[0] = p.kappa_v * p.theta_v * beta;
        dy[1] = 0.5 * w * w + drift_term +
                (p.rho * p.sigma_v * w - p.kappa_v) * beta +
                0.5 * p.sigma_v * p.sigma_v * beta * beta;
    }
};

RiccatiRhs make_rhs(const ModelParams& params, cd w) {
    const cd kw = jump_transform(params, w);
    const double k1 = jump_compensator(params);
    return RiccatiRhs{params, w, (-0.5 - k1) * w + kw};
}

double diffusive_var_proxy(const ModelParams& params, double v, double tenor) {
    return (1.0 + jump_variance_per_unit_v(params)) * std::max(v, 1e-8) * tenor;
}

// u beyond which |CF| is negligible for variance >= v over the tenor.
double inversion_cutoff(double v, double tenor) {
    return std::sqrt(2.0 * 34.0 / (std::max(v, 1e-8) * tenor));
}

}  // namespace

cd jump_transform(const ModelParams& params, cd w) {
    if (!(w.real() > -params.lambda_minus && w.real() < params.lambda_plus)) {
        throw std::invalid_argument(
            "jump_transform: Re(w) outside the integrability strip (-lambda_minus, lambda_plus)");
    }
    return -params.c_minus * w / (params.lambda_minus * (params.lambda_minus + w)) +
           params.c_plus * w / (params.lambda_plus * (params.lambda_plus - w));
}

double jump_compensator(const ModelParams& params) {
    return jump_transform(params, cd(1.0, 0.0)).real();
}

double jump_variance_per_unit_v(const ModelParams& params) {
    return 2.0 * params.c_minus / std::pow(params.lambda_minus, 3) +
           2.0 * params.c_plus / std::pow(params.lambda_plus, 3);
}

CfSolution riccati_solve(const ModelParams& params, cd w, double tenor) {
    params.validate();
    if (!(tenor > 0.0)) throw std::invalid_argument("riccati_solve: tenor must be > 0");
    const auto rhs = make_rhs(params, w);
    DormandPrince<2> solver([rhs](double t, const auto& y, auto& dy) { rhs(t, y, dy); });
    const auto y = solver.solve({cd(0.0), cd(0.0)}, tenor);
    if (!std::isfinite(y[0].real()) || !std::isfinite(y[1].real()) ||
        !std::isfinite(y[0].imag()) || !std::isfinite(y[1].imag())) {
        throw std::runtime_error("riccati_solve: non-finite exponents (moment explosion?)");
    }
    return {y[0], y[1]};
}

cd conditional_cf(const ModelParams& params, double v, double tenor, double u) {
    const CfSolution s = riccati_solve(params, cd(0.0, u), tenor);
    return std::exp(s.alpha + s.beta * v);
}

void OptionPanel::validate() const {
    if (!(forward > 0.0)) throw std::invalid_argument("OptionPanel: forward must be > 0");
    if (tenors.empty() || tenors.size() > 2) {
        throw std::invalid_argument("OptionPanel: expected one or two tenor slices");
    }
    if (tenors.size() == 2 && !(tenors[1].tenor > tenors[0].tenor)) {
        throw std::invalid_argument("OptionPanel: tenors must be strictly increasing");
    }
    for (const auto& slice : tenors) {
        if (!(slice.tenor > 0.0)) throw std::invalid_argument("OptionPanel: tenor must be > 0");
        if (slice.strikes.size() != slice.prices.size()) {
            throw std::invalid_argument("OptionPanel: strike/price length mismatch");
        }
        for (std::size_t j = 0; j < slice.strikes.size(); ++j) {
            if (j > 0 && !(slice.strikes[j] > slice.strikes[j - 1])) {
                throw std::invalid_argument("OptionPanel: strikes must be strictly increasing");
            }
            if (!(slice.prices[j] > 0.0)) {
                throw std::invalid_argument("OptionPanel: prices must be positive");
            }
        }
    }
}

struct PanelPricer::Impl {
    ModelParams params;
    Options options;
    std::vector<double> sorted_tenors;
    std::map<double, std::size_t> tenor_lookup;  // tenor value -> registration index
    std::vector<std::size_t> sorted_position;    // registration index -> sorted slot
    std::vector<double> nodes, weights;
    // exponents[side][sorted_slot * n_nodes + q], side 0 = put, 1 = call
    std::vector<cd> alpha_exp[2], beta_exp[2];

    double damping(int side) const { return side == 0 ? options.alpha_put : options.alpha_call; }

    void build(const std::vector<double>& tenors) {
        params.validate();
        if (tenors.empty()) throw std::invalid_argument("PanelPricer: no tenors");
        for (std::size_t i = 0; i < tenors.size(); ++i) {
            if (!(tenors[i] > 0.0)) throw std::invalid_argument("PanelPricer: tenor must be > 0");
            tenor_lookup.emplace(tenors[i], i);
        }
        sorted_tenors.reserve(tenor_lookup.size());
        for (const auto& [tenor, _] : tenor_lookup) sorted_tenors.push_back(tenor);
        sorted_position.resize(tenors.size());
        for (std::size_t i = 0; i < tenors.size(); ++i) {
            sorted_position[i] = static_cast<std::size_t>(
                std::lower_bound(sorted_tenors.begin(), sorted_tenors.end(), tenors[i]) -
                sorted_tenors.begin());
        }

        const double u_max =
            std::min(6000.0, inversion_cutoff(options.v_floor, sorted_tenors.front()));
        build_node_grid(u_max, nodes, weights);

        const std::size_t n_nodes = nodes.size();
        const std::size_t n_tenors = sorted_tenors.size();
        for (int side = 0; side < 2; ++side) {
            alpha_exp[side].resize(n_tenors * n_nodes);
            beta_exp[side].resize(n_tenors * n_nodes);
            const double a = damping(side);
            for (std::size_t q = 0; q < n_nodes; ++q) {
                const cd w(a + 1.0, nodes[q]);
                const auto rhs = make_rhs(params, w);
                DormandPrince<2> solver([rhs](double t, const auto& y, auto& dy) { rhs(t, y, dy); });
                const auto states = solver.integrate_checkpoints({cd(0.0), cd(0.0)}, sorted_tenors);
                for (std::size_t ti = 0; ti < n_tenors; ++ti) {
                    alpha_exp[side][ti * n_nodes + q] = states[ti][0];
                    beta_exp[side][ti * n_nodes + q] = states[ti][1];
                }
            }
        }
    }
};

PanelPricer::PanelPricer(const ModelParams& params, std::vector<double> tenors)
    : PanelPricer(params, std::move(tenors), Options()) {}

PanelPricer::PanelPricer(const ModelParams& params, std::vector<double> tenors, Options options)
    : impl_(std::make_unique<Impl>()) {
    impl_->params = params;
    impl_->options = options;
    impl_->build(tenors);
}

PanelPricer::~PanelPricer() = default;
PanelPricer::PanelPricer(PanelPricer&&) noexcept = default;
PanelPricer& PanelPricer::operator=(PanelPricer&&) noexcept = default;

std::size_t PanelPricer::tenor_index(double tenor) const {
    const auto it = impl_->tenor_lookup.find(tenor);
    if (it == impl_->tenor_lookup.end()) {
        throw std::invalid_argument("PanelPricer: tenor was not registered");
    }
    return it->second;
}

const std::vector<double>& PanelPricer::tenors() const { return impl_->sorted_tenors; }

PanelPricer::Slice PanelPricer::slice(std::size_t tenor_index, double v) const {
    const Impl& im = *impl_;
    if (tenor_index >= im.sorted_position.size()) {
        throw std::invalid_argument("PanelPricer::slice: tenor_index out of range");
    }
    const std::size_t slot = im.sorted_position[tenor_index];
    const std::size_t n = im.nodes.size();
    Slice s;
    s.impl_ = &im;
    s.v_ = v;
    s.tenor_ = im.sorted_tenors[slot];
    for (int side = 0; side < 2; ++side) {
        const double a = im.damping(side);
        const cd* alpha = &im.alpha_exp[side][slot * n];
        const cd* beta = &im.beta_exp[side][slot * n];
        // Characteristic function not decayed inside the node grid at this
        // variance level: price through the self-contained adaptive path.
        if (std::abs(std::exp(alpha[n - 1] + beta[n - 1] * v)) > 2.5e-6) {
            s.fallback_ = true;
            return s;
        }
        auto& f = s.factors_[side];
        f.resize(n);
        for (std::size_t q = 0; q < n; ++q) {
            const double u = im.nodes[q];
            const cd denom = cd(a, u) * cd(a + 1.0, u);
            f[q] = im.weights[q] * std::exp(alpha[q] + beta[q] * v) / denom;
        }
        // Drop the far tail once the remaining mass cannot move the price by
        // more than ~1e-12 x spot.
        double tail = 0.0;
        std::size_t used = n;
        while (used > 32) {
            tail += std::abs(f[used - 1]);
            if (tail > 1e-12) break;
            --used;
        }
        s.n_used_[side] = used;
    }
    return s;
}

double PanelPricer::Slice::price(double spot, double strike) const {
    const Impl& im = *impl_;
    if (fallback_) {
        return price_option(im.params, spot, v_, tenor_, std::log(strike));
    }
    const int side = (strike <= spot) ? 0 : 1;
    const double a = im.damping(side);
    const double m = std::log(strike / spot);
    const std::size_t n = n_used_[side];
    const cd* f = factors_[side].data();
    double sum = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const cd phase = std::exp(cd(0.0, -im.nodes[q] * m));
        sum += (f[q] * phase).real();
    }
    return std::max(0.0, spot * std::exp(-a * m) * sum / std::numbers::pi);
}

double PanelPricer::price(std::size_t tenor_index, double v, double spot, double strike) const {
    return slice(tenor_index, v).price(spot, strike);
}

double price_option(const ModelParams& params, double spot, double v, double tenor,
                    double log_strike) {
    const bool put = (log_strike <= std::log(spot));
    return price_vanilla(params, spot, v, tenor, log_strike,
                         put ? VanillaSide::Put : VanillaSide::Call);
}

double price_vanilla(const ModelParams& params, double spot, double v, double tenor,
                     double log_strike, VanillaSide side) {
    params.validate();
    if (!(tenor > 0.0)) throw std::invalid_argument("price_vanilla: tenor must be > 0");
    if (!(spot > 0.0) || !(v >= 0.0)) {
        throw std::invalid_argument("price_vanilla: spot must be > 0 and v >= 0");
    }
    const double x0 = std::log(spot);
    const double m = log_strike - x0;
    const bool put = (side == VanillaSide::Put);

    // Saddle-point style damping for deep strikes, clamped inside the jump
    // integrability strip and away from the Riccati moment explosion.
    const double var_proxy = diffusive_var_proxy(params, v, tenor);
    const double saddle = m / var_proxy - 0.5;
    const double explosion_cap =
        (params.sigma_v > 0.0) ? 0.5 * std::numbers::pi / (params.sigma_v * tenor) : 1e6;
    double alpha;
    if (put) {
        const double lo = std::max({-0.7 * params.lambda_minus + 1.0, -explosion_cap, -60.0});
        alpha = std::min(-2.5, std::max(saddle, lo));
    } else {
        const double hi = std::min({0.7 * params.lambda_plus - 1.0, explosion_cap, 60.0});
        alpha = std::max(1.5, std::min(saddle, hi));
    }

    const auto integrand = [&](double u) {
        const CfSolution s = riccati_solve(params, cd(alpha + 1.0, u), tenor);
        const cd denom = cd(alpha, u) * cd(alpha + 1.0, u);
        const cd val = std::exp(s.alpha + s.beta * v - cd(0.0, u * m)) / denom;
        return val.real();
    };
    // The diffusive cutoff covers the Gaussian bulk; the geometric extension
    // keeps integrating through the slowly decaying stochastic-volatility
    // tail until it is exhausted.
    const double bulk = std::min(2000.0, inversion_cutoff(v, tenor));
    const double integral = integrate_to_inf(integrand, 0.0, bulk, 1e-10);
    if (!std::isfinite(integral)) {
        throw std::runtime_error("price_option: inversion integral did not converge");
    }
    return std::max(0.0, spot * std::exp(-alpha * m) * integral / std::numbers::pi);
}

namespace {

template <typename PriceFn>
GridQuotes grid_from_pricer(const PriceFn& price_at, double spot,
                            const StrikeGridOptions& options) {
    const double step = options.step;
    const double k_floor = step * std::floor(spot / step);
    std::vector<std::pair<double, double>> below, above;

    double strike = k_floor;
    for (int i = 0; i < options.max_strikes_per_side; ++i) {
        const double price = price_at(strike);
        below.emplace_back(strike, price);
        // The two strikes bracketing the spot are kept no matter how small
        // their prices are; beyond them one terminating strike closes the grid.
        if (i > 0 && price < options.price_floor) break;
        strike -= step;
    }
    strike = k_floor + step;
    for (int i = 0; i < options.max_strikes_per_side; ++i) {
        const double price = price_at(strike);
        above.emplace_back(strike, price);
        if (i > 0 && price < options.price_floor) break;
        strike += step;
    }

    GridQuotes out;
    out.strikes.reserve(below.size() + above.size());
    out.prices.reserve(below.size() + above.size());
    for (auto it = below.rbegin(); it != below.rend(); ++it) {
        out.strikes.push_back(it->first);
        out.prices.push_back(it->second);
    }
    for (const auto& [k, p] : above) {
        out.strikes.push_back(k);
        out.prices.push_back(p);
    }
    return out;
}

}  // namespace

GridQuotes grid_quotes(const PanelPricer::Slice& slice, double spot,
                       const StrikeGridOptions& options) {
    return grid_from_pricer([&](double strike) { return slice.price(spot, strike); }, spot,
                            options);
}

std::vector<double> build_strike_grid(const PanelPricer& pricer, std::size_t tenor_index,
                                      double spot, double v, const StrikeGridOptions& options) {
    const auto slice = pricer.slice(tenor_index, v);
    return build_strike_grid(slice, spot, options);
}

std::vector<double> build_strike_grid(const PanelPricer::Slice& slice, double spot,
                                      const StrikeGridOptions& options) {
    return grid_quotes(slice, spot, options).strikes;
}

std::vector<double> build_strike_grid(const ModelParams& params, double spot, double v,
                                      double tenor, const StrikeGridOptions& options) {
    return grid_from_pricer(
               [&](double strike) { return price_option(params, spot, v, tenor, std::log(strike)); },
               spot, options)
        .strikes;
}

OptionPanel observe_panel(const OptionPanel& panel, double noise_scale, std::uint64_t seed,
                          double min_tick) {
    panel.validate();
    OptionPanel noisy = panel;
    if (noise_scale == 0.0) return noisy;
    Rng rng(seed);
    for (auto& slice : noisy.tenors) {
        slice.floored_count = 0;
        for (auto& price : slice.prices) {
            price *= 1.0 + noise_scale * rng.normal();
            if (price <= 0.0) {
                price = min_tick;
                ++slice.floored_count;
            }
        }
    }
    return noisy;
}

double vix_squared(const ModelParams& params, double v) {
    params.validate();
    if (!(v >= 0.0)) throw std::invalid_argument("vix_squared: v must be >= 0");
    constexpr double horizon = 1.0 / 12.0;
    const double kt = params.kappa_v * horizon;
    const double psi = (kt > 1e-12) ? (1.0 - std::exp(-kt)) / kt : 1.0 - 0.5 * kt;
    const double neg_share = 2.0 * params.c_minus / std::pow(params.lambda_minus, 3);
    const double pos_share = 2.0 * params.c_plus / std::pow(params.lambda_plus, 3);
    const double multiplier = 1.0 +
                              neg_share * params.lambda_minus / (params.lambda_minus - 1.0) +
                              pos_share * params.lambda_plus / (params.lambda_plus + 1.0);
    return multiplier * (v * psi + params.theta_v * (1.0 - psi));
}

double vix_scaling_ratio(const ModelParams& params, double v) {
    constexpr double horizon = 1.0 / 12.0;
    const double kt = params.kappa_v * horizon;
    const double psi = (kt > 1e-12) ? (1.0 - std::exp(-kt)) / kt : 1.0 - 0.5 * kt;
    return 2.0 * v * psi / vix_squared(params, v);
}

}  // namespace ovv
