#include "ovv/bs_toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ovv/math/special.hpp"

namespace ovv {

double bs_price(double forward, double strike, double tenor, double vol, OptionSide side) {
    if (!(forward > 0.0) || !(strike > 0.0) || !(tenor > 0.0)) {
        throw std::invalid_argument("bs_price: forward, strike and tenor must be > 0");
    }
    if (vol < 0.0) throw std::invalid_argument("bs_price: vol must be >= 0");
    const double stdev = vol * std::sqrt(tenor);
    if (stdev == 0.0) {
        return side == OptionSide::Call ? std::max(forward - strike, 0.0)
                                        : std::max(strike - forward, 0.0);
    }
    const double d1 = std::log(forward / strike) / stdev + 0.5 * stdev;
    const double d2 = d1 - stdev;
    if (side == OptionSide::Call) {
        return forward * norm_cdf(d1) - strike * norm_cdf(d2);
    }
    return strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
}

double implied_vol(double price, double forward, double strike, double tenor, OptionSide side,
                   double vol_guess) {
    if (!(forward > 0.0) || !(strike > 0.0) || !(tenor > 0.0)) {
        throw std::invalid_argument("implied_vol: forward, strike and tenor must be > 0");
    }
    const double intrinsic = (side == OptionSide::Call) ? std::max(forward - strike, 0.0)
                                                        : std::max(strike - forward, 0.0);
    const double upper = (side == OptionSide::Call) ? forward : strike;
    if (!(price > intrinsic)) {
        throw std::domain_error("implied_vol: price at or below intrinsic lower bound");
    }
    if (!(price < upper)) {
        throw std::domain_error("implied_vol: price at or above the forward/strike upper bound");
    }

    const double tol = 1e-10 * forward;
    double lo = 1e-9;
    double hi = 1.0;
    while (bs_price(forward, strike, tenor, hi, side) < price) {
        hi *= 2.0;
        if (hi > 1e4) throw std::domain_error("implied_vol: no volatility reproduces the price");
    }

    double vol = (vol_guess > lo && vol_guess < hi)
                     ? vol_guess
                     : std::clamp(std::sqrt(2.0 * std::abs(std::log(forward / strike)) / tenor + 1e-12),
                                  lo, hi);
    if (!(vol > lo) || !(vol < hi)) vol = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double value = bs_price(forward, strike, tenor, vol, side);
        const double diff = value - price;
        if (std::abs(diff) <= tol) return vol;
        if (diff > 0.0) hi = vol; else lo = vol;
        const double stdev = vol * std::sqrt(tenor);
        const double d1 = std::log(forward / strike) / stdev + 0.5 * stdev;
        const double vega = forward * norm_pdf(d1) * std::sqrt(tenor);
        double next = (vega > 1e-300) ? vol - diff / vega : 0.0;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - vol) < 1e-16 * vol) return next;
        vol = next;
    }
    return vol;
}

double synthetic_forward(double strike, double call_price, double put_price) {
    return strike + call_price - put_price;
}

InterpolationResult interpolate_panel(const OptionPanel& panel, double mesh) {
    panel.validate();
    if (!(mesh > 0.0)) throw std::invalid_argument("interpolate_panel: mesh must be > 0");

    InterpolationResult result;
    result.panel.obs_time = panel.obs_time;
    result.panel.forward = panel.forward;

    for (const auto& slice : panel.tenors) {
        std::vector<double> obs_strikes, obs_log_strikes, obs_ivs, obs_prices;
        double last_iv = 0.0;
        for (std::size_t j = 0; j < slice.strikes.size(); ++j) {
            const OptionSide side =
                slice.strikes[j] <= panel.forward ? OptionSide::Put : OptionSide::Call;
            try {
                const double iv = implied_vol(slice.prices[j], panel.forward, slice.strikes[j],
                                              slice.tenor, side, last_iv);
                last_iv = iv;
                obs_strikes.push_back(slice.strikes[j]);
                obs_log_strikes.push_back(std::log(slice.strikes[j]));
                obs_ivs.push_back(iv);
                obs_prices.push_back(slice.prices[j]);
            } catch (const std::domain_error&) {
                ++result.dropped_quotes;
            }
        }
        if (obs_strikes.size() < 3) {
            throw std::runtime_error("interpolate_panel: fewer than 3 invertible quotes in a tenor");
        }

        TenorQuotes out;
        out.tenor = slice.tenor;
        out.tenor_days = slice.tenor_days;
        out.floored_count = slice.floored_count;
        const long first = static_cast<long>(std::ceil(obs_strikes.front() / mesh - 1e-9));
        const long last = static_cast<long>(std::floor(obs_strikes.back() / mesh + 1e-9));
        std::size_t seg = 0;
        for (long g = first; g <= last; ++g) {
            const double strike = g * mesh;
            while (seg + 2 < obs_strikes.size() && obs_strikes[seg + 1] < strike) ++seg;
            const double lo = obs_strikes[seg];
            const double hi = obs_strikes[seg + 1];
            out.strikes.push_back(strike);
            if (std::abs(strike - lo) < 1e-9 * std::max(1.0, lo)) {
                out.prices.push_back(obs_prices[seg]);
                continue;
            }
            if (std::abs(strike - hi) < 1e-9 * std::max(1.0, hi)) {
                out.prices.push_back(obs_prices[seg + 1]);
                continue;
            }
            const double k = std::log(strike);
            const double frac = (k - obs_log_strikes[seg]) / (obs_log_strikes[seg + 1] - obs_log_strikes[seg]);
            const double iv = obs_ivs[seg] + frac * (obs_ivs[seg + 1] - obs_ivs[seg]);
            const OptionSide side = strike <= panel.forward ? OptionSide::Put : OptionSide::Call;
            out.prices.push_back(bs_price(panel.forward, strike, slice.tenor, iv, side));
        }
        result.panel.tenors.push_back(std::move(out));
    }
    return result;
}

}  // namespace ovv
