#pragma once

#include <vector>

#include "ovv/affine_pricer.hpp"

namespace ovv {

enum class OptionSide { Put, Call };

struct IVQuote {
    double log_strike = 0.0;
    double implied_vol = 0.0;  // annualized, > 0
    double tenor = 0.0;
};

// Black formula with zero rates (forward measure prices).
double bs_price(double forward, double strike, double tenor, double vol, OptionSide side);

// Inverts bs_price to |price error| <= 1e-10 x forward with a safeguarded
// Newton iteration inside a bisection bracket. Throws std::domain_error
// naming the violated bound when the price is not attainable. vol_guess
// (e.g. the neighboring strike's result) warm-starts the iteration.
double implied_vol(double price, double forward, double strike, double tenor, OptionSide side,
                   double vol_guess = 0.0);

// Zero-rate parity: forward = strike + call - put.
double synthetic_forward(double strike, double call_price, double put_price);

struct InterpolationResult {
    OptionPanel panel;
    int dropped_quotes = 0;  // quotes that failed implied-vol inversion
};

// Densifies a panel onto the strike grid of multiples of `mesh` spanning
// [min strike, max strike] per tenor: quotes are converted to BSIV, IV is
// interpolated linearly in log-strike, and grid points are repriced with the
// OTM side convention. Grid points that coincide with an observed strike keep
// the observed price, so the operation is idempotent and the original
// endpoints survive. Fewer than 3 invertible quotes in a slice is an error.
InterpolationResult interpolate_panel(const OptionPanel& panel, double mesh = 2.5);

}  // namespace ovv
