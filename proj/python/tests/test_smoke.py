"""Smoke tests for the python bindings."""
import math
import sys

import _ovv as ovv


def approx(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def main():
    params = ovv.ModelParams.case_m()

    # CIR stationary quantile matches the Monte Carlo panel header
    v0 = ovv.stationary_variance_quantile(params, 0.5)
    assert abs(v0 - 0.0167) < 2e-4, v0

    # Black-Scholes roundtrip
    price = ovv.bs_price(2500.0, 2450.0, 3 / 252, 0.18, "put")
    iv = ovv.implied_vol(price, 2500.0, 2450.0, 3 / 252, "put")
    assert approx(iv, 0.18, 1e-7), iv

    # pricer parity against intrinsic bounds
    put = ovv.price_option(params, 2500.0, v0, 3 / 252, math.log(2500.0))
    assert 0.0 < put < 2500.0

    # ground truth of the log transform
    truth = ovv.ground_truth(params, v0, "log")
    assert approx(truth["vv"], 0.16 / v0, 1e-12)
    assert approx(truth["lv"], -0.36, 1e-12)

    # VIX ratio stays inside the documented band for the fast calibration
    fast = ovv.ModelParams.case_f()
    ratio = ovv.vix_scaling_ratio(fast, ovv.stationary_variance_quantile(fast, 0.5))
    assert 0.3 < ratio < 0.6, ratio

    # simulate and estimate a tiny replication end to end
    rep = ovv.run_replication("M", 0.5, 0, 321, 20)
    assert rep["vv_two_tenor"]["k_n"] == 20
    assert math.isfinite(rep["vv_two_tenor"]["estimate"])
    assert math.isfinite(rep["lv_two_tenor"]["estimate"])

    # estimator arithmetic via the array API
    vv = ovv.vv_estimate([1.0, 1.0, 1.0], 1.0)
    assert approx(vv, 2.0, 1e-12), vv

    print("python smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
