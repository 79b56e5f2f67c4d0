#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ovv/bs_toolkit.hpp"
#include "ovv/charfn.hpp"
#include "ovv/harness.hpp"
#include "ovv/sde_sim.hpp"
#include "ovv/vv_lv.hpp"

namespace py = pybind11;
using namespace ovv;

namespace {

TenorQuotes quotes_from(double tenor_days, const std::vector<double>& strikes,
                        const std::vector<double>& prices) {
    TenorQuotes quotes;
    quotes.set_tenor_days(tenor_days);
    quotes.strikes = strikes;
    quotes.prices = prices;
    return quotes;
}

py::dict result_dict(const VVLVResult& r) {
    py::dict d;
    d["estimate"] = r.estimate;
    d["avar"] = r.avar;
    d["ci_low"] = r.ci_low;
    d["ci_high"] = r.ci_high;
    d["k_n"] = r.k_n;
    d["missing"] = r.missing_count;
    d["truncated"] = r.truncated_count;
    d["avar_floored"] = r.avar_floored;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ovv, m) {
    m.doc() = "Option-implied spot volatility-of-volatility and leverage-effect estimation";

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("theta_v", &ModelParams::theta_v)
        .def_readwrite("kappa_v", &ModelParams::kappa_v)
        .def_readwrite("sigma_v", &ModelParams::sigma_v)
        .def_readwrite("rho", &ModelParams::rho)
        .def_readwrite("lambda_minus", &ModelParams::lambda_minus)
        .def_readwrite("lambda_plus", &ModelParams::lambda_plus)
        .def_readwrite("c_minus", &ModelParams::c_minus)
        .def_readwrite("c_plus", &ModelParams::c_plus)
        .def_readwrite("x0", &ModelParams::x0)
        .def_static("case_s", &ModelParams::case_s)
        .def_static("case_m", &ModelParams::case_m)
        .def_static("case_f", &ModelParams::case_f);

    m.def("stationary_variance_quantile", &stationary_variance_quantile, py::arg("params"),
          py::arg("p"));
    m.def(
        "simulate_path",
        [](const ModelParams& params, double v0, double horizon, std::int64_t n_steps,
           int substeps, std::uint64_t seed) {
            const PricePath path = simulate_path(params, v0, horizon, n_steps, substeps, seed);
            py::dict d;
            d["times"] = path.times;
            d["log_price"] = path.log_price;
            d["variance"] = path.variance;
            return d;
        },
        py::arg("params"), py::arg("v0"), py::arg("horizon"), py::arg("n_steps"),
        py::arg("substeps"), py::arg("seed"));

    m.def("price_option", &price_option, py::arg("params"), py::arg("spot"), py::arg("v"),
          py::arg("tenor"), py::arg("log_strike"));
    m.def("vix_squared", &vix_squared, py::arg("params"), py::arg("v"));
    m.def("vix_scaling_ratio", &vix_scaling_ratio, py::arg("params"), py::arg("v"));

    m.def(
        "bs_price",
        [](double forward, double strike, double tenor, double vol, const std::string& side) {
            return bs_price(forward, strike, tenor, vol,
                            side == "put" ? OptionSide::Put : OptionSide::Call);
        },
        py::arg("forward"), py::arg("strike"), py::arg("tenor"), py::arg("vol"), py::arg("side"));
    m.def(
        "implied_vol",
        [](double price, double forward, double strike, double tenor, const std::string& side) {
            return implied_vol(price, forward, strike, tenor,
                               side == "put" ? OptionSide::Put : OptionSide::Call);
        },
        py::arg("price"), py::arg("forward"), py::arg("strike"), py::arg("tenor"),
        py::arg("side"));

    m.def(
        "estimate_spot_variance",
        [](double tenor_days, const std::vector<double>& strikes,
           const std::vector<double>& prices, double spot, double u) {
            const auto est =
                spot_variance(estimate_cf(quotes_from(tenor_days, strikes, prices), spot, u), u,
                              Transform::Identity);
            py::dict d;
            d["sigma2"] = est.sigma2;
            d["valid"] = est.valid;
            return d;
        },
        py::arg("tenor_days"), py::arg("strikes"), py::arg("prices"), py::arg("spot"),
        py::arg("u"));
    m.def(
        "select_u",
        [](double tenor_days, const std::vector<double>& strikes,
           const std::vector<double>& prices, double spot, double atm_iv) {
            return select_u(quotes_from(tenor_days, strikes, prices), spot, atm_iv).u;
        },
        py::arg("tenor_days"), py::arg("strikes"), py::arg("prices"), py::arg("spot"),
        py::arg("atm_iv"));

    m.def(
        "vv_estimate",
        [](const std::vector<double>& v_increments, double delta_n, double upsilon) {
            IncrementSeries s;
            s.delta_n = delta_n;
            s.v_increments = v_increments;
            return vv_estimate(s, upsilon);
        },
        py::arg("v_increments"), py::arg("delta_n"),
        py::arg("upsilon") = std::numeric_limits<double>::infinity());
    m.def(
        "lv_estimate",
        [](const std::vector<double>& v_increments, const std::vector<double>& x_increments,
           double delta_n, double upsilon) {
            IncrementSeries s;
            s.delta_n = delta_n;
            s.v_increments = v_increments;
            s.x_increments = x_increments;
            return lv_estimate(s, upsilon);
        },
        py::arg("v_increments"), py::arg("x_increments"), py::arg("delta_n"),
        py::arg("upsilon") = std::numeric_limits<double>::infinity());
    m.def("truncation_threshold", &truncation_threshold, py::arg("abs_increments_by_day"),
          py::arg("delta_n"));

    m.def(
        "ground_truth",
        [](const ModelParams& params, double v0, const std::string& transform) {
            const GroundTruth truth = ground_truth(params, v0, transform_from_string(transform));
            py::dict d;
            d["vv"] = truth.vv;
            d["lv"] = truth.lv;
            return d;
        },
        py::arg("params"), py::arg("v0"), py::arg("transform") = "log");

    m.def(
        "run_replication",
        [](const std::string& case_name, double v0_quantile, int rep_index, std::uint64_t seed,
           int k_n) {
            ScenarioConfig config;
            config.apply_key_value("case", case_name);
            config.v0_quantile = v0_quantile;
            config.seed = seed;
            config.k_n = k_n;
            const ReplicationResult rep = run_replication(config, rep_index);
            py::dict d;
            d["v0"] = rep.v0;
            d["u_short"] = rep.window.u_short.u;
            d["u_long"] = rep.window.u_long.u;
            d["vv_t"] = result_dict(rep.window.vv_t);
            d["vv_tprime"] = result_dict(rep.window.vv_tp);
            d["vv_two_tenor"] = result_dict(rep.window.vv_ttp);
            d["lv_t"] = result_dict(rep.window.lv_t);
            d["lv_tprime"] = result_dict(rep.window.lv_tp);
            d["lv_two_tenor"] = result_dict(rep.window.lv_ttp);
            d["vv_return"] = rep.vv_ret;
            d["lv_return"] = rep.lv_ret;
            return d;
        },
        py::arg("case_name"), py::arg("v0_quantile") = 0.5, py::arg("rep_index") = 0,
        py::arg("seed") = 20240801, py::arg("k_n") = 80);
}
