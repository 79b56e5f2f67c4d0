#include "ovv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "ovv/math/rng.hpp"

namespace ovv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = base;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (a + 1);
    splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    return splitmix64(s);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for '" + key + "': " + value);
    }
}

// Tenors are anchored at the window start: the expiries sit tenor_days and
// tenor2_days past the first observation and the time to maturity shrinks as
// the window advances.
double slot_tenor_days(const ScenarioConfig& config, int slot, bool long_tenor) {
    const double base = long_tenor ? config.tenor2_days : config.tenor_days;
    return base - slot * (config.delta_n * 252.0);
}

double slot_tenor(const ScenarioConfig& config, int slot, bool long_tenor) {
    return slot_tenor_days(config, slot, long_tenor) / 252.0;
}

}  // namespace

double ScenarioConfig::start_variance() const {
    if (v0) return *v0;
    return stationary_variance_quantile(params, v0_quantile);
}

void ScenarioConfig::validate() const {
    params.validate();
    if (k_n < 2) throw std::invalid_argument("config: k_n must be >= 2");
    if (!(delta_n > 0.0)) throw std::invalid_argument("config: delta_n must be > 0");
    if (!(tenor_days > 0.0) || !(tenor2_days > tenor_days)) {
        throw std::invalid_argument("config: tenors must satisfy tenor2_days > tenor_days > 0");
    }
    if (k_n * delta_n >= short_tenor() - 1e-12) {
        throw std::invalid_argument(
            "config: window k_n*delta_n must stay inside the short tenor (options expire)");
    }
    if (noise_scale < 0.0) throw std::invalid_argument("config: noise_scale must be >= 0");
    if (!(mesh > 0.0)) throw std::invalid_argument("config: mesh must be > 0");
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    if (l_n < 1 || substeps < 1) throw std::invalid_argument("config: l_n and substeps must be >= 1");
    if (!(ci_level >= 0.0 && ci_level < 1.0)) {
        throw std::invalid_argument("config: ci_level must lie in [0,1)");
    }
    if (v0 && !(*v0 > 0.0)) throw std::invalid_argument("config: v0 must be > 0");
    if (!(v0_quantile > 0.0 && v0_quantile < 1.0)) {
        throw std::invalid_argument("config: v0_quantile must lie in (0,1)");
    }
}

void ScenarioConfig::apply_key_value(const std::string& key, const std::string& value) {
    if (key == "case") {
        if (value == "S") params = ModelParams::case_s();
        else if (value == "M") params = ModelParams::case_m();
        else if (value == "F") params = ModelParams::case_f();
        else throw std::invalid_argument("config: unknown case '" + value + "' (S, M or F)");
        case_name = value;
    } else if (key == "theta_v") params.theta_v = parse_double(key, value);
    else if (key == "kappa_v") params.kappa_v = parse_double(key, value);
    else if (key == "sigma_v") params.sigma_v = parse_double(key, value);
    else if (key == "rho") params.rho = parse_double(key, value);
    else if (key == "lambda_minus") params.lambda_minus = parse_double(key, value);
    else if (key == "lambda_plus") params.lambda_plus = parse_double(key, value);
    else if (key == "c_minus") params.c_minus = parse_double(key, value);
    else if (key == "c_plus") params.c_plus = parse_double(key, value);
    else if (key == "x0") params.x0 = parse_double(key, value);
    else if (key == "v0_quantile") v0_quantile = parse_double(key, value);
    else if (key == "v0") v0 = parse_double(key, value);
    else if (key == "k_n") k_n = static_cast<int>(parse_double(key, value));
    else if (key == "delta_n") delta_n = parse_double(key, value);
    else if (key == "tenor_days") tenor_days = parse_double(key, value);
    else if (key == "tenor2_days") tenor2_days = parse_double(key, value);
    else if (key == "noise_scale") noise_scale = parse_double(key, value);
    else if (key == "mesh") mesh = parse_double(key, value);
    else if (key == "transform") transform = transform_from_string(value);
    else if (key == "truncation") {
        if (value == "infinite") truncation = TruncationMode::Infinite;
        else if (value == "empirical") truncation = TruncationMode::Empirical;
        else throw std::invalid_argument("config: truncation must be 'infinite' or 'empirical'");
    } else if (key == "replications") replications = static_cast<int>(parse_double(key, value));
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_double(key, value));
    else if (key == "l_n") l_n = static_cast<int>(parse_double(key, value));
    else if (key == "substeps") substeps = static_cast<int>(parse_double(key, value));
    else if (key == "min_tick") min_tick = parse_double(key, value);
    else if (key == "price_floor") price_floor = parse_double(key, value);
    else if (key == "strike_step") strike_step = parse_double(key, value);
    else if (key == "ci_level") ci_level = parse_double(key, value);
    else if (key == "max_missing_frac") max_missing_frac = parse_double(key, value);
    else if (key == "workers") workers = static_cast<int>(parse_double(key, value));
    else if (key == "exclude_dates") {
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) exclude_dates.insert(item);
        }
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    ScenarioConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: " + stripped);
        }
        config.apply_key_value(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return config;
}

int resolve_workers(int configured) {
    if (const char* env = std::getenv("OVV_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    if (configured > 0) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::VV_T: return "vv_t";
        case Estimator::VV_Tp: return "vv_tprime";
        case Estimator::VV_TTp: return "vv_two_tenor";
        case Estimator::VV_Ret: return "vv_return";
        case Estimator::LV_T: return "lv_t";
        case Estimator::LV_Tp: return "lv_tprime";
        case Estimator::LV_TTp: return "lv_two_tenor";
        case Estimator::LV_Ret: return "lv_return";
    }
    return "?";
}

GroundTruth ground_truth(const ModelParams& params, double v0, Transform transform) {
    params.validate();
    if (!(v0 > 0.0)) throw std::invalid_argument("ground_truth: v0 must be > 0");
    const double deriv = transform_deriv(v0, transform);
    GroundTruth truth;
    truth.vv = v0 * deriv * deriv * params.sigma_v * params.sigma_v;
    truth.lv = v0 * deriv * params.rho * params.sigma_v;
    return truth;
}

WindowThresholds WindowThresholds::infinite() { return {kInf, kInf, kInf}; }

namespace {

struct TransformedSeries {
    std::vector<double> values;   // per slot, NaN = missing
    std::vector<double> x;        // log forward per slot
};

// Increment series in the back-in-time convention (i = 1 most recent) from
// forward slot values.
IncrementSeries to_increments(const std::vector<double>& values, const std::vector<double>& x,
                              double delta_n) {
    const int k_n = static_cast<int>(values.size()) - 1;
    IncrementSeries series;
    series.delta_n = delta_n;
    series.v_increments.resize(k_n);
    series.x_increments.resize(k_n);
    series.missing.resize(k_n);
    for (int i = 1; i <= k_n; ++i) {
        const int hi = k_n - i + 1;
        const int lo = k_n - i;
        const double dv = values[hi] - values[lo];
        series.v_increments[i - 1] = std::isfinite(dv) ? dv : 0.0;
        series.x_increments[i - 1] = x[hi] - x[lo];
        series.missing[i - 1] = std::isfinite(dv) ? 0 : 1;
    }
    return series;
}

std::vector<double> abs_increments(const IncrementSeries& series) {
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        out[i] = series.present(i) ? std::abs(series.v_increments[i]) : 0.0;
    }
    return out;
}

double atm_implied_vol(const TenorQuotes& slice, double forward) {
    std::vector<std::size_t> order(slice.strikes.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(slice.strikes[a] - forward) < std::abs(slice.strikes[b] - forward);
    });
    for (std::size_t j : order) {
        const OptionSide side = slice.strikes[j] <= forward ? OptionSide::Put : OptionSide::Call;
        try {
            return implied_vol(slice.prices[j], forward, slice.strikes[j], slice.tenor, side);
        } catch (const std::domain_error&) {
            continue;
        }
    }
    throw std::runtime_error("estimate_window: no at-the-money quote inverts to an implied vol");
}

}  // namespace

WindowEstimates estimate_window(const std::vector<const OptionPanel*>& slot_panels,
                                const WindowSettings& settings) {
    const int k_n = static_cast<int>(slot_panels.size()) - 1;
    if (k_n < 2) throw std::invalid_argument("estimate_window: need at least 3 slots");

    WindowEstimates out;

    std::vector<std::optional<OptionPanel>> interp(slot_panels.size());
    for (std::size_t j = 0; j < slot_panels.size(); ++j) {
        if (slot_panels[j] == nullptr) continue;
        try {
            InterpolationResult res = interpolate_panel(*slot_panels[j], settings.mesh);
            out.dropped_quotes += res.dropped_quotes;
            if (res.panel.tenors.size() != 2) {
                throw std::runtime_error("estimate_window: panels need two tenor slices");
            }
            interp[j] = std::move(res.panel);
        } catch (const std::exception&) {
            interp[j].reset();  // slot becomes a missing observation
        }
    }

    const auto first = std::find_if(interp.begin(), interp.end(),
                                    [](const auto& p) { return p.has_value(); });
    if (first == interp.end()) {
        throw std::runtime_error("estimate_window: every slot failed interpolation");
    }
    const OptionPanel& anchor = **first;
    // u is chosen once per window from the first observation; the u-bar cap
    // uses the shortest-maturity ATM implied vol.
    const double atm_iv = atm_implied_vol(anchor.tenors[0], anchor.forward);
    out.u_short = select_u(anchor.tenors[0], anchor.forward, atm_iv);
    out.u_long = select_u(anchor.tenors[1], anchor.forward, atm_iv);

    std::vector<double> v_t(interp.size(), kNaN), v_tp(interp.size(), kNaN),
        v_ttp(interp.size(), kNaN), x(interp.size(), 0.0);
    for (std::size_t j = 0; j < interp.size(); ++j) {
        if (!interp[j]) continue;
        const OptionPanel& panel = *interp[j];
        x[j] = std::log(panel.forward);
        const TenorQuotes& short_slice = panel.tenors[0];
        const TenorQuotes& long_slice = panel.tenors[1];

        const auto sv_short = spot_variance(estimate_cf(short_slice, panel.forward, out.u_short.u),
                                            out.u_short.u, settings.transform);
        if (sv_short.valid) v_t[j] = sv_short.transformed;

        const auto sv_short_ul = spot_variance(estimate_cf(short_slice, panel.forward, out.u_long.u),
                                               out.u_long.u, settings.transform);
        const auto sv_long_ul = spot_variance(estimate_cf(long_slice, panel.forward, out.u_long.u),
                                              out.u_long.u, settings.transform);
        if (sv_long_ul.valid) v_tp[j] = sv_long_ul.transformed;
        if (sv_short_ul.valid && sv_long_ul.valid) {
            v_ttp[j] = two_tenor_combine(sv_short_ul.transformed, sv_long_ul.transformed,
                                         short_slice.tenor, long_slice.tenor);
        }
    }

    // Slots without a panel poison both adjacent increments, price side
    // included.
    for (std::size_t j = 0; j < interp.size(); ++j) {
        if (!interp[j]) x[j] = kNaN;
    }

    const auto build = [&](const std::vector<double>& values) {
        IncrementSeries s = to_increments(values, x, settings.delta_n);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!std::isfinite(s.x_increments[i])) {
                s.missing[i] = 1;
                s.x_increments[i] = 0.0;
            }
        }
        return s;
    };

    IncrementSeries series_t = build(v_t);
    IncrementSeries series_tp = build(v_tp);
    IncrementSeries series_ttp = build(v_ttp);

    out.abs_incr_t = abs_increments(series_t);
    out.abs_incr_tp = abs_increments(series_tp);
    out.abs_incr_ttp = abs_increments(series_ttp);

    out.vv_t = vv_result(series_t, settings.thresholds.vv_t, settings.ci_level);
    out.vv_tp = vv_result(series_tp, settings.thresholds.vv_tp, settings.ci_level);
    out.vv_ttp = vv_result(series_ttp, settings.thresholds.vv_ttp, settings.ci_level);
    out.lv_t = lv_result(series_t, settings.thresholds.vv_t, settings.ci_level);
    out.lv_tp = lv_result(series_tp, settings.thresholds.vv_tp, settings.ci_level);
    out.lv_ttp = lv_result(series_ttp, settings.thresholds.vv_ttp, settings.ci_level);

    const auto rejected = [&](const VVLVResult& r) {
        return r.missing_count > settings.max_missing_frac * k_n;
    };
    out.rejected_t = rejected(out.vv_t);
    out.rejected_tp = rejected(out.vv_tp);
    out.rejected_ttp = rejected(out.vv_ttp);
    return out;
}

WindowSettings WindowSettings::from(const ScenarioConfig& config) {
    WindowSettings settings;
    settings.delta_n = config.delta_n;
    settings.mesh = config.mesh;
    settings.transform = config.transform;
    settings.ci_level = config.ci_level;
    settings.max_missing_frac = config.max_missing_frac;
    settings.thresholds = WindowThresholds::infinite();
    return settings;
}

std::vector<double> tenor_ladder(const ScenarioConfig& config) {
    std::vector<double> ladder;
    ladder.reserve(2 * (config.k_n + 1));
    for (int j = 0; j <= config.k_n; ++j) ladder.push_back(slot_tenor(config, j, false));
    for (int j = 0; j <= config.k_n; ++j) ladder.push_back(slot_tenor(config, j, true));
    return ladder;
}

std::uint64_t replication_path_seed(const ScenarioConfig& config, int rep_index) {
    return derive_seed(config.seed, rep_index, 0);
}

PanelPricer make_panel_pricer(const ScenarioConfig& config) {
    PanelPricer::Options options;
    // The node grid must keep pricing exact if the variance path drifts well
    // below its starting point during the window; rare deeper excursions fall
    // back to the adaptive pricer automatically. Node-tail truncation keeps
    // the per-strike cost tied to the actual variance, so a deep floor is
    // nearly free.
    options.v_floor = std::max(1.5e-4, 0.02 * config.start_variance());
    return PanelPricer(config.params, tenor_ladder(config), options);
}

std::vector<OptionPanel> synth_panels(const ScenarioConfig& config, const PanelPricer& pricer,
                                      const PricePath& path, int rep_index) {
    const int k_n = config.k_n;
    StrikeGridOptions grid_options;
    grid_options.price_floor = config.price_floor;
    grid_options.step = config.strike_step;

    std::vector<OptionPanel> panels;
    panels.reserve(k_n + 1);
    for (int j = 0; j <= k_n; ++j) {
        const std::size_t fine = static_cast<std::size_t>(j) * config.l_n;
        const double x = path.log_price[fine];
        const double v = path.variance[fine];
        const double forward = std::exp(x);

        OptionPanel panel;
        panel.obs_time = j * config.delta_n;
        panel.forward = forward;
        // One strike listing serves both maturities, the way exchange chains
        // do: every multiple of `step` stays listed while either tenor's true
        // OTM price is at or above the floor.
        const PanelPricer::Slice slices[2] = {
            pricer.slice(pricer.tenor_index(slot_tenor(config, j, false)), v),
            pricer.slice(pricer.tenor_index(slot_tenor(config, j, true)), v)};
        GridQuotes grids[2] = {grid_quotes(slices[0], forward, grid_options),
                               grid_quotes(slices[1], forward, grid_options)};
        const double lo_strike = std::min(grids[0].strikes.front(), grids[1].strikes.front());
        const double hi_strike = std::max(grids[0].strikes.back(), grids[1].strikes.back());
        const double dust = 1e-8 * forward;  // strikes below this are not quoted
        for (int which = 0; which < 2; ++which) {
            TenorQuotes quotes;
            quotes.set_tenor_days(slot_tenor_days(config, j, which == 1));
            for (double strike = lo_strike; strike <= hi_strike + 0.5 * grid_options.step;
                 strike += grid_options.step) {
                const double price = slices[which].price(forward, strike);
                if (price < dust) continue;
                quotes.strikes.push_back(strike);
                quotes.prices.push_back(price);
            }
            panel.tenors.push_back(std::move(quotes));
        }
        // The mesh densification runs on true prices, so every quote of the
        // observed panel carries its own independent error draw. Interpolating
        // noisy coarse quotes instead would correlate neighboring errors and
        // double the estimators' noise variance.
        OptionPanel dense = interpolate_panel(panel, config.mesh).panel;
        panels.push_back(observe_panel(dense, config.noise_scale,
                                       derive_seed(config.seed, rep_index, 1000 + j),
                                       config.min_tick));
    }
    return panels;
}

ReplicationResult run_replication(const ScenarioConfig& config, const PanelPricer& pricer,
                                  int rep_index) {
    config.validate();
    ReplicationResult result;
    result.rep_index = rep_index;
    result.v0 = config.start_variance();

    const double horizon = config.k_n * config.delta_n;
    const std::int64_t n_fine = static_cast<std::int64_t>(config.k_n) * config.l_n;
    const PricePath path = simulate_path(config.params, result.v0, horizon, n_fine,
                                         config.substeps, derive_seed(config.seed, rep_index, 0));

    const std::vector<OptionPanel> panels = synth_panels(config, pricer, path, rep_index);
    std::vector<const OptionPanel*> slots(panels.size());
    for (std::size_t j = 0; j < panels.size(); ++j) slots[j] = &panels[j];
    result.window = estimate_window(slots, WindowSettings::from(config));

    // Return-based competitors on the fine grid (no truncation: the simulated
    // paths carry no volatility jumps).
    const double delta_fine = config.delta_n / config.l_n;
    std::vector<double> returns(n_fine);
    for (std::int64_t f = 0; f < n_fine; ++f) {
        returns[f] = path.log_price[f + 1] - path.log_price[f];
    }
    try {
        const RvBv bipower = rv_bv(returns, delta_fine);
        result.u_ret = select_u_ret(bipower);

        const int k_n = config.k_n;
        std::vector<double> v_ret(k_n);  // back-in-time index 0..k_n-1
        for (int i = 0; i <= k_n - 1; ++i) {
            const int j = k_n - i;
            const std::vector<double> block(returns.begin() + (j - 1) * config.l_n,
                                            returns.begin() + j * config.l_n);
            const double sigma2 = return_spot_variance(block, result.u_ret, delta_fine);
            v_ret[i] = (std::isfinite(sigma2) && sigma2 > 0.0)
                           ? apply_transform(sigma2, config.transform)
                           : kNaN;
        }
        std::vector<double> dv(k_n - 1);
        for (int i = 1; i <= k_n - 1; ++i) dv[i - 1] = v_ret[i - 1] - v_ret[i];
        std::vector<double> two_step(k_n - 2);
        for (int i = 1; i <= k_n - 2; ++i) {
            const int j = k_n - i;
            two_step[i - 1] = path.log_price[(j + 1) * static_cast<std::size_t>(config.l_n)] -
                              path.log_price[(j - 1) * static_cast<std::size_t>(config.l_n)];
        }
        result.vv_ret = vv_ret_estimate(dv, k_n, config.delta_n, kInf);
        result.lv_ret = lv_ret_estimate(two_step, dv, k_n, config.delta_n, kInf);
        result.return_based_ok = std::isfinite(result.vv_ret) && std::isfinite(result.lv_ret);
    } catch (const std::exception&) {
        result.return_based_ok = false;
    }
    return result;
}

ReplicationResult run_replication(const ScenarioConfig& config, int rep_index) {
    const PanelPricer pricer = make_panel_pricer(config);
    return run_replication(config, pricer, rep_index);
}

namespace {

struct Extracted {
    double estimate = kNaN;
    double avar = kNaN;
    double ci_low = kNaN, ci_high = kNaN;
    bool usable = false;
    bool has_ci = false;
};

Extracted extract(const ReplicationResult& rep, Estimator which) {
    const auto from_result = [](const VVLVResult& r, bool rejected) {
        Extracted e;
        e.estimate = r.estimate;
        e.avar = r.avar;
        e.ci_low = r.ci_low;
        e.ci_high = r.ci_high;
        e.usable = r.valid && !rejected;
        e.has_ci = true;
        return e;
    };
    const WindowEstimates& w = rep.window;
    switch (which) {
        case Estimator::VV_T: return from_result(w.vv_t, w.rejected_t);
        case Estimator::VV_Tp: return from_result(w.vv_tp, w.rejected_tp);
        case Estimator::VV_TTp: return from_result(w.vv_ttp, w.rejected_ttp);
        case Estimator::LV_T: return from_result(w.lv_t, w.rejected_t);
        case Estimator::LV_Tp: return from_result(w.lv_tp, w.rejected_tp);
        case Estimator::LV_TTp: return from_result(w.lv_ttp, w.rejected_ttp);
        case Estimator::VV_Ret: {
            Extracted e;
            e.estimate = rep.vv_ret;
            e.usable = rep.return_based_ok;
            return e;
        }
        case Estimator::LV_Ret: {
            Extracted e;
            e.estimate = rep.lv_ret;
            e.usable = rep.return_based_ok;
            return e;
        }
    }
    return {};
}

}  // namespace

McSummary run_mc(const ScenarioConfig& config) {
    config.validate();
    McSummary summary;
    summary.replications = config.replications;
    summary.truth = ground_truth(config.params, config.start_variance(), config.transform);

    const PanelPricer pricer = make_panel_pricer(config);
    std::vector<ReplicationResult> results(config.replications);

    const int workers = resolve_workers(config.workers);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= config.replications) return;
            results[rep] = run_replication(config, pricer, rep);
        }
    };
    if (workers <= 1 || config.replications == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (Estimator which : kAllEstimators) {
        const bool is_vv = which == Estimator::VV_T || which == Estimator::VV_Tp ||
                           which == Estimator::VV_TTp || which == Estimator::VV_Ret;
        const double truth = is_vv ? summary.truth.vv : summary.truth.lv;
        EstimatorSummary row;
        row.truth = truth;
        auto& estimates = summary.estimates[which];
        auto& avars = summary.avars[which];
        estimates.assign(config.replications, kNaN);
        avars.assign(config.replications, kNaN);

        double sum = 0.0, sum_sq = 0.0;
        int covered = 0, with_ci = 0;
        for (const auto& rep : results) {
            const Extracted e = extract(rep, which);
            if (!e.usable || !std::isfinite(e.estimate)) {
                ++row.rejected_reps;
                continue;
            }
            estimates[rep.rep_index] = e.estimate;
            avars[rep.rep_index] = e.avar;
            sum += e.estimate;
            sum_sq += e.estimate * e.estimate;
            ++row.used_reps;
            if (e.has_ci) {
                ++with_ci;
                if (e.ci_low <= truth && truth <= e.ci_high) ++covered;
            }
        }
        if (row.used_reps > 0) {
            const double mean = sum / row.used_reps;
            const double var = std::max(0.0, sum_sq / row.used_reps - mean * mean);
            row.rel_bias = (mean - truth) / truth;
            row.rel_std = std::sqrt(var) / std::abs(truth);
            row.rel_rmse = std::sqrt(row.rel_bias * row.rel_bias + row.rel_std * row.rel_std);
            row.coverage = with_ci > 0 ? static_cast<double>(covered) / with_ci : kNaN;
        } else {
            row.rel_bias = row.rel_std = row.rel_rmse = row.coverage = kNaN;
        }
        summary.rows[which] = row;
    }
    return summary;
}

void write_mc_csv(const McSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_mc_csv: cannot open '" + path + "'");
    out << "estimator,truth,rel_bias,rel_std,rel_rmse,coverage,used_reps,rejected_reps\n";
    out.precision(17);
    for (const auto& [which, row] : summary.rows) {
        out << estimator_name(which) << ',' << row.truth << ',' << row.rel_bias << ','
            << row.rel_std << ',' << row.rel_rmse << ',' << row.coverage << ','
            << row.used_reps << ',' << row.rejected_reps << '\n';
    }
}

}  // namespace ovv
