#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ovv/affine_pricer.hpp"
#include "ovv/bs_toolkit.hpp"
#include "ovv/charfn.hpp"
#include "ovv/sde_sim.hpp"
#include "ovv/vv_lv.hpp"

namespace ovv {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TruncationMode { Infinite, Empirical };

struct ScenarioConfig {
    std::string case_name = "M";  // S | M | F | custom (explicit params)
    ModelParams params = ModelParams::case_m();
    double v0_quantile = 0.5;
    std::optional<double> v0;  // explicit start variance overrides the quantile
    int k_n = 80;
    double delta_n = 1.0 / (252.0 * 80.0);
    double tenor_days = 3.0;
    double tenor2_days = 6.0;
    double noise_scale = 0.015;
    double mesh = 2.5;
    Transform transform = Transform::Log;
    TruncationMode truncation = TruncationMode::Infinite;
    int replications = 1000;
    std::uint64_t seed = 20240801;
    int l_n = 72;
    int substeps = 10;
    double min_tick = 0.01;
    double price_floor = 0.075;
    double strike_step = 5.0;
    double ci_level = 0.95;
    double max_missing_frac = 0.10;
    int workers = 0;  // 0 = hardware concurrency; OVV_WORKERS overrides
    std::set<std::string> exclude_dates;

    double short_tenor() const { return tenor_days / 252.0; }
    double long_tenor() const { return tenor2_days / 252.0; }
    double start_variance() const;
    void validate() const;

    // Flat key=value round trip (CLI flags share the key names).
    static ScenarioConfig from_file(const std::string& path);
    void apply_key_value(const std::string& key, const std::string& value);
};

int resolve_workers(int configured);

enum class Estimator { VV_T, VV_Tp, VV_TTp, VV_Ret, LV_T, LV_Tp, LV_TTp, LV_Ret };
const char* estimator_name(Estimator e);
constexpr std::array<Estimator, 8> kAllEstimators = {
    Estimator::VV_T,  Estimator::VV_Tp,  Estimator::VV_TTp,  Estimator::VV_Ret,
    Estimator::LV_T,  Estimator::LV_Tp,  Estimator::LV_TTp,  Estimator::LV_Ret};

// True (VV, LV) of the transformed variance for the square-root variance
// model started at v0: VV = 4 v0 F'(v0)^2 sigma_v^2 / 4, LV = v0 F'(v0) rho sigma_v.
struct GroundTruth {
    double vv = 0.0;
    double lv = 0.0;
};
GroundTruth ground_truth(const ModelParams& params, double v0, Transform transform);

// Per-estimator empirical truncation thresholds; infinity() means none.
struct WindowThresholds {
    double vv_t, vv_tp, vv_ttp;
    static WindowThresholds infinite();
};

struct WindowEstimates {
    USelection u_short, u_long;
    VVLVResult vv_t, vv_tp, vv_ttp, lv_t, lv_tp, lv_ttp;
    int dropped_quotes = 0;
    // raw |increment| series per estimator, for the empirical threshold
    std::vector<double> abs_incr_t, abs_incr_tp, abs_incr_ttp;
    bool rejected_t = false, rejected_tp = false, rejected_ttp = false;  // >10% missing
};

struct WindowSettings {
    double delta_n = 1.0 / (252.0 * 80.0);
    double mesh = 2.5;
    Transform transform = Transform::Log;
    double ci_level = 0.95;
    double max_missing_frac = 0.10;
    WindowThresholds thresholds = WindowThresholds::infinite();

    static WindowSettings from(const ScenarioConfig& config);
};

// Core pipeline over one window: interpolate panels, select u at the first
// observation, recover transformed spot variances, difference, estimate.
// `slot_panels` has one entry per grid slot (k_n + 1 slots); null entries are
// missing observation times and propagate as missing increments. Panels need
// two tenor slices (short first).
WindowEstimates estimate_window(const std::vector<const OptionPanel*>& slot_panels,
                                const WindowSettings& settings);

struct ReplicationResult {
    int rep_index = 0;
    double v0 = 0.0;
    WindowEstimates window;
    double vv_ret = 0.0;
    double lv_ret = 0.0;
    double u_ret = 0.0;
    bool return_based_ok = false;
};

// Synthesized observed (noisy) panels of one replication, slot j = 0..k_n.
std::vector<OptionPanel> synth_panels(const ScenarioConfig& config, const PanelPricer& pricer,
                                      const PricePath& path, int rep_index);

// Tenor ladder (short then long expiry, slot-major) registered with the pricer.
std::vector<double> tenor_ladder(const ScenarioConfig& config);
PanelPricer make_panel_pricer(const ScenarioConfig& config);
std::uint64_t replication_path_seed(const ScenarioConfig& config, int rep_index);

ReplicationResult run_replication(const ScenarioConfig& config, const PanelPricer& pricer,
                                  int rep_index);
ReplicationResult run_replication(const ScenarioConfig& config, int rep_index);

struct EstimatorSummary {
    double truth = 0.0;
    double rel_bias = 0.0;
    double rel_std = 0.0;   // population standard deviation / |truth|
    double rel_rmse = 0.0;  // sqrt(bias^2 + std^2) exactly
    double coverage = 0.0;  // fraction of CIs containing the truth (option-based only)
    int used_reps = 0;
    int rejected_reps = 0;
};

struct McSummary {
    std::map<Estimator, EstimatorSummary> rows;
    GroundTruth truth;
    int replications = 0;
    // per-estimator estimates by replication index (NaN when rejected)
    std::map<Estimator, std::vector<double>> estimates;
    std::map<Estimator, std::vector<double>> avars;
};

McSummary run_mc(const ScenarioConfig& config);
void write_mc_csv(const McSummary& summary, const std::string& path);

// ---- panel CSV files (schema: date,time,tenor_days,strike,bid,ask,forward) ----

struct PanelRecord {
    std::string date;  // lexicographically sortable day key
    std::string time;  // lexicographically sortable intraday key
    OptionPanel panel;
};

void write_panels_csv(const std::string& path, const std::vector<PanelRecord>& records);
std::vector<PanelRecord> panels_of_replication(const ScenarioConfig& config,
                                               const PanelPricer& pricer, int rep_index);

struct FilterConfig {
    double max_ask_bid_ratio = 10.0;
    double max_atm_gap = 5.0;
    double max_edge_ratio = 0.025;
    double min_tenor_days = 2.0;
    double max_tenor_days = 16.0;
    double min_tenor_gap_days = 3.0;
    std::set<std::string> exclude_dates;
    double delta_n = 1.0 / (252.0 * 80.0);
};

struct IngestAudit {
    long rows_read = 0;
    long rows_malformed = 0;
    long quotes_dropped_bid = 0;
    long quotes_dropped_spread = 0;
    long maturities_dropped_gap = 0;
    long maturities_dropped_edge = 0;
    long days_excluded = 0;
    long days_without_pair = 0;
    long panels_dropped = 0;
    std::vector<std::string> messages;
};

struct IngestedDay {
    std::string date;
    int k_n = 0;                               // slots - 1
    std::vector<std::optional<OptionPanel>> slots;  // ascending time
};

// Reads every .csv under `path` (or `path` itself when it is a file), applies
// the quote/maturity/day filters and returns per-day slot panels with an
// audit trail of everything that was dropped.
std::vector<IngestedDay> ingest_panels(const std::string& path, const FilterConfig& filters,
                                       IngestAudit* audit = nullptr);

struct DailyEstimate {
    std::string date;
    Estimator estimator;
    VVLVResult result;
    std::string flags;
};

struct EmpiricalOutput {
    std::vector<DailyEstimate> daily;
    // 5-day moving averages per estimator, aligned with `dates`
    std::vector<std::string> dates;
    std::map<Estimator, std::vector<double>> moving_averages;
};

EmpiricalOutput run_empirical(const std::string& csv_path, const ScenarioConfig& config,
                              const FilterConfig& filters, IngestAudit* audit = nullptr);
void write_empirical_csv(const EmpiricalOutput& output, const std::string& path);
void write_plot_data(const EmpiricalOutput& output, const std::string& path);

std::vector<double> moving_average(const std::vector<double>& values, int window = 5);

}  // namespace ovv
