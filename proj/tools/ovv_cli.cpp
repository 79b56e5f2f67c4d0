#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ovv/harness.hpp"

namespace {

// Flat key=value overrides shared by every subcommand; CLI flags carry the
// same names as the config-file keys.
struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;  // raw key=value pairs from --set
    std::map<std::string, std::string> keyed;

    ovv::ScenarioConfig build() const {
        ovv::ScenarioConfig config;
        if (!config_path.empty()) config = ovv::ScenarioConfig::from_file(config_path);
        for (const auto& [key, value] : keyed) config.apply_key_value(key, value);
        for (const auto& pair : sets) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("--set expects key=value, got: " + pair);
            }
            config.apply_key_value(pair.substr(0, eq), pair.substr(eq + 1));
        }
        return config;
    }
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--set", args.sets, "override any config key, e.g. --set k_n=40")
        ->take_all();
    static const char* keys[] = {"case", "v0_quantile", "v0", "k_n", "delta_n", "tenor_days",
                                 "tenor2_days", "noise_scale", "mesh", "transform", "truncation",
                                 "replications", "seed", "l_n", "substeps", "min_tick",
                                 "price_floor", "strike_step", "ci_level", "workers",
                                 "exclude_dates", "theta_v", "kappa_v", "sigma_v", "rho",
                                 "lambda_minus", "lambda_plus", "c_minus", "c_plus", "x0"};
    for (const char* key : keys) {
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [&args, key](const std::string& value) { args.keyed[key] = value; },
            std::string("config key ") + key);
    }
}

void print_result_line(const char* name, const ovv::VVLVResult& r, bool rejected) {
    std::printf("%-14s estimate=%12.6g avar=%12.6g ci=[%12.6g, %12.6g] k_n=%d missing=%d%s%s\n",
                name, r.estimate, r.avar, r.ci_low, r.ci_high, r.k_n, r.missing_count,
                r.avar_floored ? " avar_floored" : "", rejected ? " REJECTED" : "");
}

int cmd_truth(const CommonArgs& common) {
    const ovv::ScenarioConfig config = common.build();
    config.validate();
    const double v0 = config.start_variance();
    const ovv::GroundTruth truth =
        ovv::ground_truth(config.params, v0, config.transform);
    std::printf("case=%s transform=%s v0=%.10g\n", config.case_name.c_str(),
                ovv::transform_name(config.transform), v0);
    std::printf("vv_true=%.10g\nlv_true=%.10g\n", truth.vv, truth.lv);
    return 0;
}

int cmd_replication(const CommonArgs& common, int rep_index, const std::string& emit_panels) {
    const ovv::ScenarioConfig config = common.build();
    config.validate();
    const ovv::PanelPricer pricer = ovv::make_panel_pricer(config);
    const ovv::ReplicationResult result = ovv::run_replication(config, pricer, rep_index);

    std::printf("replication=%d v0=%.10g u_short=%.6g u_long=%.6g u_ret=%.6g dropped_quotes=%d\n",
                rep_index, result.v0, result.window.u_short.u, result.window.u_long.u,
                result.u_ret, result.window.dropped_quotes);
    print_result_line("vv_t", result.window.vv_t, result.window.rejected_t);
    print_result_line("vv_tprime", result.window.vv_tp, result.window.rejected_tp);
    print_result_line("vv_two_tenor", result.window.vv_ttp, result.window.rejected_ttp);
    print_result_line("lv_t", result.window.lv_t, result.window.rejected_t);
    print_result_line("lv_tprime", result.window.lv_tp, result.window.rejected_tp);
    print_result_line("lv_two_tenor", result.window.lv_ttp, result.window.rejected_ttp);
    std::printf("vv_return     estimate=%12.6g\nlv_return     estimate=%12.6g\n", result.vv_ret,
                result.lv_ret);

    if (!emit_panels.empty()) {
        ovv::write_panels_csv(emit_panels, ovv::panels_of_replication(config, pricer, rep_index));
        std::printf("panels written to %s\n", emit_panels.c_str());
    }
    return 0;
}

int cmd_mc(const CommonArgs& common, const std::string& out_csv) {
    const ovv::ScenarioConfig config = common.build();
    config.validate();
    const ovv::McSummary summary = ovv::run_mc(config);
    std::printf("case=%s v0=%.6g transform=%s replications=%d (vv_true=%.6g lv_true=%.6g)\n",
                config.case_name.c_str(), config.start_variance(),
                ovv::transform_name(config.transform), summary.replications, summary.truth.vv,
                summary.truth.lv);
    std::printf("%-14s %10s %10s %10s %10s %6s %6s\n", "estimator", "rel_bias", "rel_std",
                "rel_rmse", "cover95", "used", "rej");
    for (const auto& [which, row] : summary.rows) {
        std::printf("%-14s %10.4f %10.4f %10.4f %10.4f %6d %6d\n", ovv::estimator_name(which),
                    row.rel_bias, row.rel_std, row.rel_rmse, row.coverage, row.used_reps,
                    row.rejected_reps);
    }
    if (!out_csv.empty()) {
        ovv::write_mc_csv(summary, out_csv);
        std::printf("summary written to %s\n", out_csv.c_str());
    }
    return 0;
}

int cmd_price_panel(const CommonArgs& common, int rep_index, const std::string& out_csv) {
    const ovv::ScenarioConfig config = common.build();
    config.validate();
    const ovv::PanelPricer pricer = ovv::make_panel_pricer(config);
    ovv::write_panels_csv(out_csv, ovv::panels_of_replication(config, pricer, rep_index));
    std::printf("panels of replication %d written to %s\n", rep_index, out_csv.c_str());
    return 0;
}

int cmd_empirical(const CommonArgs& common, const std::string& data_path,
                  const std::string& out_csv, bool emit_plot_data) {
    const ovv::ScenarioConfig config = common.build();
    ovv::FilterConfig filters;
    filters.delta_n = config.delta_n;
    filters.exclude_dates = config.exclude_dates;
    ovv::IngestAudit audit;
    const ovv::EmpiricalOutput output = ovv::run_empirical(data_path, config, filters, &audit);
    ovv::write_empirical_csv(output, out_csv);
    std::printf("days=%zu rows_read=%ld malformed=%ld dropped_bid=%ld dropped_spread=%ld "
                "maturities_gap=%ld maturities_edge=%ld days_without_pair=%ld panels_dropped=%ld\n",
                output.dates.size(), audit.rows_read, audit.rows_malformed,
                audit.quotes_dropped_bid, audit.quotes_dropped_spread,
                audit.maturities_dropped_gap, audit.maturities_dropped_edge,
                audit.days_without_pair, audit.panels_dropped);
    for (const auto& message : audit.messages) std::fprintf(stderr, "note: %s\n", message.c_str());
    std::printf("daily estimates written to %s\n", out_csv.c_str());
    if (emit_plot_data) {
        const std::string plot_path = out_csv + ".plot.csv";
        ovv::write_plot_data(output, plot_path);
        std::printf("plot data written to %s\n", plot_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Option-implied spot volatility-of-volatility and leverage-effect estimation"};
    app.require_subcommand(1);

    CommonArgs truth_args, rep_args, mc_args, panel_args, emp_args;
    int rep_index = 0, panel_rep_index = 0;
    std::string rep_emit_panels, mc_out, panel_out = "panels.csv";
    std::string emp_data, emp_out = "empirical.csv";
    bool emit_plot = false;

    CLI::App* truth = app.add_subcommand("truth", "print the model-implied true VV and LV");
    add_common_options(truth, truth_args);

    CLI::App* rep = app.add_subcommand("replication", "run one replication with diagnostics");
    add_common_options(rep, rep_args);
    rep->add_option("--rep", rep_index, "replication index");
    rep->add_option("--emit-panels", rep_emit_panels, "write the observed panels to a CSV file");

    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo summary over replications");
    add_common_options(mc, mc_args);
    mc->add_option("--out", mc_out, "write the summary table to a CSV file");

    CLI::App* panel = app.add_subcommand("price-panel", "synthesize observed panels to CSV");
    add_common_options(panel, panel_args);
    panel->add_option("--rep", panel_rep_index, "replication index");
    panel->add_option("--out", panel_out, "output CSV path");

    CLI::App* emp = app.add_subcommand("empirical", "estimate daily VV/LV from panel CSV files");
    add_common_options(emp, emp_args);
    emp->add_option("--data", emp_data, "CSV file or directory of CSV files")->required();
    emp->add_option("--out", emp_out, "output CSV path");
    emp->add_flag("--emit-plot-data", emit_plot, "also write x/y series for plotting");

    CLI11_PARSE(app, argc, argv);

    try {
        if (truth->parsed()) return cmd_truth(truth_args);
        if (rep->parsed()) return cmd_replication(rep_args, rep_index, rep_emit_panels);
        if (mc->parsed()) return cmd_mc(mc_args, mc_out);
        if (panel->parsed()) return cmd_price_panel(panel_args, panel_rep_index, panel_out);
        if (emp->parsed()) return cmd_empirical(emp_args, emp_data, emp_out, emit_plot);
    } catch (const ovv::IoError& e) {
        std::fprintf(stderr, "error category=io: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error category=config: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error category=numeric: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error category=internal: %s\n", e.what());
        return 5;
    }
    return 0;
}
