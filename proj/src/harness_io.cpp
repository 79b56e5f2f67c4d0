#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ovv/harness.hpp"

namespace ovv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double x) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

std::string pad_int(long value, int width) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%0*ld", width, value);
    return buffer;
}

struct CsvRow {
    std::string date, time;
    double tenor_days, strike, bid, ask, forward;
};

bool parse_row(const std::string& line, CsvRow& row) {
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) return false;
    try {
        std::size_t pos;
        row.date = fields[0];
        row.time = fields[1];
        row.tenor_days = std::stod(fields[2], &pos);
        row.strike = std::stod(fields[3], &pos);
        row.bid = std::stod(fields[4], &pos);
        row.ask = std::stod(fields[5], &pos);
        row.forward = std::stod(fields[6], &pos);
    } catch (const std::exception&) {
        return false;
    }
    return std::isfinite(row.tenor_days) && std::isfinite(row.strike) &&
           std::isfinite(row.bid) && std::isfinite(row.ask) && std::isfinite(row.forward);
}

}  // namespace

void write_panels_csv(const std::string& path, const std::vector<PanelRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("write_panels_csv: cannot open '" + path + "'");
    out << "date,time,tenor_days,strike,bid,ask,forward\n";
    for (const auto& record : records) {
        for (const auto& slice : record.panel.tenors) {
            for (std::size_t j = 0; j < slice.strikes.size(); ++j) {
                const std::string price = fmt17(slice.prices[j]);
                out << record.date << ',' << record.time << ',' << fmt17(slice.tenor_days) << ','
                    << fmt17(slice.strikes[j]) << ',' << price << ',' << price << ','
                    << fmt17(record.panel.forward) << '\n';
            }
        }
    }
}

std::vector<PanelRecord> panels_of_replication(const ScenarioConfig& config,
                                               const PanelPricer& pricer, int rep_index) {
    config.validate();
    const double horizon = config.k_n * config.delta_n;
    const std::int64_t n_fine = static_cast<std::int64_t>(config.k_n) * config.l_n;
    const PricePath path = simulate_path(config.params, config.start_variance(), horizon, n_fine,
                                         config.substeps, replication_path_seed(config, rep_index));
    std::vector<OptionPanel> panels = synth_panels(config, pricer, path, rep_index);
    std::vector<PanelRecord> records;
    records.reserve(panels.size());
    for (std::size_t j = 0; j < panels.size(); ++j) {
        PanelRecord record;
        record.date = pad_int(0, 8);
        record.time = pad_int(static_cast<long>(j), 5);
        record.panel = std::move(panels[j]);
        records.push_back(std::move(record));
    }
    return records;
}

namespace {

struct RawQuote {
    double strike, mid;
};

struct MaturitySlice {
    double tenor_days = 0.0;
    double forward = 0.0;
    std::vector<RawQuote> quotes;  // sorted by strike
};

// (date -> time -> tenor_days -> slice)
using DayGroups = std::map<std::string, std::map<std::string, std::map<double, MaturitySlice>>>;

bool near_money_gap_ok(const MaturitySlice& slice, double max_gap) {
    std::vector<double> puts, calls;
    for (const auto& q : slice.quotes) {
        (q.strike <= slice.forward ? puts : calls).push_back(q.strike);
    }
    std::vector<double> near;
    const std::size_t np = std::min<std::size_t>(3, puts.size());
    for (std::size_t i = puts.size() - np; i < puts.size(); ++i) near.push_back(puts[i]);
    for (std::size_t i = 0; i < std::min<std::size_t>(3, calls.size()); ++i) near.push_back(calls[i]);
    for (std::size_t i = 1; i < near.size(); ++i) {
        if (near[i] - near[i - 1] > max_gap + 1e-9) return false;
    }
    return true;
}

bool edge_decay_ok(const MaturitySlice& slice, double max_ratio) {
    if (slice.quotes.empty()) return false;
    double max_price = 0.0;
    for (const auto& q : slice.quotes) max_price = std::max(max_price, q.mid);
    const double edge = std::max(slice.quotes.front().mid, slice.quotes.back().mid);
    return max_price > 0.0 && edge / max_price <= max_ratio + 1e-12;
}

}  // namespace

std::vector<IngestedDay> ingest_panels(const std::string& path, const FilterConfig& filters,
                                       IngestAudit* audit_out) {
    IngestAudit local_audit;
    IngestAudit& audit = audit_out ? *audit_out : local_audit;

    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw IoError("ingest_panels: no such file or directory: '" + path + "'");
    }
    if (files.empty()) throw IoError("ingest_panels: no .csv files under '" + path + "'");

    DayGroups groups;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("ingest_panels: cannot open '" + file + "'");
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 && line.rfind("date,", 0) == 0) continue;  // header
            if (line.empty()) continue;
            ++audit.rows_read;
            CsvRow row;
            if (!parse_row(line, row)) {
                ++audit.rows_malformed;
                audit.messages.push_back(file + ":" + std::to_string(line_no) + ": malformed row");
                continue;
            }
            if (filters.exclude_dates.count(row.date)) continue;
            if (!(row.bid > 0.0)) {
                ++audit.quotes_dropped_bid;
                continue;
            }
            if (!(row.ask / row.bid < filters.max_ask_bid_ratio)) {
                ++audit.quotes_dropped_spread;
                continue;
            }
            auto& slice = groups[row.date][row.time][row.tenor_days];
            slice.tenor_days = row.tenor_days;
            slice.forward = row.forward;
            slice.quotes.push_back({row.strike, 0.5 * (row.bid + row.ask)});
        }
    }

    std::vector<IngestedDay> days;
    for (auto& [date, times] : groups) {
        // Maturity-level filters per (time, maturity)
        for (auto& [time, maturities] : times) {
            for (auto it = maturities.begin(); it != maturities.end();) {
                auto& slice = it->second;
                std::sort(slice.quotes.begin(), slice.quotes.end(),
                          [](const RawQuote& a, const RawQuote& b) { return a.strike < b.strike; });
                if (!near_money_gap_ok(slice, filters.max_atm_gap)) {
                    ++audit.maturities_dropped_gap;
                    it = maturities.erase(it);
                } else if (!edge_decay_ok(slice, filters.max_edge_ratio)) {
                    ++audit.maturities_dropped_edge;
                    it = maturities.erase(it);
                } else {
                    ++it;
                }
            }
        }

        // Slot indices follow the sorted unique intraday times.
        std::vector<std::string> slots_keys;
        for (const auto& [time, _] : times) slots_keys.push_back(time);
        std::sort(slots_keys.begin(), slots_keys.end());
        const int n_slots = static_cast<int>(slots_keys.size());
        if (n_slots < 3) {
            audit.messages.push_back(date + ": fewer than 3 observation times, day skipped");
            ++audit.days_without_pair;
            continue;
        }

        // Group maturities into expiries: obs_time + tenor constant up to a
        // fraction of delta_n within the day.
        struct Expiry {
            double value;
            double first_tenor_days = kInf;
        };
        std::vector<Expiry> expiries;
        const double tol = filters.delta_n / 8.0;
        for (int slot = 0; slot < n_slots; ++slot) {
            const double obs_time = slot * filters.delta_n;
            for (const auto& [tenor_days, slice] : times[slots_keys[slot]]) {
                const double expiry = obs_time + TenorQuotes::years_of(tenor_days);
                bool found = false;
                for (auto& e : expiries) {
                    if (std::abs(e.value - expiry) < tol) {
                        e.first_tenor_days = std::min(e.first_tenor_days, tenor_days);
                        found = true;
                        break;
                    }
                }
                if (!found) expiries.push_back({expiry, tenor_days});
            }
        }

        // Tenor pair: shortest maturity inside the [min,max] business-day
        // window at its first observation, then the closest one at least
        // min_tenor_gap_days further out.
        std::sort(expiries.begin(), expiries.end(),
                  [](const Expiry& a, const Expiry& b) { return a.value < b.value; });
        const auto in_window = [&](const Expiry& e) {
            return e.first_tenor_days >= filters.min_tenor_days - 1e-9 &&
                   e.first_tenor_days <= filters.max_tenor_days + 1e-9;
        };
        const Expiry* short_expiry = nullptr;
        const Expiry* long_expiry = nullptr;
        for (const auto& e : expiries) {
            if (!in_window(e)) continue;
            if (!short_expiry) {
                short_expiry = &e;
            } else if (!long_expiry &&
                       e.first_tenor_days >=
                           short_expiry->first_tenor_days + filters.min_tenor_gap_days - 1e-9) {
                long_expiry = &e;
            }
        }
        if (!short_expiry || !long_expiry) {
            ++audit.days_without_pair;
            audit.messages.push_back(date + ": no admissible tenor pair, day skipped");
            continue;
        }

        IngestedDay day;
        day.date = date;
        day.k_n = n_slots - 1;
        day.slots.resize(n_slots);
        for (int slot = 0; slot < n_slots; ++slot) {
            const double obs_time = slot * filters.delta_n;
            const auto& maturities = times[slots_keys[slot]];
            const MaturitySlice* chosen[2] = {nullptr, nullptr};
            for (const auto& [tenor_days, slice] : maturities) {
                const double expiry = obs_time + TenorQuotes::years_of(tenor_days);
                if (std::abs(expiry - short_expiry->value) < tol) chosen[0] = &slice;
                if (std::abs(expiry - long_expiry->value) < tol) chosen[1] = &slice;
            }
            if (!chosen[0] || !chosen[1] || chosen[0]->quotes.size() < 3 ||
                chosen[1]->quotes.size() < 3) {
                ++audit.panels_dropped;
                continue;
            }
            OptionPanel panel;
            panel.obs_time = obs_time;
            panel.forward = chosen[0]->forward;
            for (int which = 0; which < 2; ++which) {
                TenorQuotes quotes;
                quotes.set_tenor_days(chosen[which]->tenor_days);
                for (const auto& q : chosen[which]->quotes) {
                    quotes.strikes.push_back(q.strike);
                    quotes.prices.push_back(q.mid);
                }
                panel.tenors.push_back(std::move(quotes));
            }
            day.slots[slot] = std::move(panel);
        }
        days.push_back(std::move(day));
    }
    audit.days_excluded = static_cast<long>(filters.exclude_dates.size());
    return days;
}

namespace {

std::string result_flags(const VVLVResult& result, bool rejected, bool upsilon_fallback) {
    std::string flags;
    const auto add = [&](const std::string& f) {
        if (!flags.empty()) flags += ';';
        flags += f;
    };
    if (rejected) add("rejected");
    if (result.avar_floored) add("avar_floored");
    if (upsilon_fallback) add("upsilon_fallback");
    if (result.missing_count > 0) add("missing=" + std::to_string(result.missing_count));
    if (result.truncated_count > 0) add("truncated=" + std::to_string(result.truncated_count));
    return flags.empty() ? "ok" : flags;
}

}  // namespace

EmpiricalOutput run_empirical(const std::string& csv_path, const ScenarioConfig& config,
                              const FilterConfig& filters, IngestAudit* audit) {
    const std::vector<IngestedDay> days = ingest_panels(csv_path, filters, audit);
    if (days.empty()) throw IoError("run_empirical: no usable days after filters");

    WindowSettings settings = WindowSettings::from(config);

    // First pass with no truncation collects the raw |increment| series the
    // empirical threshold needs.
    struct DayPass {
        WindowEstimates estimates;
        bool ok = false;
    };
    std::vector<DayPass> first_pass(days.size());
    for (std::size_t d = 0; d < days.size(); ++d) {
        std::vector<const OptionPanel*> slots;
        slots.reserve(days[d].slots.size());
        for (const auto& slot : days[d].slots) slots.push_back(slot ? &*slot : nullptr);
        try {
            first_pass[d].estimates = estimate_window(slots, settings);
            first_pass[d].ok = true;
        } catch (const std::exception& e) {
            if (audit) audit->messages.push_back(days[d].date + ": " + e.what());
        }
    }

    EmpiricalOutput output;
    std::map<Estimator, std::vector<double>> series;
    for (std::size_t d = 0; d < days.size(); ++d) {
        if (!first_pass[d].ok) continue;
        WindowEstimates estimates = first_pass[d].estimates;
        bool upsilon_fallback = false;

        if (config.truncation == TruncationMode::Empirical) {
            const auto history = [&](auto member) {
                std::vector<std::vector<double>> h;
                for (int back = 0; back < 4; ++back) {
                    const long idx = static_cast<long>(d) - back;
                    if (idx < 0 || !first_pass[idx].ok) return h;  // incomplete
                    h.push_back(first_pass[idx].estimates.*member);
                }
                return h;
            };
            const auto h_t = history(&WindowEstimates::abs_incr_t);
            const auto h_tp = history(&WindowEstimates::abs_incr_tp);
            const auto h_ttp = history(&WindowEstimates::abs_incr_ttp);
            if (h_t.size() == 4 && h_tp.size() == 4 && h_ttp.size() == 4) {
                WindowSettings truncated = settings;
                truncated.thresholds.vv_t = truncation_threshold(h_t, config.delta_n);
                truncated.thresholds.vv_tp = truncation_threshold(h_tp, config.delta_n);
                truncated.thresholds.vv_ttp = truncation_threshold(h_ttp, config.delta_n);
                std::vector<const OptionPanel*> slots;
                for (const auto& slot : days[d].slots) slots.push_back(slot ? &*slot : nullptr);
                estimates = estimate_window(slots, truncated);
            } else {
                upsilon_fallback = true;  // fewer than 4 days of history
            }
        }

        output.dates.push_back(days[d].date);
        const auto emit = [&](Estimator which, const VVLVResult& result, bool rejected) {
            DailyEstimate daily;
            daily.date = days[d].date;
            daily.estimator = which;
            daily.result = result;
            daily.flags = result_flags(result, rejected, upsilon_fallback);
            output.daily.push_back(std::move(daily));
            series[which].push_back(rejected ? kNaN : result.estimate);
        };
        emit(Estimator::VV_T, estimates.vv_t, estimates.rejected_t);
        emit(Estimator::VV_Tp, estimates.vv_tp, estimates.rejected_tp);
        emit(Estimator::VV_TTp, estimates.vv_ttp, estimates.rejected_ttp);
        emit(Estimator::LV_T, estimates.lv_t, estimates.rejected_t);
        emit(Estimator::LV_Tp, estimates.lv_tp, estimates.rejected_tp);
        emit(Estimator::LV_TTp, estimates.lv_ttp, estimates.rejected_ttp);
    }
    for (auto& [which, values] : series) {
        output.moving_averages[which] = moving_average(values, 5);
    }
    return output;
}

void write_empirical_csv(const EmpiricalOutput& output, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_empirical_csv: cannot open '" + path + "'");
    out << "date,estimator,estimate,avar,ci_low,ci_high,k_n,flags\n";
    for (const auto& daily : output.daily) {
        out << daily.date << ',' << estimator_name(daily.estimator) << ','
            << fmt17(daily.result.estimate) << ',' << fmt17(daily.result.avar) << ','
            << fmt17(daily.result.ci_low) << ',' << fmt17(daily.result.ci_high) << ','
            << daily.result.k_n << ',' << daily.flags << '\n';
    }
}

void write_plot_data(const EmpiricalOutput& output, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_plot_data: cannot open '" + path + "'");
    out << "series,x,y\n";
    for (const auto& [which, values] : output.moving_averages) {
        for (std::size_t d = 0; d < values.size(); ++d) {
            out << estimator_name(which) << "_ma5," << d << ',' << fmt17(values[d]) << '\n';
        }
    }
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    std::vector<double> out(values.size(), kNaN);
    for (std::size_t d = 0; d < values.size(); ++d) {
        double sum = 0.0;
        int count = 0;
        for (int back = 0; back < window && back <= static_cast<int>(d); ++back) {
            const double v = values[d - back];
            if (std::isfinite(v)) {
                sum += v;
                ++count;
            }
        }
        if (count > 0) out[d] = sum / count;
    }
    return out;
}

}  // namespace ovv
