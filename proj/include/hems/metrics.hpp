// Economic and PV self-consumption metrics plus cross-site summary statistics.
#pragma once

#include <vector>

#include "hems/data.hpp"

namespace hems::metrics {

struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 100 * sum(min(demand_k, pv_k)) / sum(pv_k). demand includes HVAC.
double self_consumption_percent(const std::vector<double>& demand_kwh,
                                const std::vector<double>& pv_kwh);

// sum_k price_k * import_k - feed_in * export_k
double annual_cost(const std::vector<double>& import_kwh,
                   const std::vector<double>& export_kwh,
                   const std::vector<double>& price_per_kwh, double feed_in);

// Cost split by tariff window; entries sum exactly to annual_cost.
std::vector<double> cost_by_window(const std::vector<double>& import_kwh,
                                   const std::vector<double>& export_kwh,
                                   const std::vector<double>& price_per_kwh,
                                   double feed_in,
                                   const std::vector<int>& window_index);

struct CostSaving {
    double absolute = 0.0;  // $
    double percent = 0.0;
};
CostSaving cost_saving(double base, double variant);

struct SummaryStats {
    double mean = 0.0;
    double se = 0.0;   // standard error of the mean
    double sd = 0.0;   // sample standard deviation (n-1)
    int n = 0;
    bool insufficient_sample = false;  // n == 1: sd reported as 0
};
SummaryStats summarize(const std::vector<double>& values);

struct ScenarioResult {
    std::string scenario;
    std::string site;
    // Per-slot series, aligned to the run horizon.
    std::vector<double> import_kwh;
    std::vector<double> export_kwh;
    std::vector<double> pv_kwh;
    std::vector<double> hvac_kwh;   // electrical
    std::vector<double> t_in_c;     // slot-end values
    // Annual aggregates.
    double cost_dollars = 0.0;      // electricity only
    double hvac_total_kwh = 0.0;
    double self_consumption_pct = 0.0;
    // Diagnostics.
    double penalty_dollars = 0.0;
    int hvac_transitions = 0;
    int comfort_violation_slots = 0;

    // Recomputes totals from the per-slot series and checks internal
    // consistency; throws on drift beyond 1e-6.
    void finalize(const std::vector<double>& price_per_kwh, double feed_in);
};

}  // namespace hems::metrics
