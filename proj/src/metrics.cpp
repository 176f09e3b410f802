#include "hems/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hems::metrics {

double self_consumption_percent(const std::vector<double>& demand_kwh,
                                const std::vector<double>& pv_kwh) {
    if (demand_kwh.size() != pv_kwh.size()) {
        throw std::invalid_argument("self_consumption: series lengths differ");
    }
    double consumed = 0.0, generated = 0.0;
    for (std::size_t k = 0; k < pv_kwh.size(); ++k) {
        consumed += std::min(demand_kwh[k], pv_kwh[k]);
        generated += pv_kwh[k];
    }
    if (generated <= 0.0) {
        throw UndefinedMetricError("self_consumption: total PV generation is zero");
    }
    return 100.0 * consumed / generated;
}

double annual_cost(const std::vector<double>& import_kwh,
                   const std::vector<double>& export_kwh,
                   const std::vector<double>& price_per_kwh, double feed_in) {
    if (import_kwh.size() != export_kwh.size() ||
        import_kwh.size() != price_per_kwh.size()) {
        throw std::invalid_argument("annual_cost: series lengths differ");
    }
    double cost = 0.0;
    for (std::size_t k = 0; k < import_kwh.size(); ++k) {
        cost += price_per_kwh[k] * import_kwh[k] - feed_in * export_kwh[k];
    }
    return cost;
}

std::vector<double> cost_by_window(const std::vector<double>& import_kwh,
                                   const std::vector<double>& export_kwh,
                                   const std::vector<double>& price_per_kwh,
                                   double feed_in,
                                   const std::vector<int>& window_index) {
    if (window_index.size() != import_kwh.size()) {
        throw std::invalid_argument("cost_by_window: index length differs");
    }
    int max_idx = 0;
    for (int w : window_index) max_idx = std::max(max_idx, w);
    std::vector<double> out(static_cast<std::size_t>(max_idx) + 1, 0.0);
    for (std::size_t k = 0; k < import_kwh.size(); ++k) {
        out[window_index[k]] +=
            price_per_kwh[k] * import_kwh[k] - feed_in * export_kwh[k];
    }
    return out;
}

CostSaving cost_saving(double base, double variant) {
    CostSaving s;
    s.absolute = base - variant;
    if (base > 0.0) {
        s.percent = 100.0 * s.absolute / base;
    } else if (s.absolute == 0.0) {
        s.percent = 0.0;
    } else {
        throw std::invalid_argument("cost_saving: base must be positive for a percentage");
    }
    return s;
}

SummaryStats summarize(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("summarize: need at least one value");
    SummaryStats s;
    s.n = static_cast<int>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
    if (s.n == 1) {
        s.insufficient_sample = true;  // sd undefined under the n-1 convention
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (s.n - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
    return s;
}

void ScenarioResult::finalize(const std::vector<double>& price_per_kwh, double feed_in) {
    const std::size_t n = import_kwh.size();
    if (export_kwh.size() != n || pv_kwh.size() != n || hvac_kwh.size() != n ||
        t_in_c.size() != n || price_per_kwh.size() != n) {
        throw std::invalid_argument("scenario result: per-slot series lengths differ");
    }
    cost_dollars = annual_cost(import_kwh, export_kwh, price_per_kwh, feed_in);
    hvac_total_kwh = std::accumulate(hvac_kwh.begin(), hvac_kwh.end(), 0.0);

    double check = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        check += price_per_kwh[k] * import_kwh[k] - feed_in * export_kwh[k];
    }
    if (std::abs(check - cost_dollars) > 1e-6) {
        throw std::logic_error("scenario result: totals drifted from per-slot sums");
    }
    if (self_consumption_pct < 0.0 || self_consumption_pct > 100.0) {
        throw std::logic_error("scenario result: self-consumption outside [0, 100]");
    }
}

}  // namespace hems::metrics
