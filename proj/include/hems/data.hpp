// Time-series ingestion, time-of-use tariff schedule, and a first-order
// slot-of-day Markov chain for synthesizing demand profiles.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hems::data {

// Minutes since 1970-01-01T00:00 in local clock time (no timezone handling).
using Minutes = std::int64_t;

Minutes parse_timestamp(const std::string& iso);  // "2019-01-01T00:30"
std::string format_timestamp(Minutes m);
inline int minute_of_day(Minutes m) {
    return static_cast<int>(((m % 1440) + 1440) % 1440);
}

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TimeSeries {
    std::string units;       // "degC" | "kW" | "kWh"
    Minutes start = 0;
    int slot_seconds = 1800;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    Minutes timestamp_at(std::size_t k) const {
        return start + static_cast<Minutes>(k) * (slot_seconds / 60);
    }
};

// Headered delimited text: "# units:", "# slot_seconds:", then
// "timestamp,value" rows with ISO-8601 local timestamps.
TimeSeries load_series(const std::string& path, const std::string& expected_units,
                       int expected_slot_seconds);
void save_series(const TimeSeries& series, const std::string& path);

struct SeriesSummary {
    double min = 0.0, max = 0.0, mean = 0.0;
};
SeriesSummary summarize_series(const TimeSeries& series);

// Daily windows: each entry opens at start_minute and runs until the next
// entry's start (cyclically). A boundary minute belongs to the later window.
struct TariffWindow {
    int start_minute = 0;
    double price = 0.0;  // $/kWh import
};

struct TariffSchedule {
    std::vector<TariffWindow> windows;  // sorted by start_minute
    double feed_in = 0.09;              // $/kWh export, flat
};

void validate(const TariffSchedule& schedule);
double tariff_price_at_minute(const TariffSchedule& schedule, int minute_of_day);
double tariff_price(const TariffSchedule& schedule, Minutes timestamp);

struct DemandMarkovModel {
    int slots_per_day = 48;
    int slot_seconds = 1800;
    Minutes start = 0;                          // for sampled profiles
    std::vector<double> representatives;        // kWh per slot, one per bin
    std::vector<double> initial;                // bin distribution at slot 0
    std::vector<std::vector<double>> rows;      // [slot_of_day * bins + from][to]
    bool degenerate = false;                    // constant input collapsed to one bin

    int bins() const { return static_cast<int>(representatives.size()); }
};

DemandMarkovModel fit_markov_chain(const TimeSeries& demand, int bin_count);
TimeSeries sample_profile(const DemandMarkovModel& model, int days,
                          std::uint64_t seed);
// Scales the series so its annual-equivalent total hits the target; returns
// the multiplier applied.
double scale_to_annual_kwh(TimeSeries& series, double target_kwh);

}  // namespace hems::data
