#include "hems/synth.hpp"

#include <cmath>
#include <random>

namespace hems::synth {

namespace {

constexpr int kSlotsPerDay = 48;
const data::Minutes kStart2019 = data::parse_timestamp("2019-01-01T00:00");

double two_pi() { return 2.0 * M_PI; }

}  // namespace

ClimateSpec climate_preset(int index) {
    // Loosely: coastal-temperate, subtropical, cool-temperate, mediterranean,
    // dry-temperate.
    static const ClimateSpec presets[] = {
        {"coastal", 18.5, 6.0, 5.0, 1.6, 196},
        {"subtrope", 21.5, 5.5, 5.5, 1.5, 196},
        {"cooltemp", 15.5, 7.5, 6.5, 2.0, 196},
        {"mediterr", 17.5, 8.0, 7.0, 2.1, 196},
        {"drytemp", 18.5, 7.5, 7.5, 2.2, 196},
    };
    return presets[index % 5];
}

data::TimeSeries synth_weather(const ClimateSpec& climate, int days, std::uint64_t seed) {
    data::TimeSeries s;
    s.units = "degC";
    s.start = kStart2019;
    s.values.reserve(static_cast<std::size_t>(days) * kSlotsPerDay);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, climate.noise_sigma_c);
    double ar = 0.0;
    for (int d = 0; d < days; ++d) {
        const double seasonal =
            climate.annual_mean_c -
            climate.seasonal_amplitude_c *
                std::cos(two_pi() * (d - climate.coldest_day + 182.5) / 365.0);
        for (int k = 0; k < kSlotsPerDay; ++k) {
            const double hour = k / 2.0;
            // Coldest shortly before dawn, warmest mid-afternoon.
            const double diurnal =
                climate.diurnal_amplitude_c * std::sin(two_pi() * (hour - 9.0) / 24.0);
            ar = 0.98 * ar + 0.199 * noise(rng);  // slow weather systems
            s.values.push_back(seasonal + diurnal + ar);
        }
    }
    return s;
}

data::TimeSeries synth_pv(double capacity_kw, int days, std::uint64_t seed) {
    data::TimeSeries s;
    s.units = "kWh";
    s.start = kStart2019;
    s.values.reserve(static_cast<std::size_t>(days) * kSlotsPerDay);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    double cloud_ar = 0.0;
    for (int d = 0; d < days; ++d) {
        // Southern hemisphere: longest days around the start of the year.
        const double daylength = 12.2 + 2.3 * std::cos(two_pi() * d / 365.0);
        const double sunrise = 12.0 - daylength / 2.0;
        cloud_ar = 0.85 * cloud_ar + 0.527 * noise(rng);
        const double clearness = 0.45 + 0.5 / (1.0 + std::exp(-1.2 * cloud_ar));
        for (int k = 0; k < kSlotsPerDay; ++k) {
            const double hour = k / 2.0 + 0.25;  // slot midpoint
            double p = 0.0;
            const double x = (hour - sunrise) / daylength;
            if (x > 0.0 && x < 1.0) {
                p = capacity_kw * 0.93 * std::pow(std::sin(M_PI * x), 1.4) * clearness;
            }
            s.values.push_back(std::max(0.0, p) * 0.5);  // kW -> kWh per half hour
        }
    }
    return s;
}

data::TimeSeries synth_base_demand(int days, std::uint64_t seed) {
    data::TimeSeries s;
    s.units = "kWh";
    s.start = kStart2019;
    s.values.reserve(static_cast<std::size_t>(days) * kSlotsPerDay);

    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> jitter(0.0, 0.35);
    for (int d = 0; d < days; ++d) {
        // Slightly higher consumption in winter evenings.
        const double seasonal = 1.0 + 0.12 * std::cos(two_pi() * (d - 196.0) / 365.0);
        for (int k = 0; k < kSlotsPerDay; ++k) {
            const double hour = k / 2.0;
            const double morning = 0.30 * std::exp(-0.5 * std::pow((hour - 7.5) / 1.2, 2));
            const double evening = 0.46 * std::exp(-0.5 * std::pow((hour - 19.0) / 2.0, 2));
            const double base = 0.115;
            s.values.push_back((base + morning + evening) * seasonal * jitter(rng));
        }
    }
    return s;
}

}  // namespace hems::synth
