// Seeded synthetic weather / PV / demand generators. Scenario studies run on
// measured half-hourly data when available; these produce statistically
// plausible stand-ins with the same file contracts.
#pragma once

#include <cstdint>

#include "hems/data.hpp"

namespace hems::synth {

struct ClimateSpec {
    std::string name = "default";
    double annual_mean_c = 18.0;
    double seasonal_amplitude_c = 7.0;   // swing of the daily mean across the year
    double diurnal_amplitude_c = 5.5;    // swing within a day
    double noise_sigma_c = 1.8;          // AR(1) weather noise
    int coldest_day = 196;               // mid July (southern hemisphere)
};

// Five capital-city-flavoured presets with distinct means and swings.
ClimateSpec climate_preset(int index);

data::TimeSeries synth_weather(const ClimateSpec& climate, int days, std::uint64_t seed);

// Clear-sky bell scaled by seasonal day length and a slow cloud process.
data::TimeSeries synth_pv(double capacity_kw, int days, std::uint64_t seed);

// Double-peak household profile, ~12.9 kWh/day before Markov resampling.
data::TimeSeries synth_base_demand(int days, std::uint64_t seed);

}  // namespace hems::synth
