// Hysteresis (deadband) HVAC controller and its simulation driver.
#pragma once

#include <vector>

#include "hems/thermal.hpp"

namespace hems::control {

using thermal::HvacAction;

struct DeadbandConfig {
    double heat_setpoint_c = 21.0;
    double cool_setpoint_c = 23.0;
    double width_c = 1.0;  // half-width of the hysteresis band
};

void validate(const DeadbandConfig& cfg);

// Samples t_in once per slot boundary. Heating latches until t_in exceeds
// heat_setpoint + width; cooling until t_in drops below cool_setpoint - width.
// A heating<->cooling change always passes through off.
HvacAction deadband_decide(double t_in_c, HvacAction prev, const DeadbandConfig& cfg);

struct DeadbandRun {
    std::vector<HvacAction> actions;         // one per slot
    std::vector<double> t_in_c;              // slot boundaries, size slots+1
    std::vector<double> t_e_c;               // slot boundaries, size slots+1
    std::vector<double> hvac_kwh;            // electrical energy per slot
    std::vector<double> t_in_slot_min_c;     // intra-slot extremes
    std::vector<double> t_in_slot_max_c;
    int transitions = 0;                     // action changes between slots
    double max_excursion_above_c = 0.0;      // beyond cool_setpoint + width
    double max_excursion_below_c = 0.0;      // beyond heat_setpoint - width
};

DeadbandRun simulate_deadband(const thermal::ThermalState& initial,
                              const std::vector<double>& t_out_c,
                              const DeadbandConfig& cfg,
                              const thermal::EnvelopeParams& params,
                              const thermal::PcmSpec* pcm,
                              const thermal::HvacSpec& hvac,
                              const thermal::Infiltration& inf,
                              double slot_seconds, int substeps);

}  // namespace hems::control
