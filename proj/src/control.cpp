#include "hems/control.hpp"

#include <algorithm>
#include <stdexcept>

namespace hems::control {

void validate(const DeadbandConfig& cfg) {
    if (!(cfg.width_c > 0.0)) {
        throw std::invalid_argument("deadband: width must be positive");
    }
    if (cfg.heat_setpoint_c + cfg.width_c > cfg.cool_setpoint_c - cfg.width_c) {
        throw std::invalid_argument("deadband: heating and cooling on-regions overlap");
    }
}

HvacAction deadband_decide(double t_in_c, HvacAction prev, const DeadbandConfig& cfg) {
    const double heat_on = cfg.heat_setpoint_c - cfg.width_c;
    const double heat_off = cfg.heat_setpoint_c + cfg.width_c;
    const double cool_on = cfg.cool_setpoint_c + cfg.width_c;
    const double cool_off = cfg.cool_setpoint_c - cfg.width_c;

    switch (prev) {
        case HvacAction::Heat:
            return t_in_c > heat_off ? HvacAction::Off : HvacAction::Heat;
        case HvacAction::Cool:
            return t_in_c < cool_off ? HvacAction::Off : HvacAction::Cool;
        case HvacAction::Off:
            if (t_in_c < heat_on) return HvacAction::Heat;
            if (t_in_c > cool_on) return HvacAction::Cool;
            return HvacAction::Off;
    }
    return HvacAction::Off;
}

DeadbandRun simulate_deadband(const thermal::ThermalState& initial,
                              const std::vector<double>& t_out_c,
                              const DeadbandConfig& cfg,
                              const thermal::EnvelopeParams& params,
                              const thermal::PcmSpec* pcm,
                              const thermal::HvacSpec& hvac,
                              const thermal::Infiltration& inf,
                              double slot_seconds, int substeps) {
    validate(cfg);
    thermal::validate(hvac);

    const std::size_t slots = t_out_c.size();
    DeadbandRun run;
    run.actions.reserve(slots);
    run.t_in_c.reserve(slots + 1);
    run.t_e_c.reserve(slots + 1);
    run.hvac_kwh.reserve(slots);
    run.t_in_slot_min_c.reserve(slots);
    run.t_in_slot_max_c.reserve(slots);

    thermal::ThermalState state = initial;
    HvacAction action = HvacAction::Off;
    run.t_in_c.push_back(state.t_indoor_c);
    run.t_e_c.push_back(state.t_envelope_c);

    for (std::size_t k = 0; k < slots; ++k) {
        const HvacAction next = deadband_decide(state.t_indoor_c, action, cfg);
        if (k > 0 && next != action) ++run.transitions;
        action = next;

        thermal::StepTrace trace;
        state = thermal::step(state, t_out_c[k], thermal::hvac_thermal_power_w(action, hvac),
                              inf, params, pcm, slot_seconds, substeps, &trace);
        if (state.t_indoor_c < -20.0 || state.t_indoor_c > 60.0 ||
            state.t_envelope_c < -20.0 || state.t_envelope_c > 60.0) {
            throw thermal::IntegrationError(
                "simulate_deadband: state left the sanity band at slot " + std::to_string(k),
                static_cast<int>(k));
        }

        run.actions.push_back(action);
        run.t_in_c.push_back(state.t_indoor_c);
        run.t_e_c.push_back(state.t_envelope_c);
        run.hvac_kwh.push_back(action == HvacAction::Off
                                   ? 0.0
                                   : hvac.rating_kw * slot_seconds / 3600.0);
        run.t_in_slot_min_c.push_back(trace.t_in_min);
        run.t_in_slot_max_c.push_back(trace.t_in_max);
        run.max_excursion_above_c = std::max(
            run.max_excursion_above_c, trace.t_in_max - (cfg.cool_setpoint_c + cfg.width_c));
        run.max_excursion_below_c = std::max(
            run.max_excursion_below_c, (cfg.heat_setpoint_c - cfg.width_c) - trace.t_in_min);
    }
    return run;
}

}  // namespace hems::control
