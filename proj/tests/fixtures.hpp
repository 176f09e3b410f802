// Shared test fixtures: the reference lightweight single-zone building,
// its material stack, PCM layer, and HVAC unit.
#pragma once

#include <vector>

#include "hems/thermal.hpp"

namespace fixtures {

inline hems::thermal::BuildingGeometry geometry() {
    hems::thermal::BuildingGeometry g;
    g.length_m = 8.0;
    g.width_m = 6.0;
    g.height_m = 2.7;
    g.fenestration = {{7.01, 7.8},   // single-glazed windows
                      {2.61, 2.1}};  // wooden door
    return g;
}

inline std::vector<hems::thermal::MaterialLayer> layers() {
    return {
        {0.005, 0.25, 1150.0, 840.0},  // rendered fibro-cement
        {0.09, 0.15, 650.0, 1200.0},   // timber stud wall with insulation batts
        {0.01, 0.25, 950.0, 840.0},    // plasterboard
    };
}

inline hems::thermal::PcmSpec pcm_mt21() {
    return {21.0, 0.03, 2.8, 545.0, 2806.0};
}

inline hems::thermal::PcmSpec pcm_mt23() {
    return {23.0, 0.03, 2.8, 545.0, 2806.0};
}

inline hems::thermal::HvacSpec hvac() { return {4.0, 4.5, hems::thermal::HvacMode::Both}; }

inline hems::thermal::Infiltration infiltration() {
    return {0.5, geometry().volume_m3()};
}

inline hems::thermal::EnvelopeParams params(double accessibility = 0.5) {
    return hems::thermal::compute_envelope_params(geometry(), layers(), accessibility);
}

// Scenario-grade configuration: near-isothermal coupling between the indoor
// air and the storage mass, integrated at 3 s steps for RK4 stability.
inline constexpr double kScenarioAccessibility = 0.001;
inline constexpr int kScenarioSubsteps = 1500;

}  // namespace fixtures
