// Lumped 2RC thermal model of a single-zone building with an optional
// phase-change-material (PCM) layer in the envelope. The envelope (walls,
// roof, floor, PCM) is one capacitive node T_e; the indoor air is a second
// node T_in; windows and doors are a massless resistive path.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hems::thermal {

inline constexpr double kRhoAir = 1.2;          // kg/m^3
inline constexpr double kCpAir = 1005.0;        // J/(kg K)
inline constexpr double kJoulesPerKwh = 3.6e6;

struct MaterialLayer {
    double thickness_m = 0.0;
    double conductivity_w_mk = 0.0;
    double density_kg_m3 = 0.0;
    double specific_heat_j_kgk = 0.0;
};

struct FenestrationElement {
    double u_value_w_m2k = 0.0;
    double area_m2 = 0.0;
};

struct BuildingGeometry {
    double length_m = 0.0;
    double width_m = 0.0;
    double height_m = 0.0;
    std::vector<FenestrationElement> fenestration;

    double floor_area_m2() const { return length_m * width_m; }
    double roof_area_m2() const { return length_m * width_m; }
    double gross_wall_area_m2() const { return 2.0 * (length_m + width_m) * height_m; }
    double fenestration_area_m2() const;
    double net_wall_area_m2() const { return gross_wall_area_m2() - fenestration_area_m2(); }
    double volume_m3() const { return length_m * width_m * height_m; }
};

// Temperature-dependent specific heat parameters live in pcm_specific_heat();
// this struct carries the layer's bulk properties.
struct PcmSpec {
    double melting_point_c = 21.0;
    double layer_thickness_m = 0.03;
    double conductivity_w_mk = 2.8;
    double density_kg_m3 = 545.0;
    double total_mass_kg = 2806.0;
};

struct EnvelopeParams {
    double r_in_k_w = 0.0;        // indoor air <-> envelope node
    double r_out_k_w = 0.0;       // envelope node <-> ambient
    double r_dw_k_w = 0.0;        // fenestration path, no thermal mass
    double c_envelope_j_k = 0.0;  // opaque envelope, excluding PCM
    double air_capacity_j_k = 0.0;
};

struct ThermalState {
    double t_envelope_c = 20.0;
    double t_indoor_c = 20.0;
};

enum class HvacMode { Heat, Cool, Both };
enum class HvacAction { Off, Heat, Cool };

const char* to_string(HvacAction a);

struct HvacSpec {
    double rating_kw = 4.0;   // electrical draw when running
    double cop = 4.5;
    HvacMode capability = HvacMode::Both;
};

struct Infiltration {
    double ach = 0.5;         // air changes per hour
    double volume_m3 = 0.0;
};

struct IntegrationError : std::runtime_error {
    explicit IntegrationError(const std::string& what, int substep_index)
        : std::runtime_error(what), substep(substep_index) {}
    int substep;
};

void validate(const MaterialLayer& layer);
void validate(const BuildingGeometry& geom);
void validate(const HvacSpec& hvac);

// Area available to the PCM layer: roof + walls + floor, openings excluded.
double pcm_covered_area_m2(const BuildingGeometry& geom);
double derive_pcm_mass_kg(const BuildingGeometry& geom, const PcmSpec& pcm);
// True when total_mass_kg deviates more than 1% from the geometry-derived mass.
bool pcm_mass_mismatch(const BuildingGeometry& geom, const PcmSpec& pcm);

// Two-branch specific heat curve peaking at the melting point: exponential
// approach (width 1.5 degC) below, Gaussian-like decay above.
double pcm_specific_heat(double t_c, const PcmSpec& pcm);

// m * integral of c_pcm over [t1, t2], in joules. Antisymmetric in (t1, t2).
double pcm_enthalpy_delta_j(double t1_c, double t2_c, const PcmSpec& pcm);

// Stored enthalpy relative to t_ref, expressed as HVAC electrical kWh.
double pcm_soc_kwh(double t_c, double t_ref_c, const PcmSpec& pcm, double cop);

EnvelopeParams compute_envelope_params(const BuildingGeometry& geom,
                                       const std::vector<MaterialLayer>& layers,
                                       double accessibility);

double infiltration_gain_w(double t_out_c, double t_in_c, const Infiltration& inf);

// Rated thermal power: 0 when off, +rating*COP heating, -rating*COP cooling.
double hvac_thermal_power_w(HvacAction action, const HvacSpec& hvac);

struct StepTrace {
    double t_in_min = 0.0;
    double t_in_max = 0.0;
};

// Advances the two coupled ODEs by dt using fixed-step classic RK4 with
// dt/substeps internal steps. c_pcm is evaluated at the stage value of T_e.
ThermalState step(const ThermalState& state, double t_out_c, double q_hvac_w,
                  const Infiltration& inf, const EnvelopeParams& params,
                  const PcmSpec* pcm, double dt_s, int substeps,
                  StepTrace* trace = nullptr);

}  // namespace hems::thermal
