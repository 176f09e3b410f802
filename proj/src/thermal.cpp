#include "hems/thermal.hpp"

#include <algorithm>
#include <cmath>

namespace hems::thermal {

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

const char* to_string(HvacAction a) {
    switch (a) {
        case HvacAction::Off: return "off";
        case HvacAction::Heat: return "heat";
        case HvacAction::Cool: return "cool";
    }
    return "?";
}

double BuildingGeometry::fenestration_area_m2() const {
    double a = 0.0;
    for (const auto& f : fenestration) a += f.area_m2;
    return a;
}

void validate(const MaterialLayer& layer) {
    require(layer.thickness_m > 0.0, "material layer: thickness must be positive");
    require(layer.conductivity_w_mk > 0.0, "material layer: conductivity must be positive");
    require(layer.density_kg_m3 > 0.0, "material layer: density must be positive");
    require(layer.specific_heat_j_kgk > 0.0, "material layer: specific heat must be positive");
}

void validate(const BuildingGeometry& geom) {
    require(geom.length_m > 0.0 && geom.width_m > 0.0 && geom.height_m > 0.0,
            "building geometry: dimensions must be positive");
    for (const auto& f : geom.fenestration) {
        require(f.u_value_w_m2k > 0.0, "fenestration: U-value must be positive");
        require(f.area_m2 > 0.0, "fenestration: area must be positive");
    }
    require(geom.fenestration_area_m2() < geom.gross_wall_area_m2(),
            "building geometry: fenestration area must be below total wall area");
}

void validate(const HvacSpec& hvac) {
    require(hvac.rating_kw > 0.0, "hvac: rating must be positive");
    require(hvac.cop > 1.0, "hvac: COP must exceed 1");
}

double pcm_covered_area_m2(const BuildingGeometry& geom) {
    return geom.roof_area_m2() + geom.gross_wall_area_m2() + geom.floor_area_m2() -
           geom.fenestration_area_m2();
}

double derive_pcm_mass_kg(const BuildingGeometry& geom, const PcmSpec& pcm) {
    return pcm.density_kg_m3 * pcm.layer_thickness_m * pcm_covered_area_m2(geom);
}

bool pcm_mass_mismatch(const BuildingGeometry& geom, const PcmSpec& pcm) {
    const double derived = derive_pcm_mass_kg(geom, pcm);
    if (derived <= 0.0) return true;
    return std::abs(pcm.total_mass_kg - derived) > 0.01 * derived;
}

double pcm_specific_heat(double t_c, const PcmSpec& pcm) {
    if (!finite(t_c)) throw std::domain_error("pcm_specific_heat: temperature must be finite");
    const double tp = pcm.melting_point_c;
    if (t_c < tp) {
        return 1200.0 + 18800.0 * std::exp(-(tp - t_c) / 1.5);
    }
    const double d = tp - t_c;
    return 1300.0 + 18700.0 * std::exp(-4.0 * d * d);
}

namespace {

// Composite Simpson over [a, b]; the curve is smooth within one branch.
double integrate_c_pcm(double a, double b, const PcmSpec& pcm) {
    if (a == b) return 0.0;
    const int n = std::clamp(static_cast<int>(std::ceil((b - a) / 0.005)), 16, 200000) * 2;
    const double h = (b - a) / n;
    double sum = pcm_specific_heat(a, pcm) + pcm_specific_heat(b, pcm);
    for (int i = 1; i < n; ++i) {
        sum += pcm_specific_heat(a + i * h, pcm) * ((i % 2 != 0) ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

}  // namespace

double pcm_enthalpy_delta_j(double t1_c, double t2_c, const PcmSpec& pcm) {
    if (!finite(t1_c) || !finite(t2_c)) {
        throw std::domain_error("pcm_enthalpy_delta: temperatures must be finite");
    }
    if (t1_c > t2_c) return -pcm_enthalpy_delta_j(t2_c, t1_c, pcm);
    if (t1_c == t2_c) return 0.0;
    // Split at the melting point: c_pcm has a kink there.
    const double tp = pcm.melting_point_c;
    double per_kg = 0.0;
    if (t2_c <= tp || t1_c >= tp) {
        per_kg = integrate_c_pcm(t1_c, t2_c, pcm);
    } else {
        per_kg = integrate_c_pcm(t1_c, tp, pcm) + integrate_c_pcm(tp, t2_c, pcm);
    }
    return pcm.total_mass_kg * per_kg;
}

double pcm_soc_kwh(double t_c, double t_ref_c, const PcmSpec& pcm, double cop) {
    require(cop > 0.0, "pcm_soc: COP must be positive");
    return pcm_enthalpy_delta_j(t_ref_c, t_c, pcm) / cop / kJoulesPerKwh;
}

EnvelopeParams compute_envelope_params(const BuildingGeometry& geom,
                                       const std::vector<MaterialLayer>& layers,
                                       double accessibility) {
    validate(geom);
    require(!layers.empty(), "envelope: at least one material layer required");
    for (const auto& l : layers) validate(l);
    require(accessibility > 0.0 && accessibility < 1.0,
            "envelope: accessibility must be in (0, 1)");

    const double areas[] = {geom.roof_area_m2(), geom.net_wall_area_m2(),
                            geom.floor_area_m2()};
    double conductance = 0.0;  // opaque elements in parallel
    double c_envelope = 0.0;
    for (double a : areas) {
        require(a > 0.0, "envelope: element area must be positive");
        double r_element = 0.0;
        for (const auto& l : layers) {
            r_element += l.thickness_m / (l.conductivity_w_mk * a);
            c_envelope += l.density_kg_m3 * l.specific_heat_j_kgk * l.thickness_m * a;
        }
        conductance += 1.0 / r_element;
    }
    const double r_total = 1.0 / conductance;

    double ua_fen = 0.0;
    for (const auto& f : geom.fenestration) ua_fen += f.u_value_w_m2k * f.area_m2;
    require(ua_fen > 0.0, "envelope: fenestration UA must be positive");

    EnvelopeParams p;
    p.r_in_k_w = accessibility * r_total;
    p.r_out_k_w = (1.0 - accessibility) * r_total;
    p.r_dw_k_w = 1.0 / ua_fen;
    p.c_envelope_j_k = c_envelope;
    p.air_capacity_j_k = kRhoAir * kCpAir * geom.volume_m3();
    return p;
}

double infiltration_gain_w(double t_out_c, double t_in_c, const Infiltration& inf) {
    require(inf.ach >= 0.0, "infiltration: air changes per hour must be non-negative");
    return inf.ach * inf.volume_m3 * kRhoAir * kCpAir * (t_out_c - t_in_c) / 3600.0;
}

double hvac_thermal_power_w(HvacAction action, const HvacSpec& hvac) {
    switch (action) {
        case HvacAction::Off:
            return 0.0;
        case HvacAction::Heat:
            if (hvac.capability == HvacMode::Cool) {
                throw std::invalid_argument("hvac: unit cannot heat");
            }
            return hvac.rating_kw * 1000.0 * hvac.cop;
        case HvacAction::Cool:
            if (hvac.capability == HvacMode::Heat) {
                throw std::invalid_argument("hvac: unit cannot cool");
            }
            return -hvac.rating_kw * 1000.0 * hvac.cop;
    }
    throw std::invalid_argument("hvac: unknown action");
}

ThermalState step(const ThermalState& state, double t_out_c, double q_hvac_w,
                  const Infiltration& inf, const EnvelopeParams& params,
                  const PcmSpec* pcm, double dt_s, int substeps, StepTrace* trace) {
    require(dt_s > 0.0, "step: dt must be positive");
    require(substeps >= 1, "step: substeps must be >= 1");
    if (!finite(state.t_envelope_c) || !finite(state.t_indoor_c) || !finite(t_out_c) ||
        !finite(q_hvac_w)) {
        throw std::domain_error("step: non-finite input");
    }

    const double inf_ua = inf.ach * inf.volume_m3 * kRhoAir * kCpAir / 3600.0;
    auto d_te = [&](double te, double tin) {
        double c = params.c_envelope_j_k;
        if (pcm != nullptr) c += pcm->total_mass_kg * pcm_specific_heat(te, *pcm);
        return ((tin - te) / params.r_in_k_w + (t_out_c - te) / params.r_out_k_w) / c;
    };
    auto d_tin = [&](double te, double tin) {
        return ((t_out_c - tin) / params.r_dw_k_w + (te - tin) / params.r_in_k_w +
                q_hvac_w + inf_ua * (t_out_c - tin)) /
               params.air_capacity_j_k;
    };

    const double h = dt_s / substeps;
    double te = state.t_envelope_c;
    double tin = state.t_indoor_c;
    if (trace != nullptr) {
        trace->t_in_min = tin;
        trace->t_in_max = tin;
    }
    for (int i = 0; i < substeps; ++i) {
        const double k1e = d_te(te, tin), k1i = d_tin(te, tin);
        const double k2e = d_te(te + 0.5 * h * k1e, tin + 0.5 * h * k1i);
        const double k2i = d_tin(te + 0.5 * h * k1e, tin + 0.5 * h * k1i);
        const double k3e = d_te(te + 0.5 * h * k2e, tin + 0.5 * h * k2i);
        const double k3i = d_tin(te + 0.5 * h * k2e, tin + 0.5 * h * k2i);
        const double k4e = d_te(te + h * k3e, tin + h * k3i);
        const double k4i = d_tin(te + h * k3e, tin + h * k3i);
        te += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        tin += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        if (!finite(te) || !finite(tin)) {
            throw IntegrationError(
                "step: non-finite state at substep " + std::to_string(i), i);
        }
        if (trace != nullptr) {
            trace->t_in_min = std::min(trace->t_in_min, tin);
            trace->t_in_max = std::max(trace->t_in_max, tin);
        }
    }
    return ThermalState{te, tin};
}

}  // namespace hems::thermal
