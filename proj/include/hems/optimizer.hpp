// HVAC scheduler: deterministic finite-horizon MDP over a discretized indoor
// temperature, solved by backward-induction value iteration. Long horizons are
// split into chained sub-problems whose terminal values hand off backward.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hems/control.hpp"
#include "hems/thermal.hpp"

namespace hems::optimizer {

using thermal::HvacAction;

inline constexpr HvacAction kActionOrder[] = {HvacAction::Off, HvacAction::Heat,
                                              HvacAction::Cool};

struct TemperatureGrid {
    double min_c = 15.0;
    double max_c = 30.0;
    double resolution_c = 0.1;

    int size() const;
    double value(int i) const { return min_c + i * resolution_c; }
    // Nearest cell; sets *clamped when t falls outside the grid span.
    int nearest(double t, bool* clamped = nullptr) const;
};

void validate(const TemperatureGrid& grid);

struct ComfortBand {
    double low_c = 20.0;
    double high_c = 24.0;
};

struct PenaltySpec {
    double per_slot = 10.0;    // $ per violated slot
    double per_degree = 1.0;   // $ per degC of violation depth
};

struct SlotData {
    double t_out_prev_c = 0.0;  // outdoor temperature one slot earlier
    double t_out_c = 0.0;
    double pv_kwh = 0.0;
    double demand_kwh = 0.0;    // underlying demand, excluding HVAC
    double price = 0.0;         // $/kWh import for this slot
    int minute_of_day = 0;
};

using TransitionFn = std::function<double(int slot, double t_in_c, HvacAction)>;
using BatchTransitionFn = std::function<void(
    int slot, const std::vector<double>& t_in_c, HvacAction, std::vector<double>& out)>;

struct MdpInstance {
    std::vector<SlotData> slots;
    thermal::HvacSpec hvac;
    ComfortBand comfort;
    PenaltySpec penalty;
    double feed_in = 0.09;
    double slot_seconds = 1800.0;
    TransitionFn transition;
    BatchTransitionFn batch_transition;  // optional fast path

    std::size_t horizon() const { return slots.size(); }
};

double hvac_electrical_kwh(HvacAction a, const thermal::HvacSpec& hvac,
                           double slot_seconds);
double comfort_penalty(double t_in_c, const ComfortBand& band, const PenaltySpec& pen);

// Net-import cost of one slot plus the comfort penalty on the resulting
// indoor temperature.
double stage_cost(HvacAction a, const SlotData& slot, const thermal::HvacSpec& hvac,
                  double next_t_in_c, const ComfortBand& band, const PenaltySpec& pen,
                  double feed_in, double slot_seconds);

struct ValueTable {
    // v[k][cell], k = 0..K (layer K is the terminal layer).
    std::vector<std::vector<double>> v;
};

struct Policy {
    // action[k][cell], k = 0..K-1.
    std::vector<std::vector<HvacAction>> action;
};

struct SolveReport {
    double runtime_seconds = 0.0;
    int cells = 0;
    std::size_t horizon = 0;
    std::int64_t transition_evals = 0;
    int clamp_warnings = 0;          // transitions landing outside the grid
    int sub_problems = 1;
    double surrogate_speedup = 0.0;  // filled by the microbenchmark when run
    std::vector<std::string> warnings;
};

// Terminal cost shape: zero inside the comfort band, penalty-shaped outside.
std::vector<double> terminal_values(const TemperatureGrid& grid, const ComfortBand& band,
                                    const PenaltySpec& pen);

std::pair<ValueTable, Policy> value_iteration(const MdpInstance& mdp,
                                              const TemperatureGrid& grid,
                                              const std::vector<double>& terminal,
                                              SolveReport* report = nullptr);

// Splits the horizon into sub-problems of sub_horizon_slots (last may be
// short), solves them last-to-first with value handoff, and returns the
// stitched full-horizon table and policy.
std::pair<ValueTable, Policy> madp_solve(const MdpInstance& mdp,
                                         const TemperatureGrid& grid,
                                         std::size_t sub_horizon_slots,
                                         SolveReport* report = nullptr);

// Exact plant used for forward simulation (and for exact backward passes).
struct ExactDynamics {
    thermal::EnvelopeParams params;
    thermal::Infiltration infiltration;
    std::optional<thermal::PcmSpec> pcm;
    thermal::HvacSpec hvac;
    double slot_seconds = 1800.0;
    int substeps = 30;

    thermal::ThermalState step_slot(const thermal::ThermalState& s, double t_out_c,
                                    HvacAction a) const;
};

// Companion recursion for the backward pass: a reference trajectory on the
// exact dynamics provides, per slot, the spread between the envelope and
// indoor nodes. The backward transition reconstructs T_e from the grid cell
// as t_in + (te_ref[k] - tin_ref[k]); the offset is bounded by the envelope
// coupling regardless of how far the reference drifts.
struct EnvelopeTrack {
    std::vector<double> t_e_c;   // slot boundaries, size K+1
    std::vector<double> t_in_c;  // slot boundaries, size K+1
};

EnvelopeTrack track_envelope_temperature(const ExactDynamics& dyn,
                                         const thermal::ThermalState& initial,
                                         const std::vector<SlotData>& slots,
                                         const control::DeadbandConfig& nominal);

TransitionFn make_exact_transition(const ExactDynamics& dyn, const EnvelopeTrack& track,
                                   std::vector<double> t_out_c);

struct TrackedSolution {
    ValueTable table;
    Policy policy;
    EnvelopeTrack track;  // envelope estimates used by the final solve
};

// Exact-transition backward pass with policy-consistent envelope tracking:
// the first sweep derives offsets from a nominal deadband run, then each
// iteration re-simulates the extracted policy and re-solves with its realized
// trajectory. `mdp.transition` is installed by this call.
TrackedSolution solve_with_tracking(MdpInstance& mdp, const TemperatureGrid& grid,
                                    const ExactDynamics& dyn,
                                    const thermal::ThermalState& initial,
                                    const control::DeadbandConfig& nominal,
                                    int iterations, std::size_t sub_horizon_slots,
                                    SolveReport* report = nullptr);

struct SimulatedTrajectory {
    std::vector<HvacAction> actions;
    std::vector<double> t_in_c;   // slot boundaries, size K+1
    std::vector<double> t_e_c;
    std::vector<double> hvac_kwh;
    std::vector<double> import_kwh;
    std::vector<double> export_kwh;
    std::vector<double> electricity_cost;
    std::vector<double> penalty_cost;
    double total_electricity_cost = 0.0;
    double total_penalty_cost = 0.0;
    double realized_objective = 0.0;  // electricity + penalties
    int comfort_violation_slots = 0;
    int hvac_transitions = 0;
    int clamp_warnings = 0;
};

// Forward-simulates a policy on the exact dynamics, looking actions up by
// rounding the simulated indoor temperature to the grid.
SimulatedTrajectory simulate_policy(const Policy& policy, const MdpInstance& mdp,
                                    const TemperatureGrid& grid,
                                    const thermal::ThermalState& initial,
                                    const ExactDynamics& dyn);

// Largest Bellman violation of (value, policy) over all slots and cells;
// ~0 for a table produced by value_iteration on the same instance.
double bellman_residual(const MdpInstance& mdp, const TemperatureGrid& grid,
                        const ValueTable& table, const Policy& policy);

// Sensitivity mode: joint (T_e, T_in) grid with the exact one-slot ODE map.
struct TeGridSolution {
    std::vector<std::vector<HvacAction>> action;  // [k][te_cell * n_tin + tin_cell]
    std::vector<double> initial_values;           // layer-0 values
};

TeGridSolution value_iteration_te_grid(const MdpInstance& mdp,
                                       const TemperatureGrid& tin_grid,
                                       const TemperatureGrid& te_grid,
                                       const ExactDynamics& dyn);

SimulatedTrajectory simulate_te_grid_policy(const TeGridSolution& sol,
                                            const MdpInstance& mdp,
                                            const TemperatureGrid& tin_grid,
                                            const TemperatureGrid& te_grid,
                                            const thermal::ThermalState& initial,
                                            const ExactDynamics& dyn);

}  // namespace hems::optimizer
