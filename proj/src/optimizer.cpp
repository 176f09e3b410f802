#include "hems/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace hems::optimizer {

int TemperatureGrid::size() const {
    return static_cast<int>(std::floor((max_c - min_c) / resolution_c + 0.5)) + 1;
}

int TemperatureGrid::nearest(double t, bool* clamped) const {
    const int n = size();
    int i = static_cast<int>(std::floor((t - min_c) / resolution_c + 0.5));
    bool clip = false;
    if (i < 0) {
        i = 0;
        clip = true;
    } else if (i >= n) {
        i = n - 1;
        clip = true;
    }
    if (clamped != nullptr) *clamped = clip;
    return i;
}

void validate(const TemperatureGrid& grid) {
    if (!(grid.min_c < grid.max_c)) {
        throw std::invalid_argument("grid: min must be below max");
    }
    if (!(grid.resolution_c > 0.0)) {
        throw std::invalid_argument("grid: resolution must be positive");
    }
}

namespace {

void validate_instance(const MdpInstance& mdp, const TemperatureGrid& grid,
                       bool require_transition = true) {
    validate(grid);
    if (grid.min_c > mdp.comfort.low_c || grid.max_c < mdp.comfort.high_c) {
        throw std::invalid_argument("grid: must cover the comfort band");
    }
    if (!(mdp.comfort.low_c < mdp.comfort.high_c)) {
        throw std::invalid_argument("mdp: comfort band is empty");
    }
    if (require_transition && !mdp.slots.empty() && !mdp.transition) {
        throw std::invalid_argument("mdp: transition function required");
    }
    for (const auto& s : mdp.slots) {
        if (!std::isfinite(s.t_out_c) || !std::isfinite(s.pv_kwh) ||
            !std::isfinite(s.demand_kwh) || !std::isfinite(s.price)) {
            throw std::invalid_argument("mdp: non-finite slot data");
        }
    }
}

}  // namespace

double hvac_electrical_kwh(HvacAction a, const thermal::HvacSpec& hvac,
                           double slot_seconds) {
    return a == HvacAction::Off ? 0.0 : hvac.rating_kw * slot_seconds / 3600.0;
}

double comfort_penalty(double t_in_c, const ComfortBand& band, const PenaltySpec& pen) {
    if (t_in_c < band.low_c) {
        return pen.per_slot + pen.per_degree * (band.low_c - t_in_c);
    }
    if (t_in_c > band.high_c) {
        return pen.per_slot + pen.per_degree * (t_in_c - band.high_c);
    }
    return 0.0;
}

double stage_cost(HvacAction a, const SlotData& slot, const thermal::HvacSpec& hvac,
                  double next_t_in_c, const ComfortBand& band, const PenaltySpec& pen,
                  double feed_in, double slot_seconds) {
    const double hvac_kwh = hvac_electrical_kwh(a, hvac, slot_seconds);
    const double net = slot.demand_kwh + hvac_kwh - slot.pv_kwh;
    const double imported = std::max(0.0, net);
    const double exported = std::max(0.0, -net);
    return slot.price * imported - feed_in * exported +
           comfort_penalty(next_t_in_c, band, pen);
}

std::vector<double> terminal_values(const TemperatureGrid& grid, const ComfortBand& band,
                                    const PenaltySpec& pen) {
    std::vector<double> v(grid.size());
    for (int i = 0; i < grid.size(); ++i) v[i] = comfort_penalty(grid.value(i), band, pen);
    return v;
}

std::pair<ValueTable, Policy> value_iteration(const MdpInstance& mdp,
                                              const TemperatureGrid& grid,
                                              const std::vector<double>& terminal,
                                              SolveReport* report) {
    validate_instance(mdp, grid);
    const int n = grid.size();
    if (terminal.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("value_iteration: terminal layer size mismatch");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t horizon = mdp.horizon();

    ValueTable table;
    table.v.assign(horizon + 1, std::vector<double>(n, 0.0));
    table.v[horizon] = terminal;
    Policy policy;
    policy.action.assign(horizon, std::vector<HvacAction>(n, HvacAction::Off));

    std::vector<double> cell_temps(n);
    for (int i = 0; i < n; ++i) cell_temps[i] = grid.value(i);
    std::vector<double> next_tin(n);
    std::int64_t evals = 0;
    int clamps = 0;

    for (std::size_t kk = horizon; kk-- > 0;) {
        const int k = static_cast<int>(kk);
        auto& v_k = table.v[kk];
        const auto& v_next = table.v[kk + 1];
        auto& pi_k = policy.action[kk];
        std::fill(v_k.begin(), v_k.end(), std::numeric_limits<double>::infinity());

        for (HvacAction a : kActionOrder) {
            if (mdp.batch_transition) {
                mdp.batch_transition(k, cell_temps, a, next_tin);
            } else {
                for (int i = 0; i < n; ++i) next_tin[i] = mdp.transition(k, cell_temps[i], a);
            }
            evals += n;
            for (int i = 0; i < n; ++i) {
                bool clipped = false;
                const int j = grid.nearest(next_tin[i], &clipped);
                clamps += clipped;
                const double q = stage_cost(a, mdp.slots[kk], mdp.hvac, next_tin[i],
                                            mdp.comfort, mdp.penalty, mdp.feed_in,
                                            mdp.slot_seconds) +
                                 v_next[j];
                // Strict improvement only: ties resolve to the earliest action
                // in kActionOrder (off, then heat, then cool).
                if (q < v_k[i]) {
                    v_k[i] = q;
                    pi_k[i] = a;
                }
            }
        }
    }

    if (report != nullptr) {
        report->cells = n;
        report->horizon = horizon;
        report->transition_evals += evals;
        report->clamp_warnings += clamps;
        if (clamps > 0) {
            report->warnings.push_back("value_iteration: " + std::to_string(clamps) +
                                       " transitions landed outside the grid (clamped)");
        }
        report->runtime_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return {std::move(table), std::move(policy)};
}

std::pair<ValueTable, Policy> madp_solve(const MdpInstance& mdp,
                                         const TemperatureGrid& grid,
                                         std::size_t sub_horizon_slots,
                                         SolveReport* report) {
    if (sub_horizon_slots == 0) {
        throw std::invalid_argument("madp: sub-horizon must be positive");
    }
    const std::size_t horizon = mdp.horizon();
    const std::size_t subs = horizon == 0 ? 0 : (horizon + sub_horizon_slots - 1) / sub_horizon_slots;

    ValueTable full;
    full.v.assign(horizon + 1, {});
    Policy full_policy;
    full_policy.action.assign(horizon, {});

    // Final boundary: penalty-shaped terminal layer.
    std::vector<double> handoff = terminal_values(grid, mdp.comfort, mdp.penalty);
    full.v[horizon] = handoff;

    // Solve sub-problems last-to-first, feeding each one's first layer to the
    // one before it.
    for (std::size_t s = subs; s-- > 0;) {
        const std::size_t begin = s * sub_horizon_slots;
        const std::size_t end = std::min(horizon, begin + sub_horizon_slots);

        MdpInstance sub;
        sub.slots.assign(mdp.slots.begin() + begin, mdp.slots.begin() + end);
        sub.hvac = mdp.hvac;
        sub.comfort = mdp.comfort;
        sub.penalty = mdp.penalty;
        sub.feed_in = mdp.feed_in;
        sub.slot_seconds = mdp.slot_seconds;
        const auto base = mdp.transition;
        sub.transition = [base, begin](int k, double t, HvacAction a) {
            return base(static_cast<int>(begin) + k, t, a);
        };
        if (mdp.batch_transition) {
            const auto batch = mdp.batch_transition;
            sub.batch_transition = [batch, begin](int k, const std::vector<double>& t,
                                                  HvacAction a, std::vector<double>& out) {
                batch(static_cast<int>(begin) + k, t, a, out);
            };
        }

        auto [sub_table, sub_policy] = value_iteration(sub, grid, handoff, report);
        for (std::size_t k = begin; k < end; ++k) {
            full.v[k] = std::move(sub_table.v[k - begin]);
            full_policy.action[k] = std::move(sub_policy.action[k - begin]);
        }
        handoff = full.v[begin];
    }
    if (report != nullptr) report->sub_problems = static_cast<int>(subs);
    return {std::move(full), std::move(full_policy)};
}

thermal::ThermalState ExactDynamics::step_slot(const thermal::ThermalState& s,
                                               double t_out_c, HvacAction a) const {
    return thermal::step(s, t_out_c, thermal::hvac_thermal_power_w(a, hvac), infiltration,
                         params, pcm.has_value() ? &*pcm : nullptr, slot_seconds, substeps);
}

EnvelopeTrack track_envelope_temperature(const ExactDynamics& dyn,
                                         const thermal::ThermalState& initial,
                                         const std::vector<SlotData>& slots,
                                         const control::DeadbandConfig& nominal) {
    std::vector<double> t_out(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) t_out[k] = slots[k].t_out_c;
    const auto run = control::simulate_deadband(initial, t_out, nominal, dyn.params,
                                                dyn.pcm.has_value() ? &*dyn.pcm : nullptr,
                                                dyn.hvac, dyn.infiltration,
                                                dyn.slot_seconds, dyn.substeps);
    return EnvelopeTrack{run.t_e_c, run.t_in_c};
}

TransitionFn make_exact_transition(const ExactDynamics& dyn, const EnvelopeTrack& track,
                                   std::vector<double> t_out_c) {
    if (track.t_e_c.size() < t_out_c.size() || track.t_e_c.size() != track.t_in_c.size()) {
        throw std::invalid_argument("exact transition: envelope track shorter than horizon");
    }
    std::vector<double> offset(t_out_c.size());
    for (std::size_t k = 0; k < offset.size(); ++k) {
        offset[k] = track.t_e_c[k] - track.t_in_c[k];
    }
    return [dyn, off = std::move(offset), t_out = std::move(t_out_c)](
               int k, double t_in, HvacAction a) {
        const auto kk = static_cast<std::size_t>(k);
        const thermal::ThermalState s{t_in + off[kk], t_in};
        return dyn.step_slot(s, t_out[kk], a).t_indoor_c;
    };
}

TrackedSolution solve_with_tracking(MdpInstance& mdp, const TemperatureGrid& grid,
                                    const ExactDynamics& dyn,
                                    const thermal::ThermalState& initial,
                                    const control::DeadbandConfig& nominal,
                                    int iterations, std::size_t sub_horizon_slots,
                                    SolveReport* report) {
    if (iterations < 1) throw std::invalid_argument("tracking: iterations must be >= 1");
    std::vector<double> t_out(mdp.horizon());
    for (std::size_t k = 0; k < mdp.horizon(); ++k) t_out[k] = mdp.slots[k].t_out_c;

    TrackedSolution out;
    out.track = track_envelope_temperature(dyn, initial, mdp.slots, nominal);
    for (int it = 0; it < iterations; ++it) {
        mdp.transition = make_exact_transition(dyn, out.track, t_out);
        auto [table, policy] = madp_solve(mdp, grid, sub_horizon_slots, report);
        out.table = std::move(table);
        out.policy = std::move(policy);
        if (it + 1 < iterations) {
            const auto traj = simulate_policy(out.policy, mdp, grid, initial, dyn);
            out.track = EnvelopeTrack{traj.t_e_c, traj.t_in_c};
        }
    }
    return out;
}

SimulatedTrajectory simulate_policy(const Policy& policy, const MdpInstance& mdp,
                                    const TemperatureGrid& grid,
                                    const thermal::ThermalState& initial,
                                    const ExactDynamics& dyn) {
    const std::size_t horizon = mdp.horizon();
    if (policy.action.size() != horizon) {
        throw std::invalid_argument("simulate_policy: policy horizon mismatch");
    }
    SimulatedTrajectory traj;
    traj.t_in_c.reserve(horizon + 1);
    traj.t_e_c.reserve(horizon + 1);

    thermal::ThermalState state = initial;
    traj.t_in_c.push_back(state.t_indoor_c);
    traj.t_e_c.push_back(state.t_envelope_c);
    HvacAction prev = HvacAction::Off;

    for (std::size_t k = 0; k < horizon; ++k) {
        bool clipped = false;
        const int cell = grid.nearest(state.t_indoor_c, &clipped);
        traj.clamp_warnings += clipped;
        const HvacAction a = policy.action[k][cell];

        state = dyn.step_slot(state, mdp.slots[k].t_out_c, a);
        if (state.t_indoor_c < -20.0 || state.t_indoor_c > 60.0) {
            throw thermal::IntegrationError(
                "simulate_policy: state left the sanity band at slot " + std::to_string(k),
                static_cast<int>(k));
        }

        const double hvac_kwh = hvac_electrical_kwh(a, mdp.hvac, mdp.slot_seconds);
        const double net = mdp.slots[k].demand_kwh + hvac_kwh - mdp.slots[k].pv_kwh;
        const double imported = std::max(0.0, net);
        const double exported = std::max(0.0, -net);
        const double elec = mdp.slots[k].price * imported - mdp.feed_in * exported;
        const double pen = comfort_penalty(state.t_indoor_c, mdp.comfort, mdp.penalty);

        if (k > 0 && a != prev) ++traj.hvac_transitions;
        prev = a;
        traj.actions.push_back(a);
        traj.t_in_c.push_back(state.t_indoor_c);
        traj.t_e_c.push_back(state.t_envelope_c);
        traj.hvac_kwh.push_back(hvac_kwh);
        traj.import_kwh.push_back(imported);
        traj.export_kwh.push_back(exported);
        traj.electricity_cost.push_back(elec);
        traj.penalty_cost.push_back(pen);
        traj.total_electricity_cost += elec;
        traj.total_penalty_cost += pen;
        traj.comfort_violation_slots += pen > 0.0;
    }
    traj.realized_objective = traj.total_electricity_cost + traj.total_penalty_cost;
    return traj;
}

double bellman_residual(const MdpInstance& mdp, const TemperatureGrid& grid,
                        const ValueTable& table, const Policy& policy) {
    double worst = 0.0;
    const int n = grid.size();
    for (std::size_t k = 0; k < mdp.horizon(); ++k) {
        for (int i = 0; i < n; ++i) {
            const double t = grid.value(i);
            double best = std::numeric_limits<double>::infinity();
            double policy_q = std::numeric_limits<double>::infinity();
            for (HvacAction a : kActionOrder) {
                const double next = mdp.transition(static_cast<int>(k), t, a);
                const double q = stage_cost(a, mdp.slots[k], mdp.hvac, next, mdp.comfort,
                                            mdp.penalty, mdp.feed_in, mdp.slot_seconds) +
                                 table.v[k + 1][grid.nearest(next)];
                best = std::min(best, q);
                if (a == policy.action[k][i]) policy_q = q;
            }
            worst = std::max(worst, std::abs(table.v[k][i] - best));
            worst = std::max(worst, std::abs(policy_q - table.v[k][i]));
        }
    }
    return worst;
}

TeGridSolution value_iteration_te_grid(const MdpInstance& mdp,
                                       const TemperatureGrid& tin_grid,
                                       const TemperatureGrid& te_grid,
                                       const ExactDynamics& dyn) {
    validate_instance(mdp, tin_grid, /*require_transition=*/false);
    validate(te_grid);
    const int n_tin = tin_grid.size();
    const int n_te = te_grid.size();
    const std::size_t n = static_cast<std::size_t>(n_tin) * n_te;
    const std::size_t horizon = mdp.horizon();

    // Terminal layer depends on t_in only.
    std::vector<double> v_next(n), v_cur(n);
    for (int e = 0; e < n_te; ++e) {
        for (int i = 0; i < n_tin; ++i) {
            v_next[static_cast<std::size_t>(e) * n_tin + i] =
                comfort_penalty(tin_grid.value(i), mdp.comfort, mdp.penalty);
        }
    }

    TeGridSolution sol;
    sol.action.assign(horizon, std::vector<HvacAction>(n, HvacAction::Off));

    for (std::size_t kk = horizon; kk-- > 0;) {
        for (int e = 0; e < n_te; ++e) {
            for (int i = 0; i < n_tin; ++i) {
                const std::size_t idx = static_cast<std::size_t>(e) * n_tin + i;
                double best = std::numeric_limits<double>::infinity();
                HvacAction best_a = HvacAction::Off;
                for (HvacAction a : kActionOrder) {
                    const thermal::ThermalState s{te_grid.value(e), tin_grid.value(i)};
                    const auto next = dyn.step_slot(s, mdp.slots[kk].t_out_c, a);
                    const std::size_t jdx =
                        static_cast<std::size_t>(te_grid.nearest(next.t_envelope_c)) * n_tin +
                        tin_grid.nearest(next.t_indoor_c);
                    const double q =
                        stage_cost(a, mdp.slots[kk], mdp.hvac, next.t_indoor_c, mdp.comfort,
                                   mdp.penalty, mdp.feed_in, mdp.slot_seconds) +
                        v_next[jdx];
                    if (q < best) {
                        best = q;
                        best_a = a;
                    }
                }
                v_cur[idx] = best;
                sol.action[kk][idx] = best_a;
            }
        }
        std::swap(v_cur, v_next);
    }
    sol.initial_values = v_next;
    return sol;
}

SimulatedTrajectory simulate_te_grid_policy(const TeGridSolution& sol,
                                            const MdpInstance& mdp,
                                            const TemperatureGrid& tin_grid,
                                            const TemperatureGrid& te_grid,
                                            const thermal::ThermalState& initial,
                                            const ExactDynamics& dyn) {
    // Reuse the 1-D driver by adapting the lookup.
    Policy flat;
    flat.action.assign(mdp.horizon(), {});
    SimulatedTrajectory traj;
    thermal::ThermalState state = initial;
    traj.t_in_c.push_back(state.t_indoor_c);
    traj.t_e_c.push_back(state.t_envelope_c);
    HvacAction prev = HvacAction::Off;
    const int n_tin = tin_grid.size();

    for (std::size_t k = 0; k < mdp.horizon(); ++k) {
        const std::size_t idx =
            static_cast<std::size_t>(te_grid.nearest(state.t_envelope_c)) * n_tin +
            tin_grid.nearest(state.t_indoor_c);
        const HvacAction a = sol.action[k][idx];
        state = dyn.step_slot(state, mdp.slots[k].t_out_c, a);

        const double hvac_kwh = hvac_electrical_kwh(a, mdp.hvac, mdp.slot_seconds);
        const double net = mdp.slots[k].demand_kwh + hvac_kwh - mdp.slots[k].pv_kwh;
        const double imported = std::max(0.0, net);
        const double exported = std::max(0.0, -net);
        const double elec = mdp.slots[k].price * imported - mdp.feed_in * exported;
        const double pen = comfort_penalty(state.t_indoor_c, mdp.comfort, mdp.penalty);
        if (k > 0 && a != prev) ++traj.hvac_transitions;
        prev = a;
        traj.actions.push_back(a);
        traj.t_in_c.push_back(state.t_indoor_c);
        traj.t_e_c.push_back(state.t_envelope_c);
        traj.hvac_kwh.push_back(hvac_kwh);
        traj.import_kwh.push_back(imported);
        traj.export_kwh.push_back(exported);
        traj.electricity_cost.push_back(elec);
        traj.penalty_cost.push_back(pen);
        traj.total_electricity_cost += elec;
        traj.total_penalty_cost += pen;
        traj.comfort_violation_slots += pen > 0.0;
    }
    traj.realized_objective = traj.total_electricity_cost + traj.total_penalty_cost;
    return traj;
}

}  // namespace hems::optimizer
