#include "hems/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace hems::surrogate {

double encode_action(HvacAction a) {
    switch (a) {
        case HvacAction::Off: return 0.0;
        case HvacAction::Heat: return 1.0;
        case HvacAction::Cool: return -1.0;
    }
    return 0.0;
}

double activation(double x) { return 0.5 * (1.0 + x / std::sqrt(1.0 + x * x)); }

double activation_derivative(double x) {
    const double d = 1.0 + x * x;
    return 0.5 / (d * std::sqrt(d));
}

std::vector<TrainingSample> generate_training_data(const data::TimeSeries& weather,
                                                   const optimizer::ExactDynamics& dyn,
                                                   std::size_t n,
                                                   const SamplerConfig& sampler,
                                                   std::uint64_t seed,
                                                   GenerateReport* report) {
    std::vector<TrainingSample> samples;
    samples.reserve(n);
    if (weather.values.empty() && n > 0) {
        throw std::invalid_argument("generate_training_data: empty weather corpus");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> hold_temp(sampler.hold_min_c, sampler.hold_max_c);
    std::uniform_int_distribution<int> pulse_len(1, std::max(1, sampler.max_pulse_slots));
    std::uniform_int_distribution<std::size_t> start_slot(
        0, weather.values.empty() ? 0 : weather.values.size() - 1);

    std::size_t cursor = 0;
    while (samples.size() < n) {
        // New episode: canonical equilibrium start at a random point in the
        // weather corpus, temperature pulled toward the grid interior.
        cursor = start_slot(rng);
        const double t0 =
            std::clamp(weather.values[cursor], sampler.guard_low_c, sampler.guard_high_c);
        thermal::ThermalState state{t0, t0};

        const bool hold_episode = u01(rng) < sampler.hold_episode_fraction;
        const double hold_at = hold_temp(rng);
        int pulse_remaining = 0;
        HvacAction pulse_action = HvacAction::Off;

        for (int e = 0; e < sampler.episode_slots && samples.size() < n; ++e) {
            const std::size_t k = (cursor + e) % weather.values.size();
            const double t_out = weather.values[k];
            const double t_out_prev = weather.values[k == 0 ? 0 : k - 1];

            HvacAction a = HvacAction::Off;
            if (pulse_remaining > 0) {
                a = pulse_action;
                --pulse_remaining;
            } else if (hold_episode) {
                if (state.t_indoor_c < hold_at - 0.25) {
                    a = HvacAction::Heat;
                } else if (state.t_indoor_c > hold_at + 0.25) {
                    a = HvacAction::Cool;
                }
                // Occasional forced idle diversifies the hold limit cycle.
                if (a != HvacAction::Off && u01(rng) < 0.10) a = HvacAction::Off;
            } else if (u01(rng) < sampler.pulse_probability) {
                pulse_action = u01(rng) < 0.5 ? HvacAction::Heat : HvacAction::Cool;
                pulse_remaining = pulse_len(rng) - 1;
                a = pulse_action;
            }
            // Grid guards override everything.
            if (state.t_indoor_c < sampler.guard_low_c) {
                a = HvacAction::Heat;
                pulse_remaining = 0;
            } else if (state.t_indoor_c > sampler.guard_high_c) {
                a = HvacAction::Cool;
                pulse_remaining = 0;
            }

            TrainingSample s;
            s.action = encode_action(a);
            s.t_in_prev = state.t_indoor_c;
            s.t_out_prev = t_out_prev;
            s.t_out = t_out;
            state = dyn.step_slot(state, t_out, a);
            s.target = state.t_indoor_c;
            samples.push_back(s);
        }
    }

    if (report != nullptr) {
        report->band_counts.assign(15, 0);
        report->empty_band_low.clear();
        for (const auto& s : samples) {
            const int band = static_cast<int>(std::floor(s.t_in_prev - 15.0));
            if (band >= 0 && band < 15) ++report->band_counts[band];
        }
        for (int b = 0; b < 15; ++b) {
            if (report->band_counts[b] == 0) {
                report->empty_band_low.push_back(15.0 + b);
            }
        }
    }
    return samples;
}

namespace {

struct Normalized {
    std::vector<std::array<double, 4>> x;
    std::vector<double> y;
};

Normalization fit_normalization(const std::vector<TrainingSample>& samples) {
    Normalization norm;
    norm.in_min.fill(std::numeric_limits<double>::infinity());
    norm.in_max.fill(-std::numeric_limits<double>::infinity());
    std::array<double, 4> sum{}, sq{};
    double ysum = 0.0, ysq = 0.0;
    for (const auto& s : samples) {
        const std::array<double, 4> x{s.action, s.t_in_prev, s.t_out_prev, s.t_out};
        for (int i = 0; i < 4; ++i) {
            sum[i] += x[i];
            sq[i] += x[i] * x[i];
            norm.in_min[i] = std::min(norm.in_min[i], x[i]);
            norm.in_max[i] = std::max(norm.in_max[i], x[i]);
        }
        ysum += s.target;
        ysq += s.target * s.target;
    }
    const double n = static_cast<double>(samples.size());
    for (int i = 0; i < 4; ++i) {
        norm.in_mean[i] = sum[i] / n;
        const double var = std::max(1e-12, sq[i] / n - norm.in_mean[i] * norm.in_mean[i]);
        norm.in_std[i] = std::sqrt(var);
    }
    norm.out_mean = ysum / n;
    norm.out_std = std::sqrt(std::max(1e-12, ysq / n - norm.out_mean * norm.out_mean));
    return norm;
}

std::array<double, 4> normalize_input(const Normalization& norm, const TrainingSample& s) {
    return {(s.action - norm.in_mean[0]) / norm.in_std[0],
            (s.t_in_prev - norm.in_mean[1]) / norm.in_std[1],
            (s.t_out_prev - norm.in_mean[2]) / norm.in_std[2],
            (s.t_out - norm.in_mean[3]) / norm.in_std[3]};
}

double forward_normalized(const SurrogateModel& m, const std::array<double, 4>& x) {
    double out = m.b2;
    for (int h = 0; h < m.hidden; ++h) {
        double z = m.b1[h];
        const double* w = &m.w1[static_cast<std::size_t>(h) * 4];
        z += w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
        out += m.w2[h] * activation(z);
    }
    return out;
}

double mae_on(const SurrogateModel& m, const std::vector<TrainingSample>& samples) {
    if (samples.empty()) return 0.0;
    double err = 0.0;
    for (const auto& s : samples) {
        const double yhat =
            forward_normalized(m, normalize_input(m.norm, s)) * m.norm.out_std +
            m.norm.out_mean;
        err += std::abs(yhat - s.target);
    }
    return err / static_cast<double>(samples.size());
}

}  // namespace

double mse_loss_and_gradients(const SurrogateModel& model,
                              const std::vector<TrainingSample>& samples,
                              Gradients& grads) {
    const int hidden = model.hidden;
    grads.w1.assign(static_cast<std::size_t>(hidden) * 4, 0.0);
    grads.b1.assign(hidden, 0.0);
    grads.w2.assign(hidden, 0.0);
    grads.b2 = 0.0;

    double loss = 0.0;
    std::vector<double> z(hidden), act(hidden);
    for (const auto& s : samples) {
        const auto x = normalize_input(model.norm, s);
        const double y = (s.target - model.norm.out_mean) / model.norm.out_std;
        double yhat = model.b2;
        for (int h = 0; h < hidden; ++h) {
            const double* w = &model.w1[static_cast<std::size_t>(h) * 4];
            z[h] = model.b1[h] + w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
            act[h] = activation(z[h]);
            yhat += model.w2[h] * act[h];
        }
        const double resid = yhat - y;
        loss += resid * resid;
        const double scale = 2.0 * resid / static_cast<double>(samples.size());
        grads.b2 += scale;
        for (int h = 0; h < hidden; ++h) {
            grads.w2[h] += scale * act[h];
            const double dz = scale * model.w2[h] * activation_derivative(z[h]);
            grads.b1[h] += dz;
            double* gw = &grads.w1[static_cast<std::size_t>(h) * 4];
            gw[0] += dz * x[0];
            gw[1] += dz * x[1];
            gw[2] += dz * x[2];
            gw[3] += dz * x[3];
        }
    }
    return loss / static_cast<double>(samples.size());
}

SurrogateModel train(const std::vector<TrainingSample>& samples, const TrainConfig& cfg,
                     TrainReport* report) {
    if (samples.size() < 1000) {
        throw std::invalid_argument("train: need at least 1000 samples");
    }
    if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
        throw std::invalid_argument("train: validation fraction must be in (0, 1)");
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n_val =
        std::max<std::size_t>(1, static_cast<std::size_t>(samples.size() *
                                                          cfg.validation_fraction));
    std::vector<TrainingSample> val, tr;
    val.reserve(n_val);
    tr.reserve(samples.size() - n_val);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? val : tr).push_back(samples[order[i]]);
    }

    SurrogateModel m;
    m.hidden = cfg.hidden;
    m.norm = fit_normalization(tr);
    std::normal_distribution<double> init(0.0, 1.0);
    m.w1.resize(static_cast<std::size_t>(cfg.hidden) * 4);
    m.b1.assign(cfg.hidden, 0.0);
    m.w2.resize(cfg.hidden);
    for (auto& w : m.w1) w = init(rng) / 2.0;          // fan-in 4
    for (auto& w : m.w2) w = init(rng) / std::sqrt(static_cast<double>(cfg.hidden));
    m.b2 = 0.0;

    Gradients vel;  // momentum state
    vel.w1.assign(m.w1.size(), 0.0);
    vel.b1.assign(m.b1.size(), 0.0);
    vel.w2.assign(m.w2.size(), 0.0);

    SurrogateModel best = m;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0, stale = 0, epoch = 0;

    std::vector<std::size_t> idx(tr.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<TrainingSample> batch;
    Gradients g;

    double lr = cfg.learning_rate;
    for (epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t off = 0; off < idx.size(); off += cfg.batch_size) {
            const std::size_t hi = std::min(idx.size(), off + cfg.batch_size);
            batch.assign(hi - off, TrainingSample{});
            for (std::size_t i = off; i < hi; ++i) batch[i - off] = tr[idx[i]];
            const double loss = mse_loss_and_gradients(m, batch, g);
            if (!std::isfinite(loss)) {
                throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch),
                                    epoch);
            }
            for (std::size_t i = 0; i < m.w1.size(); ++i) {
                vel.w1[i] = cfg.momentum * vel.w1[i] - lr * g.w1[i];
                m.w1[i] += vel.w1[i];
            }
            for (int h = 0; h < cfg.hidden; ++h) {
                vel.b1[h] = cfg.momentum * vel.b1[h] - lr * g.b1[h];
                m.b1[h] += vel.b1[h];
                vel.w2[h] = cfg.momentum * vel.w2[h] - lr * g.w2[h];
                m.w2[h] += vel.w2[h];
            }
            vel.b2 = cfg.momentum * vel.b2 - lr * g.b2;
            m.b2 += vel.b2;
        }
        lr *= cfg.lr_decay;
        const double val_mae = mae_on(m, val);
        if (val_mae < best_val - 1e-6) {
            best_val = val_mae;
            best = m;
            best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }

    if (report != nullptr) {
        report->epochs_run = epoch;
        report->best_epoch = best_epoch;
        report->train_mae_c = mae_on(best, tr);
        report->validation_mae_c = best_val;
    }
    return best;
}

double predict(const SurrogateModel& model, double action, double t_in_prev,
               double t_out_prev, double t_out, bool* clamped) {
    TrainingSample s;
    s.action = action;
    s.t_in_prev = t_in_prev;
    s.t_out_prev = t_out_prev;
    s.t_out = t_out;
    // Clamp to the training envelope.
    bool clip = false;
    const double* mins = model.norm.in_min.data();
    const double* maxs = model.norm.in_max.data();
    double* vals[4] = {&s.action, &s.t_in_prev, &s.t_out_prev, &s.t_out};
    for (int i = 0; i < 4; ++i) {
        if (*vals[i] < mins[i]) {
            *vals[i] = mins[i];
            clip = true;
        } else if (*vals[i] > maxs[i]) {
            *vals[i] = maxs[i];
            clip = true;
        }
    }
    if (clamped != nullptr) *clamped = clip;
    return forward_normalized(model, normalize_input(model.norm, s)) * model.norm.out_std +
           model.norm.out_mean;
}

void predict_batch(const SurrogateModel& model, double action,
                   const std::vector<double>& t_in_prev, double t_out_prev, double t_out,
                   std::vector<double>& out) {
    const int hidden = model.hidden;
    out.resize(t_in_prev.size());

    const auto& norm = model.norm;
    const double a = std::clamp(action, norm.in_min[0], norm.in_max[0]);
    const double tp = std::clamp(t_out_prev, norm.in_min[2], norm.in_max[2]);
    const double to = std::clamp(t_out, norm.in_min[3], norm.in_max[3]);
    const double xa = (a - norm.in_mean[0]) / norm.in_std[0];
    const double xp = (tp - norm.in_mean[2]) / norm.in_std[2];
    const double xo = (to - norm.in_mean[3]) / norm.in_std[3];

    // Fold the fixed inputs into per-unit offsets; only t_in varies.
    thread_local std::vector<double> base, slope;
    base.resize(hidden);
    slope.resize(hidden);
    for (int h = 0; h < hidden; ++h) {
        const double* w = &model.w1[static_cast<std::size_t>(h) * 4];
        base[h] = model.b1[h] + w[0] * xa + w[2] * xp + w[3] * xo -
                  w[1] * norm.in_mean[1] / norm.in_std[1];
        slope[h] = w[1] / norm.in_std[1];
    }
    const double lo = norm.in_min[1], hi = norm.in_max[1];
    for (std::size_t i = 0; i < t_in_prev.size(); ++i) {
        const double t = std::clamp(t_in_prev[i], lo, hi);
        double y = model.b2;
        for (int h = 0; h < hidden; ++h) {
            y += model.w2[h] * activation(base[h] + slope[h] * t);
        }
        out[i] = y * norm.out_std + norm.out_mean;
    }
}

ValidationReport validate(SurrogateModel& model,
                          const std::vector<TrainingSample>& heldout) {
    ValidationReport rep;
    rep.count = heldout.size();
    rep.bands.assign(15, BandError{});
    for (int b = 0; b < 15; ++b) {
        rep.bands[b].low_c = 15.0 + b;
        rep.bands[b].high_c = 16.0 + b;
    }
    double total = 0.0;
    for (const auto& s : heldout) {
        const double yhat = predict(model, s.action, s.t_in_prev, s.t_out_prev, s.t_out);
        const double err = std::abs(yhat - s.target);
        total += err;
        rep.max_error_c = std::max(rep.max_error_c, err);
        const int band = static_cast<int>(std::floor(s.t_in_prev - 15.0));
        if (band >= 0 && band < 15) {
            ++rep.bands[band].count;
            rep.bands[band].mae_c += err;
        }
    }
    for (auto& b : rep.bands) {
        if (b.count > 0) b.mae_c /= b.count;
    }
    rep.mae_c = heldout.empty() ? 0.0 : total / static_cast<double>(heldout.size());
    model.validation_mae_c = rep.mae_c;
    return rep;
}

std::string validation_report_text(const ValidationReport& rep) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "samples %zu  mae %.5f degC  max %.5f degC\n",
                  rep.count, rep.mae_c, rep.max_error_c);
    out << buf;
    for (const auto& b : rep.bands) {
        std::snprintf(buf, sizeof(buf), "band [%4.1f, %4.1f)  n %-7d mae %.5f\n", b.low_c,
                      b.high_c, b.count, b.count > 0 ? b.mae_c : 0.0);
        out << buf;
    }
    return out.str();
}

void save_model(const SurrogateModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    out << "hems-surrogate v1\n";
    out << "hidden " << m.hidden << "\n";
    auto put_row = [&](const char* name, const double* v, std::size_t n) {
        out << name;
        for (std::size_t i = 0; i < n; ++i) {
            out << ' ';
            put(v[i]);
        }
        out << "\n";
    };
    put_row("in_mean", m.norm.in_mean.data(), 4);
    put_row("in_std", m.norm.in_std.data(), 4);
    put_row("in_min", m.norm.in_min.data(), 4);
    put_row("in_max", m.norm.in_max.data(), 4);
    out << "out_mean ";
    put(m.norm.out_mean);
    out << "\nout_std ";
    put(m.norm.out_std);
    out << "\nvalidation_mae ";
    put(m.validation_mae_c);
    out << "\n";
    put_row("w1", m.w1.data(), m.w1.size());
    put_row("b1", m.b1.data(), m.b1.size());
    put_row("w2", m.w2.data(), m.w2.size());
    out << "b2 ";
    put(m.b2);
    out << "\n";
}

SurrogateModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "hems-surrogate" || version != "v1") {
        throw std::runtime_error(path + ": not a v1 surrogate model file");
    }
    SurrogateModel m;
    std::string key;
    auto read_row = [&](const char* name, double* v, std::size_t n) {
        in >> key;
        if (key != name) throw std::runtime_error(path + ": expected field " + name);
        for (std::size_t i = 0; i < n; ++i) in >> v[i];
    };
    in >> key >> m.hidden;
    if (key != "hidden" || m.hidden < 1 || m.hidden > 4096) {
        throw std::runtime_error(path + ": bad hidden layer size");
    }
    read_row("in_mean", m.norm.in_mean.data(), 4);
    read_row("in_std", m.norm.in_std.data(), 4);
    read_row("in_min", m.norm.in_min.data(), 4);
    read_row("in_max", m.norm.in_max.data(), 4);
    read_row("out_mean", &m.norm.out_mean, 1);
    read_row("out_std", &m.norm.out_std, 1);
    read_row("validation_mae", &m.validation_mae_c, 1);
    m.w1.resize(static_cast<std::size_t>(m.hidden) * 4);
    m.b1.resize(m.hidden);
    m.w2.resize(m.hidden);
    read_row("w1", m.w1.data(), m.w1.size());
    read_row("b1", m.b1.data(), m.b1.size());
    read_row("w2", m.w2.data(), m.w2.size());
    read_row("b2", &m.b2, 1);
    if (!in) throw std::runtime_error(path + ": truncated model file");
    return m;
}

SurrogateTransition make_surrogate_transition(const SurrogateModel& model,
                                              std::vector<double> t_out_prev,
                                              std::vector<double> t_out,
                                              double gate_mae_c) {
    if (model.validation_mae_c < 0.0) {
        throw std::invalid_argument(
            "surrogate transition: model has no validation record");
    }
    if (model.validation_mae_c > gate_mae_c) {
        std::ostringstream msg;
        msg << "surrogate transition: validation MAE " << model.validation_mae_c
            << " degC exceeds the configured gate " << gate_mae_c << " degC";
        throw std::invalid_argument(msg.str());
    }
    if (t_out_prev.size() != t_out.size()) {
        throw std::invalid_argument("surrogate transition: series lengths differ");
    }
    auto shared = std::make_shared<SurrogateModel>(model);
    auto prev = std::make_shared<std::vector<double>>(std::move(t_out_prev));
    auto cur = std::make_shared<std::vector<double>>(std::move(t_out));

    SurrogateTransition out;
    out.fn = [shared, prev, cur](int k, double t_in, HvacAction a) {
        return predict(*shared, encode_action(a), t_in, (*prev)[k], (*cur)[k]);
    };
    out.batch = [shared, prev, cur](int k, const std::vector<double>& t_in, HvacAction a,
                                    std::vector<double>& res) {
        predict_batch(*shared, encode_action(a), t_in, (*prev)[k], (*cur)[k], res);
    };
    return out;
}

}  // namespace hems::surrogate
