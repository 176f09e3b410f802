#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hems/surrogate.hpp"
#include "hems/synth.hpp"

using namespace hems::surrogate;
using hems::optimizer::ExactDynamics;
using hems::thermal::HvacAction;
using hems::thermal::ThermalState;

namespace {

ExactDynamics dynamics(bool with_pcm) {
    ExactDynamics dyn;
    dyn.params = fixtures::params(fixtures::kScenarioAccessibility);
    dyn.infiltration = fixtures::infiltration();
    dyn.hvac = fixtures::hvac();
    dyn.slot_seconds = 1800.0;
    dyn.substeps = fixtures::kScenarioSubsteps;
    if (with_pcm) dyn.pcm = fixtures::pcm_mt21();
    return dyn;
}

std::vector<TrainingSample> corpus(bool with_pcm, std::size_t n, std::uint64_t seed,
                                   GenerateReport* report = nullptr) {
    const auto weather = hems::synth::synth_weather(hems::synth::climate_preset(2), 365, 17);
    return generate_training_data(weather, dynamics(with_pcm), n, SamplerConfig{}, seed,
                                  report);
}

}  // namespace

TEST_CASE("generate: n = 0 gives an empty set") {
    const auto weather = hems::synth::synth_weather(hems::synth::climate_preset(0), 10, 1);
    CHECK(generate_training_data(weather, dynamics(false), 0, SamplerConfig{}, 1).empty());
}

TEST_CASE("generate: all-off actions in constant weather track the free run") {
    hems::data::TimeSeries weather;
    weather.units = "degC";
    weather.values.assign(200, 21.0);
    SamplerConfig sampler;
    sampler.pulse_probability = 0.0;
    sampler.hold_episode_fraction = 0.0;
    const auto dyn = dynamics(false);
    const auto samples = generate_training_data(weather, dyn, 100, sampler, 5);
    REQUIRE(samples.size() == 100);
    for (const auto& s : samples) {
        CHECK(s.action == 0.0);
        // Re-run the exact step from the stated inputs: the generator started
        // episodes at equilibrium, so t_e == t_in on the first slot and the
        // re-stepped trajectory matches the recorded targets.
        const ThermalState st{s.t_in_prev, s.t_in_prev};
        const auto next = dyn.step_slot(st, s.t_out, HvacAction::Off);
        CHECK(next.t_indoor_c == doctest::Approx(s.target).epsilon(1e-6));
    }
}

TEST_CASE("generate: full-year corpus covers the grid with a coverage report") {
    GenerateReport report;
    const auto samples = corpus(false, 40000, 11, &report);
    CHECK(samples.size() == 40000);
    REQUIRE(report.band_counts.size() == 15);
    int covered = 0;
    for (int c : report.band_counts) covered += c > 0;
    CHECK(covered >= 12);  // cool-temperate weather cannot reach every band equally

    // A narrow corpus leaves bands empty and the report lists them.
    hems::data::TimeSeries narrow;
    narrow.units = "degC";
    narrow.values.assign(200, 22.0);
    SamplerConfig sampler;
    sampler.pulse_probability = 0.0;
    sampler.hold_episode_fraction = 0.0;
    GenerateReport narrow_report;
    generate_training_data(narrow, dynamics(false), 500, sampler, 2, &narrow_report);
    CHECK_FALSE(narrow_report.empty_band_low.empty());
}

TEST_CASE("gradient check: analytic gradients match central differences") {
    const auto samples = corpus(false, 1200, 3);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> init(0.0, 0.5);

    SurrogateModel m;
    m.hidden = 5;
    m.w1.resize(20);
    m.b1.resize(5);
    m.w2.resize(5);
    for (auto& w : m.w1) w = init(rng);
    for (auto& w : m.b1) w = init(rng);
    for (auto& w : m.w2) w = init(rng);
    m.b2 = init(rng);
    // Plain normalization so the check exercises realistic magnitudes.
    m.norm.in_mean = {0.0, 20.0, 15.0, 15.0};
    m.norm.in_std = {0.5, 4.0, 6.0, 6.0};
    m.norm.out_mean = 20.0;
    m.norm.out_std = 4.0;

    std::vector<TrainingSample> batch(samples.begin(), samples.begin() + 256);
    Gradients g;
    mse_loss_and_gradients(m, batch, g);

    auto numeric = [&](double* param) {
        const double h = 1e-6;
        const double orig = *param;
        Gradients scratch;
        *param = orig + h;
        const double up = mse_loss_and_gradients(m, batch, scratch);
        *param = orig - h;
        const double dn = mse_loss_and_gradients(m, batch, scratch);
        *param = orig;
        return (up - dn) / (2.0 * h);
    };

    for (std::size_t i = 0; i < m.w1.size(); i += 3) {
        const double num = numeric(&m.w1[i]);
        CHECK(std::abs(g.w1[i] - num) <= 1e-4 * std::max(1.0, std::abs(num)));
    }
    for (int h = 0; h < 5; ++h) {
        CHECK(std::abs(g.b1[h] - numeric(&m.b1[h])) <=
              1e-4 * std::max(1.0, std::abs(g.b1[h])));
        CHECK(std::abs(g.w2[h] - numeric(&m.w2[h])) <=
              1e-4 * std::max(1.0, std::abs(g.w2[h])));
    }
    CHECK(std::abs(g.b2 - numeric(&m.b2)) <= 1e-4 * std::max(1.0, std::abs(g.b2)));
}

TEST_CASE("train: linear-regime corpus fits tightly") {
    // No PCM, float episodes with sparse pulses: dynamics are nearly linear
    // and the trajectory states pin the envelope node.
    const auto weather = hems::synth::synth_weather(hems::synth::climate_preset(2), 365, 17);
    SamplerConfig sampler;
    sampler.hold_episode_fraction = 0.0;
    sampler.pulse_probability = 0.02;
    const auto samples =
        generate_training_data(weather, dynamics(false), 12000, sampler, 21);
    TrainConfig cfg;
    cfg.max_epochs = 250;
    TrainReport report;
    const auto model = train(samples, cfg, &report);
    CHECK(report.validation_mae_c < 0.02);
    CHECK(report.train_mae_c < 0.02);
    CHECK(report.epochs_run >= report.best_epoch);
}

TEST_CASE("train: shuffled labels cannot beat predicting the mean") {
    auto samples = corpus(false, 6000, 31);
    std::mt19937_64 rng(1);
    std::vector<double> targets;
    targets.reserve(samples.size());
    for (const auto& s : samples) targets.push_back(s.target);
    std::shuffle(targets.begin(), targets.end(), rng);
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double mean_mae = 0.0;
    for (double t : targets) mean_mae += std::abs(t - mean);
    mean_mae /= static_cast<double>(targets.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].target = targets[i];

    TrainConfig cfg;
    cfg.max_epochs = 60;
    TrainReport report;
    train(samples, cfg, &report);
    CHECK(report.validation_mae_c > 0.7 * mean_mae);
}

TEST_CASE("train: duplicated samples change nothing material") {
    const auto samples = corpus(false, 5000, 41);
    auto doubled = samples;
    doubled.insert(doubled.end(), samples.begin(), samples.end());
    TrainConfig cfg;
    cfg.max_epochs = 120;
    TrainReport a, b;
    train(samples, cfg, &a);
    train(doubled, cfg, &b);
    CHECK(std::abs(a.validation_mae_c - b.validation_mae_c) < 0.02);
}

TEST_CASE("train: precondition and divergence reporting") {
    const auto tiny = corpus(false, 500, 51);
    CHECK_THROWS_AS(train(tiny, TrainConfig{}), std::invalid_argument);

    const auto samples = corpus(false, 3000, 52);
    TrainConfig wild;
    wild.learning_rate = 1e6;
    wild.max_epochs = 10;
    try {
        train(samples, wild);
        FAIL("expected divergence");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 0);
    }
}

TEST_CASE("predict: deterministic, equilibrium-consistent, envelope-clamped") {
    const auto samples = corpus(false, 15000, 61);
    TrainConfig cfg;
    cfg.max_epochs = 250;
    auto model = train(samples, cfg);

    const double a = predict(model, 0.0, 21.0, 21.0, 21.0);
    const double b = predict(model, 0.0, 21.0, 21.0, 21.0);
    CHECK(a == b);
    CHECK(std::abs(a - 21.0) < 0.05);  // equilibrium input stays put

    bool clamped = false;
    predict(model, 0.0, 80.0, 21.0, 21.0, &clamped);
    CHECK(clamped);
    clamped = false;
    predict(model, 0.0, 21.0, 21.0, 21.0, &clamped);
    CHECK_FALSE(clamped);

    // Batch inference agrees with scalar inference.
    std::vector<double> tins, out;
    for (double t = 16.0; t <= 29.0; t += 0.37) tins.push_back(t);
    predict_batch(model, 1.0, tins, 10.0, 12.0, out);
    REQUIRE(out.size() == tins.size());
    for (std::size_t i = 0; i < tins.size(); ++i) {
        CHECK(out[i] == doctest::Approx(predict(model, 1.0, tins[i], 10.0, 12.0))
                            .epsilon(1e-12));
    }
}

TEST_CASE("validate: report shape, self-consistency, and the optimizer gate") {
    const auto samples = corpus(false, 8000, 71);
    std::vector<TrainingSample> tr(samples.begin(), samples.begin() + 6000);
    std::vector<TrainingSample> held(samples.begin() + 6000, samples.end());
    TrainConfig cfg;
    cfg.max_epochs = 150;
    auto model = train(tr, cfg);

    auto report = validate(model, held);
    CHECK(report.count == held.size());
    REQUIRE(report.bands.size() == 15);
    CHECK(report.bands.front().low_c == doctest::Approx(15.0));
    CHECK(report.bands.back().high_c == doctest::Approx(30.0));
    CHECK(model.validation_mae_c == doctest::Approx(report.mae_c));
    CHECK_FALSE(validation_report_text(report).empty());

    // A sample set whose targets ARE the model's predictions scores MAE 0.
    auto perfect = held;
    for (auto& s : perfect) {
        s.target = predict(model, s.action, s.t_in_prev, s.t_out_prev, s.t_out);
    }
    auto copy = model;
    CHECK(validate(copy, perfect).mae_c == doctest::Approx(0.0).epsilon(1e-15));

    // Gate logic: a model whose stored MAE exceeds the gate is refused.
    auto bad = model;
    bad.validation_mae_c = 0.08;
    std::vector<double> tout(4, 10.0);
    CHECK_THROWS_WITH_AS(
        make_surrogate_transition(bad, tout, tout, 0.05),
        doctest::Contains("exceeds the configured gate"), std::invalid_argument);
    CHECK_NOTHROW(make_surrogate_transition(model, tout, tout, 1.0));
    auto unvalidated = model;
    unvalidated.validation_mae_c = -1.0;
    CHECK_THROWS_AS(make_surrogate_transition(unvalidated, tout, tout, 1.0),
                    std::invalid_argument);
}

TEST_CASE("serialization: round-trip preserves predictions bit-for-bit") {
    const auto samples = corpus(false, 4000, 81);
    TrainConfig cfg;
    cfg.max_epochs = 80;
    auto model = train(samples, cfg);
    std::vector<TrainingSample> held(samples.begin(), samples.begin() + 500);
    validate(model, held);

    const auto path =
        (std::filesystem::temp_directory_path() / "hems_surrogate_rt.model").string();
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back.hidden == model.hidden);
    CHECK(back.validation_mae_c == model.validation_mae_c);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(15.0, 30.0);
    for (int i = 0; i < 200; ++i) {
        const double tin = t(rng), tp = t(rng), to = t(rng);
        for (double a : {-1.0, 0.0, 1.0}) {
            CHECK(predict(back, a, tin, tp, to) == predict(model, a, tin, tp, to));
        }
    }

    // Version/corruption checks.
    std::ofstream bad(path);
    bad << "hems-surrogate v9\n";
    bad.close();
    CHECK_THROWS_AS(load_model(path), std::runtime_error);
}

TEST_CASE("closed-loop drift over 48 slots stays bounded") {
    const auto dyn = dynamics(true);
    const auto weather = hems::synth::synth_weather(hems::synth::climate_preset(2), 365, 17);
    const auto samples =
        generate_training_data(weather, dyn, 60000, SamplerConfig{}, 7);
    TrainConfig cfg;
    cfg.max_epochs = 300;
    TrainReport report;
    auto model = train(samples, cfg, &report);

    // Validation weather: a different stretch of the same climate.
    const auto val_weather =
        hems::synth::synth_weather(hems::synth::climate_preset(2), 30, 99);
    ThermalState state{21.0, 21.0};
    double model_tin = 21.0;
    double worst = 0.0;
    for (int k = 0; k < 48; ++k) {
        const double tp = val_weather.values[k == 0 ? 0 : k - 1];
        const double to = val_weather.values[k];
        const HvacAction a = (k % 16 == 5) ? HvacAction::Heat : HvacAction::Off;
        state = dyn.step_slot(state, to, a);
        model_tin = predict(model, encode_action(a), model_tin, tp, to);
        worst = std::max(worst, std::abs(model_tin - state.t_indoor_c));
    }
    CHECK(worst <= 0.5);
}
