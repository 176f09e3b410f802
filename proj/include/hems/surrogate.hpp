// Feed-forward approximator of the one-slot thermal transition: maps
// (hvac action, T_in at k-1, T_out at k-1, T_out at k) to T_in at k.
// Trained offline on trajectories generated by the exact ODE model, then used
// as a drop-in transition inside the scheduler.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hems/data.hpp"
#include "hems/optimizer.hpp"

namespace hems::surrogate {

using thermal::HvacAction;

// Action encoding on the single scalar input: off 0, heat +1, cool -1.
double encode_action(HvacAction a);

struct TrainingSample {
    double action = 0.0;
    double t_in_prev = 0.0;
    double t_out_prev = 0.0;
    double t_out = 0.0;
    double target = 0.0;  // T_in after the slot, from the exact step
};

struct Normalization {
    std::array<double, 4> in_mean{}, in_std{};
    std::array<double, 4> in_min{}, in_max{};  // training envelope, for clamping
    double out_mean = 0.0, out_std = 1.0;
};

struct SurrogateModel {
    int hidden = 16;
    Normalization norm;
    std::vector<double> w1;  // hidden x 4, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
    double validation_mae_c = -1.0;  // set by validate(); <0 means unvalidated
};

// Smooth saturating activation and its derivative: x / sqrt(1 + x^2) based.
double activation(double x);
double activation_derivative(double x);

struct SamplerConfig {
    double pulse_probability = 0.05;  // chance a float slot starts an HVAC pulse
    int max_pulse_slots = 3;
    double hold_episode_fraction = 0.4;  // episodes that regulate a setpoint
    double hold_min_c = 18.0, hold_max_c = 26.0;
    int episode_slots = 48;
    double guard_low_c = 15.3;   // force heat below, grid protection
    double guard_high_c = 29.7;  // force cool above
};

struct GenerateReport {
    std::vector<int> band_counts;        // 1 degC bands across [15, 30)
    std::vector<double> empty_band_low;  // lower edges of uncovered bands
};

std::vector<TrainingSample> generate_training_data(const data::TimeSeries& weather,
                                                   const optimizer::ExactDynamics& dyn,
                                                   std::size_t n,
                                                   const SamplerConfig& sampler,
                                                   std::uint64_t seed,
                                                   GenerateReport* report = nullptr);

struct TrainConfig {
    int hidden = 16;
    int max_epochs = 400;
    int batch_size = 256;
    double learning_rate = 0.05;
    double lr_decay = 0.99;  // per-epoch multiplicative decay
    double momentum = 0.9;
    double validation_fraction = 0.2;
    int patience = 60;  // early-stopping epochs without validation improvement
    std::uint64_t seed = 1;
};

struct TrainReport {
    int epochs_run = 0;
    int best_epoch = 0;
    double train_mae_c = 0.0;
    double validation_mae_c = 0.0;
};

struct TrainingError : std::runtime_error {
    TrainingError(const std::string& what, int epoch_index)
        : std::runtime_error(what), epoch(epoch_index) {}
    int epoch;
};

SurrogateModel train(const std::vector<TrainingSample>& samples, const TrainConfig& cfg,
                     TrainReport* report = nullptr);

double predict(const SurrogateModel& model, double action, double t_in_prev,
               double t_out_prev, double t_out, bool* clamped = nullptr);

// Vectorized inference where only t_in varies; the hot path inside the solver.
void predict_batch(const SurrogateModel& model, double action,
                   const std::vector<double>& t_in_prev, double t_out_prev, double t_out,
                   std::vector<double>& out);

struct BandError {
    double low_c = 0.0, high_c = 0.0;
    int count = 0;
    double mae_c = 0.0;
};

struct ValidationReport {
    double mae_c = 0.0;
    double max_error_c = 0.0;
    std::size_t count = 0;
    std::vector<BandError> bands;  // 1 degC bands across [15, 30)
};

// Scores the model on held-out samples and stores the MAE into the model.
ValidationReport validate(SurrogateModel& model,
                          const std::vector<TrainingSample>& heldout);

void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);
std::string validation_report_text(const ValidationReport& report);

// Transition pair for the solver; throws when the model's stored validation
// MAE exceeds the gate (or the model was never validated).
struct SurrogateTransition {
    optimizer::TransitionFn fn;
    optimizer::BatchTransitionFn batch;
};
SurrogateTransition make_surrogate_transition(const SurrogateModel& model,
                                              std::vector<double> t_out_prev,
                                              std::vector<double> t_out,
                                              double gate_mae_c);

// Mean-squared-error loss over normalized samples plus analytic parameter
// gradients; exposed so the gradient check can compare against finite
// differences.
struct Gradients {
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
};
double mse_loss_and_gradients(const SurrogateModel& model,
                              const std::vector<TrainingSample>& samples,
                              Gradients& grads);

}  // namespace hems::surrogate
