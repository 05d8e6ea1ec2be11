#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "optbench/core.hpp"

namespace optbench::mlp {

enum class Activation : std::uint8_t { Relu = 0, Linear = 1 };

struct LayerSpec {
    std::size_t units = 0;
    Activation activation = Activation::Relu;
    bool operator==(const LayerSpec&) const = default;
};

struct Architecture {
    std::vector<LayerSpec> layers;

    // 256 relu -> 128 relu -> 1 linear
    static Architecture three_layer();
    // 256 relu -> 128 relu -> 64 relu -> 32 relu -> 1 linear
    static Architecture five_layer();

    // Non-empty, no zero-width layer, output layer is a single linear unit.
    void validate() const;
    std::size_t parameter_count(std::size_t inputs = kFeatureCount) const;
    bool operator==(const Architecture&) const = default;
};

// Z-score statistics fitted on the training split. The binary is_call
// column passes through unscaled and constant columns keep deviation 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> deviation;

    static Standardizer fit(const Dataset& train);
    static Standardizer identity(std::size_t features);

    FeatureRow apply(const FeatureRow& row) const;
    FeatureRow invert(const FeatureRow& row) const;
    // Column-per-sample matrix (features x n).
    Eigen::MatrixXd apply(const Dataset& ds) const;
};

std::vector<FeatureRow> standardize(std::span<const FeatureRow> rows, const Standardizer& stats);

struct DenseLayer {
    Eigen::MatrixXd weights;  // units x fan_in
    Eigen::VectorXd bias;     // units
    Activation activation = Activation::Relu;
};

struct Network {
    std::vector<DenseLayer> layers;
    Standardizer scaler;

    std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols()); }
    Architecture architecture() const;
    std::size_t parameter_count() const;

    // Raw (unstandardized) feature row in, price out.
    double predict(std::span<const double> row) const;
    std::vector<double> predict(const Dataset& ds) const;
};

// He-normal weights (std sqrt(2 / fan_in)), zero biases, identity scaler.
Network init_network(const Architecture& arch, std::size_t inputs, std::uint64_t seed);

// batch is features x n and already standardized. Returns n outputs.
Eigen::VectorXd forward(const Network& net, const Eigen::MatrixXd& batch);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
    double loss = 0.0;  // mean absolute error of the batch
};

// Gradients of (1/n) sum |pred - target|, with the subgradient at zero taken
// as 0. Rows are processed in fixed-size chunks summed in order.
Gradients backward(const Network& net, const Eigen::MatrixXd& batch, std::span<const double> targets);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_weights, v_weights;
    std::vector<Eigen::VectorXd> m_bias, v_bias;
    std::uint64_t step = 0;

    static AdamState zeros_like(const Network& net);
};

void adam_step(Network& net, AdamState& state, const Gradients& grads, double lr,
               const AdamConfig& cfg = {});

struct MlpTrainConfig {
    double initial_lr = 0.01;
    double plateau_factor = 0.1;
    std::size_t plateau_patience = 10;
    double min_lr = 1e-6;
    std::size_t early_stop_patience = 150;
    std::size_t max_epochs = 1000;
    std::size_t batch_size = 4096;
    AdamConfig adam{};
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const MlpTrainConfig&) const = default;
};

// Drops the learning rate by plateau_factor after every plateau_patience
// consecutive epochs without a new best validation loss, down to min_lr.
class PlateauScheduler {
public:
    explicit PlateauScheduler(const MlpTrainConfig& cfg);

    // Feeds one epoch's validation loss; returns the rate for the next epoch.
    double observe(double val_loss);
    double lr() const noexcept { return lr_; }

private:
    double lr_;
    double factor_;
    double min_lr_;
    std::size_t patience_;
    std::size_t wait_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

double reduce_lr_on_plateau(std::span<const double> val_history, const MlpTrainConfig& cfg);

class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    // True once `patience` epochs have passed since the best epoch.
    bool observe(std::size_t epoch, double val_loss);
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    double best_value() const noexcept { return best_; }

private:
    std::size_t patience_;
    std::size_t best_epoch_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_mae = 0.0;
    double val_mae = 0.0;
    bool operator==(const EpochMetrics&) const = default;
};

struct MlpTrainResult {
    Network network;  // parameters from the best validation epoch
    std::vector<EpochMetrics> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

// Throws DivergenceError when the validation MAE is non-finite or above 1e12.
MlpTrainResult train_mlp(const Dataset& train, const Dataset& val, const Architecture& arch,
                         const MlpTrainConfig& cfg);

}  // namespace optbench::mlp
