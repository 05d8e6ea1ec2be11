#include "optbench/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "optbench/errors.hpp"
#include "optbench/random.hpp"

namespace optbench::mlp {

namespace {

constexpr Eigen::Index kChunk = 256;
constexpr double kDivergenceLimit = 1e12;

}  // namespace

Architecture Architecture::three_layer() {
    return Architecture{{{256, Activation::Relu}, {128, Activation::Relu}, {1, Activation::Linear}}};
}

Architecture Architecture::five_layer() {
    return Architecture{{{256, Activation::Relu},
                         {128, Activation::Relu},
                         {64, Activation::Relu},
                         {32, Activation::Relu},
                         {1, Activation::Linear}}};
}

void Architecture::validate() const {
    if (layers.empty()) throw ValidationError("layers", "architecture has no layers");
    for (const auto& l : layers)
        if (l.units == 0) throw ValidationError("layers", "a layer has zero units");
    if (layers.back().units != 1 || layers.back().activation != Activation::Linear)
        throw ValidationError("layers", "output layer must be a single linear unit");
}

std::size_t Architecture::parameter_count(std::size_t inputs) const {
    std::size_t total = 0;
    std::size_t fan_in = inputs;
    for (const auto& l : layers) {
        total += l.units * fan_in + l.units;
        fan_in = l.units;
    }
    return total;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::identity(std::size_t features) {
    return Standardizer{std::vector<double>(features, 0.0), std::vector<double>(features, 1.0)};
}

Standardizer Standardizer::fit(const Dataset& train) {
    if (train.empty()) throw ValidationError("train", "cannot fit standardization on no rows");
    auto s = identity(kFeatureCount);
    const auto n = static_cast<double>(train.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (f == feature::kIsCall) continue;
        double mean = 0.0;
        for (const auto& r : train.rows()) mean += r.features[f];
        mean /= n;
        double ss = 0.0;
        for (const auto& r : train.rows()) ss += (r.features[f] - mean) * (r.features[f] - mean);
        const double dev = std::sqrt(ss / n);
        s.mean[f] = mean;
        s.deviation[f] = dev > 0.0 ? dev : 1.0;
    }
    return s;
}

FeatureRow Standardizer::apply(const FeatureRow& row) const {
    FeatureRow out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = (row[f] - mean[f]) / deviation[f];
    return out;
}

FeatureRow Standardizer::invert(const FeatureRow& row) const {
    FeatureRow out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = row[f] * deviation[f] + mean[f];
    return out;
}

Eigen::MatrixXd Standardizer::apply(const Dataset& ds) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(mean.size()), static_cast<Eigen::Index>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& row = ds[i].features;
        for (std::size_t f = 0; f < mean.size(); ++f)
            x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)) = (row[f] - mean[f]) / deviation[f];
    }
    return x;
}

std::vector<FeatureRow> standardize(std::span<const FeatureRow> rows, const Standardizer& stats) {
    std::vector<FeatureRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(stats.apply(r));
    return out;
}

// ---------------------------------------------------------------------------

Architecture Network::architecture() const {
    Architecture arch;
    for (const auto& l : layers) arch.layers.push_back({static_cast<std::size_t>(l.weights.rows()), l.activation});
    return arch;
}

std::size_t Network::parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return total;
}

double Network::predict(std::span<const double> row) const {
    if (row.size() != input_dim())
        throw ValidationError("row", "expected " + std::to_string(input_dim()) + " features, got " +
                                         std::to_string(row.size()));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(row.size()), 1);
    for (std::size_t f = 0; f < row.size(); ++f)
        x(static_cast<Eigen::Index>(f), 0) = (row[f] - scaler.mean[f]) / scaler.deviation[f];
    return forward(*this, x)(0);
}

std::vector<double> Network::predict(const Dataset& ds) const {
    if (input_dim() != kFeatureCount)
        throw ValidationError("network", "expects " + std::to_string(input_dim()) + " inputs, dataset has 26");
    const Eigen::VectorXd out = forward(*this, scaler.apply(ds));
    return {out.data(), out.data() + out.size()};
}

Network init_network(const Architecture& arch, std::size_t inputs, std::uint64_t seed) {
    arch.validate();
    if (inputs == 0) throw ValidationError("inputs", "must be positive");
    std::mt19937_64 rng(derive_seed(seed, 0x1417));
    NormalSampler normal;
    Network net;
    std::size_t fan_in = inputs;
    for (const auto& spec : arch.layers) {
        DenseLayer layer;
        layer.activation = spec.activation;
        layer.weights.resize(static_cast<Eigen::Index>(spec.units), static_cast<Eigen::Index>(fan_in));
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        // Column-major fill order keeps the draw sequence well defined.
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = scale * normal(rng);
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.units));
        net.layers.push_back(std::move(layer));
        fan_in = spec.units;
    }
    net.scaler = Standardizer::identity(inputs);
    return net;
}

namespace {

void check_batch(const Network& net, const Eigen::MatrixXd& batch) {
    if (net.layers.empty()) throw ValidationError("network", "has no layers");
    if (static_cast<std::size_t>(batch.rows()) != net.input_dim())
        throw ValidationError("batch", "expected " + std::to_string(net.input_dim()) + " features, got " +
                                           std::to_string(batch.rows()));
}

void activate(Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::Relu) z = z.cwiseMax(0.0);
}

}  // namespace

Eigen::VectorXd forward(const Network& net, const Eigen::MatrixXd& batch) {
    check_batch(net, batch);
    Eigen::VectorXd out(batch.cols());
    for (Eigen::Index c0 = 0; c0 < batch.cols(); c0 += kChunk) {
        const Eigen::Index len = std::min(kChunk, batch.cols() - c0);
        Eigen::MatrixXd a = batch.middleCols(c0, len);
        for (const auto& layer : net.layers) {
            Eigen::MatrixXd z = layer.weights * a;
            z.colwise() += layer.bias;
            activate(z, layer.activation);
            a = std::move(z);
        }
        out.segment(c0, len) = a.row(0).transpose();
    }
    return out;
}

namespace {

// Unnormalized gradient sums for one chunk of columns.
void chunk_gradients(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& x,
                     std::span<const double> targets, Gradients& out) {
    const std::size_t n_layers = net.layers.size();
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    std::vector<Eigen::MatrixXd> pre(n_layers);
    acts[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = net.layers[l];
        pre[l] = layer.weights * acts[l];
        pre[l].colwise() += layer.bias;
        acts[l + 1] = pre[l];
        activate(acts[l + 1], layer.activation);
    }

    Eigen::MatrixXd delta(1, x.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const double err = acts[n_layers](0, i) - targets[static_cast<std::size_t>(i)];
        loss += std::abs(err);
        delta(0, i) = err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0);
    }
    out.loss = loss;

    for (std::size_t l = n_layers; l-- > 0;) {
        const auto& layer = net.layers[l];
        if (layer.activation == Activation::Relu)
            delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
        out.weights[l] = delta * acts[l].transpose();
        out.bias[l] = delta.rowwise().sum();
        if (l > 0) delta = layer.weights.transpose() * delta;
    }
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    for (const auto& layer : net.layers) {
        g.weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    return g;
}

}  // namespace

Gradients backward(const Network& net, const Eigen::MatrixXd& batch, std::span<const double> targets) {
    check_batch(net, batch);
    if (static_cast<std::size_t>(batch.cols()) != targets.size())
        throw ValidationError("targets", "count does not match batch size");
    Gradients total = zero_gradients(net);
    if (batch.cols() == 0) return total;

    const Eigen::Index n_chunks = (batch.cols() + kChunk - 1) / kChunk;
    std::vector<Gradients> partial(static_cast<std::size_t>(n_chunks), total);
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < n_chunks; ++c) {
        const Eigen::Index c0 = c * kChunk;
        const Eigen::Index len = std::min(kChunk, batch.cols() - c0);
        chunk_gradients(net, batch.middleCols(c0, len),
                        targets.subspan(static_cast<std::size_t>(c0), static_cast<std::size_t>(len)),
                        partial[static_cast<std::size_t>(c)]);
    }
    // Fixed reduction order, independent of the thread count.
    for (const auto& p : partial) {
        for (std::size_t l = 0; l < total.weights.size(); ++l) {
            total.weights[l] += p.weights[l];
            total.bias[l] += p.bias[l];
        }
        total.loss += p.loss;
    }
    const double inv_n = 1.0 / static_cast<double>(batch.cols());
    for (std::size_t l = 0; l < total.weights.size(); ++l) {
        total.weights[l] *= inv_n;
        total.bias[l] *= inv_n;
    }
    total.loss *= inv_n;
    return total;
}

// ---------------------------------------------------------------------------

AdamState AdamState::zeros_like(const Network& net) {
    AdamState s;
    for (const auto& layer : net.layers) {
        s.m_weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        s.v_weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        s.m_bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
        s.v_bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    return s;
}

namespace {

template <typename Param, typename Moment>
void adam_update(Param& theta, Moment& m, Moment& v, const Moment& g, double lr, double bc1, double bc2,
                 const AdamConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
}

}  // namespace

void adam_step(Network& net, AdamState& state, const Gradients& grads, double lr, const AdamConfig& cfg) {
    if (state.m_weights.size() != net.layers.size() || grads.weights.size() != net.layers.size())
        throw ValidationError("adam", "state or gradient shapes do not match the network");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        adam_update(net.layers[l].weights, state.m_weights[l], state.v_weights[l], grads.weights[l], lr, bc1,
                    bc2, cfg);
        adam_update(net.layers[l].bias, state.m_bias[l], state.v_bias[l], grads.bias[l], lr, bc1, bc2, cfg);
    }
}

// ---------------------------------------------------------------------------

void MlpTrainConfig::validate() const {
    if (!(initial_lr > 0.0)) throw ValidationError("initial_lr", "must be positive");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
        throw ValidationError("plateau_factor", "must lie in (0, 1)");
    if (plateau_patience == 0) throw ValidationError("plateau_patience", "must be positive");
    if (!(min_lr > 0.0 && min_lr < initial_lr)) throw ValidationError("min_lr", "must lie in (0, initial_lr)");
    if (early_stop_patience == 0) throw ValidationError("early_stop_patience", "must be positive");
    if (batch_size == 0) throw ValidationError("batch_size", "must be positive");
}

PlateauScheduler::PlateauScheduler(const MlpTrainConfig& cfg)
    : lr_(cfg.initial_lr), factor_(cfg.plateau_factor), min_lr_(cfg.min_lr), patience_(cfg.plateau_patience) {}

double PlateauScheduler::observe(double val_loss) {
    if (val_loss < best_) {
        best_ = val_loss;
        wait_ = 0;
        return lr_;
    }
    if (++wait_ >= patience_) {
        wait_ = 0;
        const double reduced = lr_ * factor_;
        // Snap to the floor instead of leaving an ulp above it.
        lr_ = reduced <= min_lr_ * (1.0 + 1e-9) ? min_lr_ : reduced;
    }
    return lr_;
}

double reduce_lr_on_plateau(std::span<const double> val_history, const MlpTrainConfig& cfg) {
    PlateauScheduler scheduler(cfg);
    for (double v : val_history) scheduler.observe(v);
    return scheduler.lr();
}

bool EarlyStopping::observe(std::size_t epoch, double val_loss) {
    if (val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epoch;
        return false;
    }
    return epoch - best_epoch_ >= patience_;
}

// ---------------------------------------------------------------------------

MlpTrainResult train_mlp(const Dataset& train, const Dataset& val, const Architecture& arch,
                         const MlpTrainConfig& cfg) {
    arch.validate();
    cfg.validate();
    if (train.empty()) throw ValidationError("train", "training data is empty");
    if (val.empty()) throw ValidationError("val", "validation data is empty");

    MlpTrainResult result;
    Network net = init_network(arch, kFeatureCount, cfg.seed);
    net.scaler = Standardizer::fit(train);
    result.network = net;
    if (cfg.max_epochs == 0) return result;

    const Eigen::MatrixXd x_train = net.scaler.apply(train);
    const Eigen::MatrixXd x_val = net.scaler.apply(val);
    const auto y_train = train.targets();
    const auto y_val = val.targets();
    const std::size_t n = train.size();
    const std::size_t batch_size = std::min(cfg.batch_size, n);

    AdamState adam = AdamState::zeros_like(net);
    PlateauScheduler scheduler(cfg);
    EarlyStopping stopper(cfg.early_stop_patience);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(kFeatureCount), static_cast<Eigen::Index>(batch_size));
    std::vector<double> batch_targets(batch_size);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = scheduler.lr();
        std::mt19937_64 rng(derive_seed(cfg.seed, 0x5e11, epoch));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t len = std::min(batch_size, n - start);
            if (static_cast<std::size_t>(batch.cols()) != len) {
                batch.resize(Eigen::NoChange, static_cast<Eigen::Index>(len));
                batch_targets.resize(len);
            }
            for (std::size_t j = 0; j < len; ++j) {
                const std::size_t r = order[start + j];
                batch.col(static_cast<Eigen::Index>(j)) = x_train.col(static_cast<Eigen::Index>(r));
                batch_targets[j] = y_train[r];
            }
            const Gradients grads = backward(net, batch, batch_targets);
            loss_sum += grads.loss * static_cast<double>(len);
            adam_step(net, adam, grads, lr, cfg.adam);
        }

        const Eigen::VectorXd val_pred = forward(net, x_val);
        double val_mae = 0.0;
        for (std::size_t i = 0; i < y_val.size(); ++i)
            val_mae += std::abs(val_pred(static_cast<Eigen::Index>(i)) - y_val[i]);
        val_mae /= static_cast<double>(y_val.size());
        if (!std::isfinite(val_mae) || val_mae > kDivergenceLimit) throw DivergenceError(epoch, val_mae);

        result.history.push_back(EpochMetrics{epoch, lr, loss_sum / static_cast<double>(n), val_mae});
        if (val_mae < stopper.best_value()) result.network = net;
        scheduler.observe(val_mae);
        if (stopper.observe(epoch, val_mae)) {
            result.stopped_early = true;
            break;
        }
    }
    result.best_epoch = stopper.best_epoch();
    return result;
}

}  // namespace optbench::mlp
