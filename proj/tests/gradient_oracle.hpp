#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "optbench/mlp.hpp"
#include "optbench/random.hpp"

namespace optbench::oracle {

using mlp::Activation;
using mlp::Architecture;
using mlp::Network;

// Independent forward pass that also records which side of every kink each
// sample sits on: relu pre-activations and the sign of each residual.
inline double batch_loss(const Network& net, const Eigen::MatrixXd& x, const std::vector<double>& t,
                  std::vector<bool>* pattern = nullptr) {
    Eigen::MatrixXd a = x;
    for (const auto& layer : net.layers) {
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.bias;
        if (layer.activation == Activation::Relu) {
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                if (pattern) pattern->push_back(z.data()[i] > 0.0);
                z.data()[i] = std::max(0.0, z.data()[i]);
            }
        }
        a = std::move(z);
    }
    long double s = 0.0L;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = a(0, static_cast<Eigen::Index>(i)) - t[i];
        if (pattern) pattern->push_back(r > 0.0);
        s += std::abs(r);
    }
    return static_cast<double>(s / static_cast<long double>(t.size()));
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // a kink lay inside every tried step
};

// The loss is piecewise linear in each parameter, so a central difference is
// exact up to rounding whenever no kink lies inside [p - h, p + h]. Steps are
// shrunk until that holds, which lets h stay large enough for rounding to be
// negligible.
inline GradientCheck check_gradients(Network net, const Eigen::MatrixXd& x, const std::vector<double>& t) {
    const auto g = mlp::backward(net, x, t);
    std::vector<bool> base;
    batch_loss(net, x, t, &base);
    GradientCheck out;
    auto check = [&](double& param, double analytic) {
        const double saved = param;
        for (double h = 1e-2; h >= 1e-7; h /= 2) {
            std::vector<bool> pu, pd;
            param = saved + h;
            const double up = batch_loss(net, x, t, &pu);
            param = saved - h;
            const double dn = batch_loss(net, x, t, &pd);
            param = saved;
            if (pu != base || pd != base) continue;
            const double numeric = (up - dn) / (2 * h);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic - numeric) / denom);
            ++out.checked;
            return;
        }
        ++out.skipped;
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) check(layer.weights.data()[i], g.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias.data()[i], g.bias[l].data()[i]);
    }
    return out;
}

inline Architecture random_architecture(std::mt19937_64& rng) {
    Architecture a;
    const auto hidden = 1 + uniform_index(rng, 4);
    for (std::size_t i = 0; i < hidden; ++i) a.layers.push_back({1 + uniform_index(rng, 8), Activation::Relu});
    a.layers.push_back({1, Activation::Linear});
    return a;
}

}  // namespace optbench::oracle
