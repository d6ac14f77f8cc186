#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace gridco {

enum class OutputActivation { identity, sigmoid };

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
};

// Same shapes as the network's layers.
using MlpGradients = std::vector<DenseLayer>;

// Values recorded by forward_batch for backward.
struct MlpTape {
    std::vector<Eigen::MatrixXd> inputs;  // input of every layer, samples as columns
    Eigen::MatrixXd output;
};

// Dense feed-forward network: ReLU on hidden layers, identity or sigmoid
// on the output layer.
class Mlp {
public:
    Mlp() = default;
    // Zero-initialized parameters.
    Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output);
    // He-uniform hidden layers, Xavier-uniform output layer.
    static Mlp initialized(std::vector<std::size_t> layer_sizes, OutputActivation output, std::mt19937_64& rng);

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, MlpTape* tape = nullptr) const;

    // Gradients of sum_j dY(:, j) . y_j; dX receives dL/dX when non-null.
    MlpGradients backward(const MlpTape& tape, const Eigen::MatrixXd& dY, Eigen::MatrixXd* dX = nullptr) const;

    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    OutputActivation output_activation() const { return output_; }
    std::size_t num_parameters() const;
    bool same_architecture(const Mlp& other) const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    MlpGradients zero_gradients() const;

    void write(std::ostream& os) const;
    static Mlp read(std::istream& is);

private:
    std::vector<std::size_t> sizes_;
    OutputActivation output_ = OutputActivation::identity;
    std::vector<DenseLayer> layers_;
};

struct AdamState {
    MlpGradients m;
    MlpGradients v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_network(const Mlp& net);

    void write(std::ostream& os) const;
    static AdamState read(std::istream& is);
};

// Bias-corrected Adam step minimizing the loss whose gradient is `grads`.
void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state, double lr);

// target <- (1 - tau) target + tau source.
void soft_update(Mlp& target, const Mlp& source, double tau);

}  // namespace gridco
