#include "gridco/neural.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "gridco/error.hpp"

namespace gridco {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

void write_block(std::ostream& os, const Eigen::MatrixXd& m) {
    os << m.rows() << ' ' << m.cols();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) os << ' ' << std::hexfloat << m(i, j) << std::defaultfloat;
    os << '\n';
}

Eigen::MatrixXd read_block(std::istream& is) {
    Eigen::Index r = 0, c = 0;
    if (!(is >> r >> c) || r < 0 || c < 0) throw ParseError("checkpoint: bad matrix header");
    Eigen::MatrixXd m(r, c);
    std::string tok;
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) {
            if (!(is >> tok)) throw ParseError("checkpoint: truncated matrix");
            m(i, j) = std::strtod(tok.c_str(), nullptr);
        }
    return m;
}

void write_layers(std::ostream& os, const std::vector<DenseLayer>& layers) {
    os << layers.size() << '\n';
    for (const auto& l : layers) {
        write_block(os, l.W);
        write_block(os, l.b);
    }
}

std::vector<DenseLayer> read_layers(std::istream& is) {
    std::size_t n = 0;
    if (!(is >> n)) throw ParseError("checkpoint: missing layer count");
    std::vector<DenseLayer> layers(n);
    for (auto& l : layers) {
        l.W = read_block(is);
        Eigen::MatrixXd b = read_block(is);
        if (b.cols() != 1 || b.rows() != l.W.rows()) throw ParseError("checkpoint: bias shape mismatch");
        l.b = b.col(0);
    }
    return layers;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output)
    : sizes_(std::move(layer_sizes)), output_(output) {
    if (sizes_.size() < 2) throw ValidationError("mlp needs at least an input and an output width");
    for (auto s : sizes_)
        if (s == 0) throw ValidationError("mlp layer widths must be positive");
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
        const auto in = static_cast<Eigen::Index>(sizes_[k]);
        const auto out = static_cast<Eigen::Index>(sizes_[k + 1]);
        layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    }
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_sizes, OutputActivation output, std::mt19937_64& rng) {
    Mlp net(std::move(layer_sizes), output);
    for (std::size_t k = 0; k < net.layers_.size(); ++k) {
        auto& l = net.layers_[k];
        const double fan_in = static_cast<double>(l.W.cols());
        const double fan_out = static_cast<double>(l.W.rows());
        const bool last = k + 1 == net.layers_.size();
        const double limit = last ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> u(-limit, limit);
        for (Eigen::Index j = 0; j < l.W.cols(); ++j)
            for (Eigen::Index i = 0; i < l.W.rows(); ++i) l.W(i, j) = u(rng);
    }
    return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
    return forward_batch(x).col(0);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X, MlpTape* tape) const {
    if (layers_.empty()) throw ValidationError("mlp has no layers");
    if (static_cast<std::size_t>(X.rows()) != input_dim())
        throw DimensionError("mlp input has " + std::to_string(X.rows()) + " rows, expected " +
                             std::to_string(input_dim()));
    if (tape) tape->inputs.clear();
    Eigen::MatrixXd h = X;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        if (tape) tape->inputs.push_back(h);
        Eigen::MatrixXd z = layers_[k].W * h;
        z.colwise() += layers_[k].b;
        if (k + 1 < layers_.size())
            h = z.cwiseMax(0.0);
        else
            h = output_ == OutputActivation::sigmoid ? sigmoid(z) : z;
    }
    if (tape) tape->output = h;
    return h;
}

MlpGradients Mlp::backward(const MlpTape& tape, const Eigen::MatrixXd& dY, Eigen::MatrixXd* dX) const {
    if (tape.inputs.size() != layers_.size()) throw DimensionError("mlp backward: tape does not match network");
    if (dY.rows() != tape.output.rows() || dY.cols() != tape.output.cols())
        throw DimensionError("mlp backward: upstream gradient shape mismatch");
    MlpGradients grads(layers_.size());
    Eigen::MatrixXd delta = dY;
    if (output_ == OutputActivation::sigmoid)
        delta = delta.cwiseProduct(tape.output.cwiseProduct((1.0 - tape.output.array()).matrix()));
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const auto& in = tape.inputs[k];
        grads[k].W = delta * in.transpose();
        grads[k].b = delta.rowwise().sum();
        if (k > 0 || dX) {
            Eigen::MatrixXd up = layers_[k].W.transpose() * delta;
            if (k > 0) {
                // `in` is the ReLU output of layer k-1; its derivative is in > 0.
                delta = (in.array() > 0.0).select(up, 0.0);
            } else {
                *dX = std::move(up);
            }
        }
    }
    return grads;
}

std::size_t Mlp::num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

bool Mlp::same_architecture(const Mlp& other) const {
    return sizes_ == other.sizes_ && output_ == other.output_;
}

MlpGradients Mlp::zero_gradients() const {
    MlpGradients g;
    for (const auto& l : layers_)
        g.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
    return g;
}

void Mlp::write(std::ostream& os) const {
    os << "mlp 1 " << (output_ == OutputActivation::sigmoid ? "sigmoid" : "identity") << ' ' << sizes_.size();
    for (auto s : sizes_) os << ' ' << s;
    os << '\n';
    write_layers(os, layers_);
}

Mlp Mlp::read(std::istream& is) {
    std::string tag, act;
    int version = 0;
    std::size_t n = 0;
    if (!(is >> tag >> version >> act >> n) || tag != "mlp" || version != 1)
        throw ParseError("checkpoint: expected an mlp v1 record");
    std::vector<std::size_t> sizes(n);
    for (auto& s : sizes)
        if (!(is >> s)) throw ParseError("checkpoint: truncated mlp header");
    if (act != "sigmoid" && act != "identity") throw ParseError("checkpoint: unknown activation " + act);
    Mlp net(sizes, act == "sigmoid" ? OutputActivation::sigmoid : OutputActivation::identity);
    auto layers = read_layers(is);
    if (layers.size() != net.layers_.size()) throw ParseError("checkpoint: layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].W.rows() != net.layers_[k].W.rows() || layers[k].W.cols() != net.layers_[k].W.cols())
            throw ParseError("checkpoint: layer shape mismatch");
        net.layers_[k] = std::move(layers[k]);
    }
    return net;
}

AdamState AdamState::for_network(const Mlp& net) {
    AdamState s;
    s.m = net.zero_gradients();
    s.v = net.zero_gradients();
    return s;
}

void AdamState::write(std::ostream& os) const {
    os << "adam 1 " << step << ' ' << std::hexfloat << beta1 << ' ' << beta2 << ' ' << eps << std::defaultfloat
       << '\n';
    write_layers(os, m);
    write_layers(os, v);
}

AdamState AdamState::read(std::istream& is) {
    std::string tag, b1, b2, e;
    int version = 0;
    AdamState s;
    if (!(is >> tag >> version >> s.step >> b1 >> b2 >> e) || tag != "adam" || version != 1)
        throw ParseError("checkpoint: expected an adam v1 record");
    s.beta1 = std::strtod(b1.c_str(), nullptr);
    s.beta2 = std::strtod(b2.c_str(), nullptr);
    s.eps = std::strtod(e.c_str(), nullptr);
    s.m = read_layers(is);
    s.v = read_layers(is);
    return s;
}

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& s, double lr) {
    auto& layers = net.layers();
    if (grads.size() != layers.size()) throw DimensionError("adam: gradient does not match network");
    if (s.m.size() != layers.size()) s = AdamState::for_network(net);
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = s.beta1 * m + (1.0 - s.beta1) * g;
        v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseAbs2();
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
    };
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (grads[k].W.rows() != layers[k].W.rows() || grads[k].W.cols() != layers[k].W.cols())
            throw DimensionError("adam: gradient shape mismatch");
        update(layers[k].W, grads[k].W, s.m[k].W, s.v[k].W);
        update(layers[k].b, grads[k].b, s.m[k].b, s.v[k].b);
    }
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
    if (!target.same_architecture(source)) throw DimensionError("soft update: architectures differ");
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("soft update: tau must lie in (0, 1]");
    auto& t = target.layers();
    const auto& s = source.layers();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (tau == 1.0) {
            t[k] = s[k];
            continue;
        }
        t[k].W = (1.0 - tau) * t[k].W + tau * s[k].W;
        t[k].b = (1.0 - tau) * t[k].b + tau * s[k].b;
    }
}

}  // namespace gridco
