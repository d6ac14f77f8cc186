#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gridco/error.hpp"
#include "gridco/neural.hpp"

using namespace gridco;

namespace {

// L(X) = sum_ij G_ij * Y_ij for a fixed weighting G.
double weighted_output(const Mlp& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& G) {
    return net.forward_batch(X).cwiseProduct(G).sum();
}

bool close_rel(double a, double b, double rel, double abs_floor) {
    return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST(Mlp, ForwardExamples) {
    Mlp lin({1, 1}, OutputActivation::identity);
    lin.layers()[0].W(0, 0) = 2.0;
    lin.layers()[0].b[0] = 1.0;
    EXPECT_DOUBLE_EQ(lin.forward(Eigen::VectorXd::Constant(1, 3.0))[0], 7.0);

    Mlp sig({4, 3, 1}, OutputActivation::sigmoid);
    EXPECT_DOUBLE_EQ(sig.forward(Eigen::VectorXd::Random(4))[0], 0.5);

    Mlp relu({1, 1, 1}, OutputActivation::identity);
    relu.layers()[0].W(0, 0) = -1.0;
    relu.layers()[1].W(0, 0) = 1.0;
    EXPECT_DOUBLE_EQ(relu.forward(Eigen::VectorXd::Constant(1, 5.0))[0], 0.0);

    EXPECT_THROW(lin.forward(Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST(Mlp, BackwardExamples) {
    Mlp lin({1, 1}, OutputActivation::identity);
    MlpTape tape;
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(1, 1, 3.0);
    lin.forward_batch(X, &tape);
    auto g = lin.backward(tape, Eigen::MatrixXd::Ones(1, 1));
    EXPECT_DOUBLE_EQ(g[0].W(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(g[0].b[0], 1.0);

    std::mt19937_64 rng(1);
    auto net = Mlp::initialized({3, 5, 2}, OutputActivation::sigmoid, rng);
    net.forward_batch(Eigen::MatrixXd::Random(3, 4), &tape);
    auto z = net.backward(tape, Eigen::MatrixXd::Zero(2, 4));
    for (const auto& l : z) {
        EXPECT_EQ(l.W.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(l.b.cwiseAbs().maxCoeff(), 0.0);
    }
}

// Central finite differences (h = 1e-5) on 20 random three-layer networks.
TEST(Mlp, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> width(1, 6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto out = trial % 2 ? OutputActivation::sigmoid : OutputActivation::identity;
        auto net = Mlp::initialized({width(rng), width(rng), width(rng), width(rng)}, out, rng);
        for (auto& l : net.layers()) l.b.setRandom();
        const Eigen::Index batch = 3;
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(net.input_dim()), batch);
        Eigen::MatrixXd G = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(net.output_dim()), batch);

        MlpTape tape;
        net.forward_batch(X, &tape);
        Eigen::MatrixXd dX;
        auto grads = net.backward(tape, G, &dX);

        const double h = 1e-5;
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = weighted_output(net, X, G);
            param = saved - h;
            const double down = weighted_output(net, X, G);
            param = saved;
            const double numeric = (up - down) / (2 * h);
            EXPECT_TRUE(close_rel(analytic, numeric, 1e-4, 1e-8)) << analytic << " vs " << numeric;
        };
        for (std::size_t k = 0; k < net.layers().size(); ++k) {
            auto& l = net.layers()[k];
            for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
                for (Eigen::Index j = 0; j < l.W.cols(); ++j) check(l.W(i, j), grads[k].W(i, j));
                check(l.b[i], grads[k].b[i]);
            }
        }
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (Eigen::Index j = 0; j < X.cols(); ++j) check(X(i, j), dX(i, j));
    }
}

TEST(Mlp, ForwardIsDeterministic) {
    std::mt19937_64 rng(9);
    auto net = Mlp::initialized({4, 16, 16, 1}, OutputActivation::sigmoid, rng);
    Eigen::VectorXd x = Eigen::VectorXd::Random(4);
    EXPECT_EQ(net.forward(x)[0], net.forward(x)[0]);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Mlp net({1, 1}, OutputActivation::identity);
    net.layers()[0].W(0, 0) = 1.0;
    auto state = AdamState::for_network(net);
    auto g = net.zero_gradients();
    g[0].W(0, 0) = 1.0;
    g[0].b[0] = 1.0;
    adam_step(net, g, state, 1e-3);
    EXPECT_NEAR(net.layers()[0].W(0, 0), 1.0 - 1e-3, 1e-9);
    EXPECT_EQ(state.step, 1u);

    const double before = net.layers()[0].W(0, 0);
    adam_step(net, g, state, 1e-3);
    EXPECT_LE(std::abs(net.layers()[0].W(0, 0) - before), 1e-3 * (1 + 1e-6));
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::mt19937_64 rng(4);
    auto net = Mlp::initialized({2, 3, 1}, OutputActivation::identity, rng);
    const auto copy = net;
    auto state = AdamState::for_network(net);
    adam_step(net, net.zero_gradients(), state, 1e-2);
    EXPECT_EQ(state.step, 1u);
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        EXPECT_EQ(net.layers()[k].W, copy.layers()[k].W);
        EXPECT_EQ(net.layers()[k].b, copy.layers()[k].b);
    }
}

TEST(SoftUpdate, Examples) {
    Mlp target({1, 1}, OutputActivation::identity), source({1, 1}, OutputActivation::identity);
    target.layers()[0].W(0, 0) = 1.0;
    soft_update(target, source, 0.005);
    EXPECT_DOUBLE_EQ(target.layers()[0].W(0, 0), 0.995);

    target.layers()[0].W(0, 0) = 0.0;
    source.layers()[0].W(0, 0) = 1.0;
    soft_update(target, source, 0.5);
    EXPECT_DOUBLE_EQ(target.layers()[0].W(0, 0), 0.5);

    std::mt19937_64 rng(8);
    auto a = Mlp::initialized({3, 8, 1}, OutputActivation::sigmoid, rng);
    auto b = Mlp::initialized({3, 8, 1}, OutputActivation::sigmoid, rng);
    soft_update(a, b, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Random(3);
    EXPECT_EQ(a.forward(x)[0], b.forward(x)[0]);

    Mlp other({2, 1}, OutputActivation::identity);
    EXPECT_THROW(soft_update(a, other, 0.5), DimensionError);
}

TEST(Checkpoint, RoundTripIsExact) {
    std::mt19937_64 rng(12);
    auto net = Mlp::initialized({3, 7, 5, 1}, OutputActivation::sigmoid, rng);
    auto state = AdamState::for_network(net);
    MlpTape tape;
    net.forward_batch(Eigen::MatrixXd::Random(3, 5), &tape);
    adam_step(net, net.backward(tape, Eigen::MatrixXd::Ones(1, 5)), state, 1e-3);

    std::stringstream ss;
    net.write(ss);
    state.write(ss);
    auto net2 = Mlp::read(ss);
    auto state2 = AdamState::read(ss);
    ASSERT_TRUE(net2.same_architecture(net));
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        EXPECT_EQ(net2.layers()[k].W, net.layers()[k].W);
        EXPECT_EQ(net2.layers()[k].b, net.layers()[k].b);
        EXPECT_EQ(state2.m[k].W, state.m[k].W);
        EXPECT_EQ(state2.v[k].b, state.v[k].b);
    }
    EXPECT_EQ(state2.step, state.step);
    EXPECT_EQ(state2.beta2, state.beta2);
}
