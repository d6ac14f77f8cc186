#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gridco/error.hpp"
#include "gridco/maddpg.hpp"

using namespace gridco;

namespace {

Transition make_transition(double tag, std::size_t n_agents = 1, std::size_t obs = 2) {
    Transition t;
    t.obs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_agents * obs), tag);
    t.next_obs = t.obs;
    t.actions = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_agents), 0.5);
    t.rewards = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_agents), tag);
    return t;
}

MaddpgConfig small_config() {
    MaddpgConfig cfg;
    cfg.actor_hidden = {6, 5};
    cfg.critic_hidden = {7, 4};
    cfg.batch_size = 8;
    cfg.warmup_batches = 2;
    cfg.buffer_capacity = 100;
    return cfg;
}

void zero_network(Mlp& net) {
    for (auto& l : net.layers()) {
        l.W.setZero();
        l.b.setZero();
    }
}

// Random transitions for a two-agent system with observation widths 2 and 3.
std::vector<Transition> random_batch(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Transition> out;
    for (std::size_t k = 0; k < n; ++k) {
        Transition t;
        t.obs = Eigen::VectorXd::NullaryExpr(5, [&] { return u(rng); });
        t.next_obs = Eigen::VectorXd::NullaryExpr(5, [&] { return u(rng); });
        t.actions = Eigen::VectorXd::NullaryExpr(2, [&] { return u(rng); });
        t.rewards = Eigen::VectorXd::NullaryExpr(2, [&] { return u(rng); });
        t.terminal = k % 3 == 0;
        out.push_back(t);
    }
    return out;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& v) {
    std::vector<const Transition*> p;
    for (const auto& t : v) p.push_back(&t);
    return p;
}

double mean_q(const Maddpg& m, std::size_t i, const std::vector<const Transition*>& batch) {
    double q = 0.0;
    m.actor_gradient(i, batch, &q);
    return q;
}

}  // namespace

TEST(ReplayBuffer, FifoEviction) {
    ReplayBuffer buf(2);
    buf.push(make_transition(1));
    EXPECT_EQ(buf.size(), 1u);
    buf.push(make_transition(2));
    buf.push(make_transition(3));
    ASSERT_EQ(buf.size(), 2u);
    EXPECT_EQ(buf.at(0).rewards[0], 2.0);
    EXPECT_EQ(buf.at(1).rewards[0], 3.0);
}

TEST(ReplayBuffer, EmptySampleFails) {
    ReplayBuffer buf(4);
    std::mt19937_64 rng(1);
    EXPECT_THROW(buf.sample(1, rng), Error);
}

TEST(ReplayBuffer, SchemaMismatch) {
    ReplayBuffer buf(4);
    buf.push(make_transition(1, 1, 2));
    EXPECT_THROW(buf.push(make_transition(1, 1, 3)), DimensionError);
}

TEST(ReplayBuffer, SamplingIsUniform) {
    const std::size_t k = 50;
    ReplayBuffer buf(k);
    for (std::size_t i = 0; i < k + 17; ++i) buf.push(make_transition(static_cast<double>(i)));
    std::mt19937_64 rng(77);
    const std::size_t draws = 100000;
    std::vector<double> counts(k, 0.0);
    for (auto i : buf.sample(draws, rng)) counts[i] += 1.0;
    const double expected = static_cast<double>(draws) / static_cast<double>(k);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 0.999 quantile of chi-square with 49 degrees of freedom.
    EXPECT_LT(chi2, 85.3506);
}

TEST(Maddpg, SelectAction) {
    std::mt19937_64 rng(3);
    Maddpg m({2}, small_config(), rng);
    zero_network(m.agent(0).actor);
    Eigen::VectorXd o(2);
    o << 0.3, 0.9;
    EXPECT_DOUBLE_EQ(m.select_action(0, o, false, rng), 0.5);

    std::mt19937_64 init(4);
    Maddpg r({2}, small_config(), init);
    EXPECT_EQ(r.select_action(0, o, false, rng), r.select_action(0, o, false, rng));
    r.agent(0).noise_sigma = 0.0;
    EXPECT_EQ(r.select_action(0, o, true, rng), r.select_action(0, o, false, rng));
    r.agent(0).noise_sigma = 0.5;
    const double noisy = r.select_action(0, o, true, rng);
    EXPECT_GT(noisy, 0.0);
    EXPECT_LT(noisy, 1.0);
    EXPECT_THROW(r.select_action(0, Eigen::VectorXd::Zero(3), false, rng), DimensionError);
}

TEST(Maddpg, TargetsStartAsCopies) {
    std::mt19937_64 rng(5);
    Maddpg m({2, 3}, small_config(), rng);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& a = m.agent(i);
        for (std::size_t k = 0; k < a.actor.layers().size(); ++k)
            EXPECT_EQ(a.actor.layers()[k].W, a.actor_target.layers()[k].W);
        for (std::size_t k = 0; k < a.critic.layers().size(); ++k)
            EXPECT_EQ(a.critic.layers()[k].W, a.critic_target.layers()[k].W);
        EXPECT_EQ(a.critic.input_dim(), 5u + 2u);
    }
}

TEST(Maddpg, TdTarget) {
    EXPECT_NEAR(td_target(1.0, 0.99, 2.0, false), 2.98, 1e-12);
    EXPECT_DOUBLE_EQ(td_target(5.0, 0.99, 2.0, true), 5.0);
}

TEST(Maddpg, CriticFixedPoint) {
    std::mt19937_64 rng(6);
    Maddpg m({2}, small_config(), rng);
    zero_network(m.agent(0).critic);
    zero_network(m.agent(0).critic_target);
    std::vector<Transition> data;
    for (int k = 0; k < 5; ++k) {
        auto t = make_transition(0.2 * k);
        t.rewards.setZero();
        data.push_back(t);
    }
    const auto before = m.agent(0).critic;
    auto loss = m.update_critics(pointers(data));
    EXPECT_DOUBLE_EQ(loss[0], 0.0);
    for (std::size_t k = 0; k < before.layers().size(); ++k)
        EXPECT_EQ(m.agent(0).critic.layers()[k].W, before.layers()[k].W);
}

TEST(Maddpg, CriticRegressesTowardTargets) {
    std::mt19937_64 rng(7);
    auto cfg = small_config();
    cfg.critic_lr = 1e-2;
    Maddpg m({2, 3}, cfg, rng);
    auto data = random_batch(rng, 32);
    for (auto& t : data) t.terminal = true;
    const auto batch = pointers(data);
    const double first = m.update_critics(batch)[0];
    double last = first;
    for (int k = 0; k < 300; ++k) last = m.update_critics(batch)[0];
    EXPECT_LT(last, 0.2 * first);
}

TEST(Maddpg, ActorGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    Maddpg m({2, 3}, small_config(), rng);
    for (auto& l : m.agent(1).critic.layers()) l.b.setRandom();
    auto data = random_batch(rng, 6);
    const auto batch = pointers(data);
    const auto grads = m.actor_gradient(1, batch);
    const double h = 1e-5;
    auto& actor = m.agent(1).actor;
    for (std::size_t k = 0; k < actor.layers().size(); ++k) {
        auto& W = actor.layers()[k].W;
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) {
                const double saved = W(i, j);
                W(i, j) = saved + h;
                const double up = mean_q(m, 1, batch);
                W(i, j) = saved - h;
                const double down = mean_q(m, 1, batch);
                W(i, j) = saved;
                // actor_gradient is the gradient of -mean Q.
                const double numeric = -(up - down) / (2 * h);
                const double analytic = grads[k].W(i, j);
                EXPECT_LE(std::abs(analytic - numeric), std::max(1e-9, 1e-3 * std::abs(numeric)))
                    << "layer " << k << " (" << i << "," << j << ")";
            }
    }
}

TEST(Maddpg, ActorIgnoresCriticConstantInOwnAction) {
    std::mt19937_64 rng(9);
    Maddpg m({2, 3}, small_config(), rng);
    // Column 5 + 0 of the critic input is agent 0's action.
    m.agent(0).critic.layers()[0].W.col(5).setZero();
    auto data = random_batch(rng, 8);
    const auto before = m.agent(0).actor;
    m.update_actor(0, pointers(data));
    for (std::size_t k = 0; k < before.layers().size(); ++k) {
        EXPECT_EQ(m.agent(0).actor.layers()[k].W, before.layers()[k].W);
        EXPECT_EQ(m.agent(0).actor.layers()[k].b, before.layers()[k].b);
    }
}

TEST(Maddpg, SmallActorStepDoesNotLowerQ) {
    std::mt19937_64 rng(10);
    auto cfg = small_config();
    cfg.actor_lr = 1e-6;
    Maddpg m({2, 3}, cfg, rng);
    auto data = random_batch(rng, 16);
    const auto batch = pointers(data);
    for (std::size_t i = 0; i < 2; ++i) {
        const double before = mean_q(m, i, batch);
        const double reported = m.update_actor(i, batch);
        EXPECT_DOUBLE_EQ(reported, before);
        EXPECT_GE(mean_q(m, i, batch), before);
    }
}

TEST(Maddpg, Maintenance) {
    std::mt19937_64 rng(11);
    auto cfg = small_config();
    cfg.tau = 1.0;
    Maddpg full({2}, cfg, rng);
    full.agent(0).actor.layers()[0].W.setConstant(3.0);
    full.end_of_step_maintenance();
    EXPECT_EQ(full.agent(0).actor_target.layers()[0].W, full.agent(0).actor.layers()[0].W);

    cfg.tau = 0.5;
    Maddpg half({2}, cfg, rng);
    half.agent(0).actor_target.layers()[0].W.setZero();
    half.agent(0).actor.layers()[0].W.setOnes();
    half.end_of_step_maintenance();
    half.end_of_step_maintenance();
    EXPECT_DOUBLE_EQ(half.agent(0).actor_target.layers()[0].W(0, 0), 0.75);

    cfg.noise_decay = 0.999;
    Maddpg decay({2}, cfg, rng);
    decay.end_of_episode();
    EXPECT_NEAR(decay.agent(0).noise_sigma, 0.1998, 1e-15);
    for (int k = 0; k < 100000; ++k) decay.end_of_episode();
    EXPECT_DOUBLE_EQ(decay.agent(0).noise_sigma, cfg.noise_floor);
}

TEST(Maddpg, StoreScalesRewardsAndWarmsUp) {
    std::mt19937_64 rng(12);
    Maddpg m({2}, small_config(), rng);
    Eigen::VectorXd o = Eigen::VectorXd::Zero(2);
    for (int k = 0; k < 15; ++k) {
        m.store({o}, {0.5}, {250.0}, {o}, false);
        EXPECT_FALSE(m.train_step(rng).has_value());
    }
    EXPECT_DOUBLE_EQ(m.buffer().at(0).rewards[0], 0.025);
    m.store({o}, {0.5}, {250.0}, {o}, true);
    auto stats = m.train_step(rng);
    ASSERT_TRUE(stats.has_value());
    EXPECT_EQ(stats->critic_loss.size(), 1u);
    EXPECT_THROW(m.store({o, o}, {0.5}, {1.0}, {o}, false), DimensionError);
}

TEST(Maddpg, TrainingIsReproducible) {
    auto run = [] {
        std::mt19937_64 init(13), rng(14);
        Maddpg m({2, 3}, small_config(), init);
        auto data = random_batch(rng, 40);
        for (const auto& t : data) m.buffer().push(t);
        for (int k = 0; k < 20; ++k) m.train_step(rng);
        std::ostringstream os;
        m.write(os);
        return os.str();
    };
    EXPECT_EQ(run(), run());
}

TEST(Maddpg, CheckpointRoundTrip) {
    std::mt19937_64 init(15), rng(16);
    Maddpg m({2, 3}, small_config(), init);
    auto data = random_batch(rng, 40);
    for (const auto& t : data) m.buffer().push(t);
    for (int k = 0; k < 5; ++k) m.train_step(rng);
    m.end_of_episode();
    std::stringstream ss;
    m.write(ss);
    std::mt19937_64 other(99);
    Maddpg restored({2, 3}, small_config(), other);
    restored.read(ss);
    std::ostringstream a, b;
    m.write(a);
    restored.write(b);
    EXPECT_EQ(a.str(), b.str());
}
