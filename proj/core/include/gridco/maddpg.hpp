#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridco/neural.hpp"

namespace gridco {

struct MaddpgConfig {
    std::vector<std::size_t> actor_hidden{128, 128, 128, 128, 128};
    std::vector<std::size_t> critic_hidden{128, 128, 128};
    double actor_lr = 1e-7;
    double critic_lr = 1e-5;
    double gamma = 0.99;
    double tau = 5e-3;
    std::size_t buffer_capacity = 20000;
    std::size_t batch_size = 64;
    // Updates start once the buffer holds warmup_batches * batch_size items.
    std::size_t warmup_batches = 10;
    // Gaussian exploration noise on the actor's pre-sigmoid output.
    double noise_sigma = 0.2;
    double noise_decay = 0.9995;  // per episode
    double noise_floor = 0.01;
    // Rewards are divided by this before storage.
    double reward_scale = 1e4;
};

// Joint observations are stored concatenated in agent order.
struct Transition {
    Eigen::VectorXd obs;
    Eigen::VectorXd actions;
    Eigen::VectorXd rewards;
    Eigen::VectorXd next_obs;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    // Evicts the oldest item when full. Throws DimensionError when the
    // transition does not match the schema of the first one stored.
    void push(Transition t);
    // i-th stored item, oldest first.
    const Transition& at(std::size_t i) const;
    // Uniform draws with replacement; throws when empty.
    std::vector<std::size_t> sample(std::size_t n, std::mt19937_64& rng) const;

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t head_ = 0;  // oldest item once full
};

struct MaddpgAgent {
    Mlp actor, actor_target, critic, critic_target;
    AdamState actor_opt, critic_opt;
    double noise_sigma = 0.0;
};

struct UpdateStats {
    std::vector<double> critic_loss;  // pre-update batch MSE
    std::vector<double> actor_q;      // pre-update mean Q
};

// r + gamma * q_next, or r alone for terminal transitions.
inline double td_target(double reward, double gamma, double q_next, bool terminal) {
    return terminal ? reward : reward + gamma * q_next;
}

// Per-agent actors over local observations; centralized critics over
// (all observations, then all actions).
class Maddpg {
public:
    Maddpg(std::vector<std::size_t> obs_dims, MaddpgConfig cfg, std::mt19937_64& init_rng);

    std::size_t num_agents() const { return agents_.size(); }
    std::size_t joint_obs_dim() const { return joint_obs_dim_; }
    const MaddpgConfig& config() const { return cfg_; }
    MaddpgAgent& agent(std::size_t i) { return agents_.at(i); }
    const MaddpgAgent& agent(std::size_t i) const { return agents_.at(i); }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }

    double select_action(std::size_t i, const Eigen::VectorXd& obs, bool explore, std::mt19937_64& rng) const;

    // Stores a transition with rewards divided by reward_scale.
    void store(const std::vector<Eigen::VectorXd>& obs, const std::vector<double>& actions,
               const std::vector<double>& raw_rewards, const std::vector<Eigen::VectorXd>& next_obs, bool terminal);

    bool ready() const { return buffer_.size() >= cfg_.warmup_batches * cfg_.batch_size; }

    std::vector<double> update_critics(const std::vector<const Transition*>& batch);
    double update_actor(std::size_t i, const std::vector<const Transition*>& batch);
    // Gradient of -mean Q_i with agent i's batch actions replaced by its
    // actor's output; `mean_q` receives mean Q when non-null.
    MlpGradients actor_gradient(std::size_t i, const std::vector<const Transition*>& batch,
                                double* mean_q = nullptr) const;
    void end_of_step_maintenance();
    // Multiplicative exploration decay, floored.
    void end_of_episode();

    // Samples one minibatch and runs every critic, then every actor, then
    // the target updates. Returns nullopt before warm-up completes.
    std::optional<UpdateStats> train_step(std::mt19937_64& rng);

    // Critic input for a batch: stacked observations then actions.
    Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const;

    void write(std::ostream& os) const;
    void read(std::istream& is);

private:
    Eigen::MatrixXd stack_obs(const std::vector<const Transition*>& batch, bool next) const;
    Eigen::MatrixXd stack_actions(const std::vector<const Transition*>& batch) const;

    MaddpgConfig cfg_;
    std::vector<std::size_t> obs_dims_;
    std::vector<std::size_t> obs_offset_;
    std::size_t joint_obs_dim_ = 0;
    std::vector<MaddpgAgent> agents_;
    ReplayBuffer buffer_;
};

}  // namespace gridco
