#include "gridco/maddpg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "gridco/error.hpp"

namespace gridco {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (!items_.empty()) {
        const auto& ref = items_.front();
        if (t.obs.size() != ref.obs.size() || t.actions.size() != ref.actions.size() ||
            t.rewards.size() != ref.rewards.size() || t.next_obs.size() != ref.next_obs.size())
            throw DimensionError("replay buffer: transition does not match stored schema");
    }
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw DimensionError("replay buffer index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (items_.empty()) throw Error("replay buffer: insufficient samples");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

Maddpg::Maddpg(std::vector<std::size_t> obs_dims, MaddpgConfig cfg, std::mt19937_64& init_rng)
    : cfg_(std::move(cfg)), obs_dims_(std::move(obs_dims)), buffer_(cfg_.buffer_capacity) {
    if (obs_dims_.empty()) throw ValidationError("maddpg needs at least one agent");
    if (cfg_.batch_size == 0) throw ValidationError("maddpg batch size must be positive");
    for (auto d : obs_dims_) {
        obs_offset_.push_back(joint_obs_dim_);
        joint_obs_dim_ += d;
    }
    const std::size_t n = obs_dims_.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> a_sizes{obs_dims_[i]};
        a_sizes.insert(a_sizes.end(), cfg_.actor_hidden.begin(), cfg_.actor_hidden.end());
        a_sizes.push_back(1);
        std::vector<std::size_t> c_sizes{joint_obs_dim_ + n};
        c_sizes.insert(c_sizes.end(), cfg_.critic_hidden.begin(), cfg_.critic_hidden.end());
        c_sizes.push_back(1);
        MaddpgAgent a;
        a.actor = Mlp::initialized(a_sizes, OutputActivation::sigmoid, init_rng);
        a.critic = Mlp::initialized(c_sizes, OutputActivation::identity, init_rng);
        a.actor_target = a.actor;
        a.critic_target = a.critic;
        a.actor_opt = AdamState::for_network(a.actor);
        a.critic_opt = AdamState::for_network(a.critic);
        a.noise_sigma = cfg_.noise_sigma;
        agents_.push_back(std::move(a));
    }
}

double Maddpg::select_action(std::size_t i, const Eigen::VectorXd& obs, bool explore, std::mt19937_64& rng) const {
    const auto& a = agents_.at(i);
    if (static_cast<std::size_t>(obs.size()) != obs_dims_[i])
        throw DimensionError("agent " + std::to_string(i) + ": observation has " + std::to_string(obs.size()) +
                             " entries, expected " + std::to_string(obs_dims_[i]));
    const double y = a.actor.forward(obs)[0];
    if (!explore || a.noise_sigma == 0.0) return y;
    // Perturb the logit so the action stays inside (0, 1).
    const double yc = std::clamp(y, 1e-12, 1.0 - 1e-12);
    const double logit = std::log(yc) - std::log1p(-yc);
    const double z = logit + std::normal_distribution<double>(0.0, a.noise_sigma)(rng);
    return 1.0 / (1.0 + std::exp(-z));
}

void Maddpg::store(const std::vector<Eigen::VectorXd>& obs, const std::vector<double>& actions,
                   const std::vector<double>& raw_rewards, const std::vector<Eigen::VectorXd>& next_obs,
                   bool terminal) {
    const std::size_t n = num_agents();
    if (obs.size() != n || actions.size() != n || raw_rewards.size() != n || next_obs.size() != n)
        throw DimensionError("maddpg store: expected one entry per agent");
    Transition t;
    t.obs.resize(static_cast<Eigen::Index>(joint_obs_dim_));
    t.next_obs.resize(static_cast<Eigen::Index>(joint_obs_dim_));
    t.actions.resize(static_cast<Eigen::Index>(n));
    t.rewards.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto off = static_cast<Eigen::Index>(obs_offset_[i]);
        const auto d = static_cast<Eigen::Index>(obs_dims_[i]);
        if (obs[i].size() != d || next_obs[i].size() != d) throw DimensionError("maddpg store: observation size");
        t.obs.segment(off, d) = obs[i];
        t.next_obs.segment(off, d) = next_obs[i];
        t.actions[static_cast<Eigen::Index>(i)] = actions[i];
        t.rewards[static_cast<Eigen::Index>(i)] = raw_rewards[i] / cfg_.reward_scale;
    }
    t.terminal = terminal;
    buffer_.push(std::move(t));
}

Eigen::MatrixXd Maddpg::stack_obs(const std::vector<const Transition*>& batch, bool next) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(joint_obs_dim_), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto& v = next ? batch[j]->next_obs : batch[j]->obs;
        if (static_cast<std::size_t>(v.size()) != joint_obs_dim_) throw DimensionError("maddpg: batch observation size");
        m.col(static_cast<Eigen::Index>(j)) = v;
    }
    return m;
}

Eigen::MatrixXd Maddpg::stack_actions(const std::vector<const Transition*>& batch) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(num_agents()), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (static_cast<std::size_t>(batch[j]->actions.size()) != num_agents())
            throw DimensionError("maddpg: batch action size");
        m.col(static_cast<Eigen::Index>(j)) = batch[j]->actions;
    }
    return m;
}

Eigen::MatrixXd Maddpg::critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const {
    Eigen::MatrixXd x(obs.rows() + actions.rows(), obs.cols());
    x << obs, actions;
    return x;
}

std::vector<double> Maddpg::update_critics(const std::vector<const Transition*>& batch) {
    if (batch.empty()) throw ValidationError("maddpg: empty batch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Eigen::MatrixXd O = stack_obs(batch, false);
    const Eigen::MatrixXd O2 = stack_obs(batch, true);
    const Eigen::MatrixXd A = stack_actions(batch);
    Eigen::MatrixXd A2(A.rows(), B);
    for (std::size_t i = 0; i < num_agents(); ++i) {
        const auto off = static_cast<Eigen::Index>(obs_offset_[i]);
        const auto d = static_cast<Eigen::Index>(obs_dims_[i]);
        A2.row(static_cast<Eigen::Index>(i)) = agents_[i].actor_target.forward_batch(O2.middleRows(off, d));
    }
    const Eigen::MatrixXd X = critic_input(O, A);
    const Eigen::MatrixXd X2 = critic_input(O2, A2);

    std::vector<double> losses;
    for (std::size_t i = 0; i < num_agents(); ++i) {
        auto& ag = agents_[i];
        const Eigen::RowVectorXd q_next = ag.critic_target.forward_batch(X2);
        Eigen::RowVectorXd y(B);
        for (Eigen::Index j = 0; j < B; ++j) {
            const auto& t = *batch[static_cast<std::size_t>(j)];
            y[j] = td_target(t.rewards[static_cast<Eigen::Index>(i)], cfg_.gamma, q_next[j], t.terminal);
        }
        MlpTape tape;
        const Eigen::RowVectorXd q = ag.critic.forward_batch(X, &tape);
        const Eigen::RowVectorXd err = q - y;
        losses.push_back(err.squaredNorm() / static_cast<double>(B));
        const Eigen::MatrixXd dQ = (2.0 / static_cast<double>(B)) * err;
        adam_step(ag.critic, ag.critic.backward(tape, dQ), ag.critic_opt, cfg_.critic_lr);
    }
    return losses;
}

MlpGradients Maddpg::actor_gradient(std::size_t i, const std::vector<const Transition*>& batch,
                                    double* mean_q) const {
    if (batch.empty()) throw ValidationError("maddpg: empty batch");
    const auto& ag = agents_.at(i);
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Eigen::MatrixXd O = stack_obs(batch, false);
    Eigen::MatrixXd A = stack_actions(batch);
    const auto off = static_cast<Eigen::Index>(obs_offset_[i]);
    const auto d = static_cast<Eigen::Index>(obs_dims_[i]);

    MlpTape actor_tape;
    A.row(static_cast<Eigen::Index>(i)) = ag.actor.forward_batch(O.middleRows(off, d), &actor_tape);
    MlpTape critic_tape;
    const Eigen::RowVectorXd q = ag.critic.forward_batch(critic_input(O, A), &critic_tape);
    if (mean_q) *mean_q = q.mean();

    const Eigen::MatrixXd dQ = Eigen::MatrixXd::Constant(1, B, -1.0 / static_cast<double>(B));
    Eigen::MatrixXd dX;
    ag.critic.backward(critic_tape, dQ, &dX);
    const Eigen::MatrixXd dA = dX.row(static_cast<Eigen::Index>(joint_obs_dim_ + i));
    return ag.actor.backward(actor_tape, dA);
}

double Maddpg::update_actor(std::size_t i, const std::vector<const Transition*>& batch) {
    double mean_q = 0.0;
    const auto grads = actor_gradient(i, batch, &mean_q);
    auto& ag = agents_.at(i);
    adam_step(ag.actor, grads, ag.actor_opt, cfg_.actor_lr);
    return mean_q;
}

void Maddpg::end_of_step_maintenance() {
    for (auto& a : agents_) {
        soft_update(a.actor_target, a.actor, cfg_.tau);
        soft_update(a.critic_target, a.critic, cfg_.tau);
    }
}

void Maddpg::end_of_episode() {
    for (auto& a : agents_) a.noise_sigma = std::max(cfg_.noise_floor, a.noise_sigma * cfg_.noise_decay);
}

std::optional<UpdateStats> Maddpg::train_step(std::mt19937_64& rng) {
    if (!ready()) return std::nullopt;
    const auto idx = buffer_.sample(cfg_.batch_size, rng);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto k : idx) batch.push_back(&buffer_.at(k));
    UpdateStats s;
    s.critic_loss = update_critics(batch);
    for (std::size_t i = 0; i < num_agents(); ++i) s.actor_q.push_back(update_actor(i, batch));
    end_of_step_maintenance();
    return s;
}

void Maddpg::write(std::ostream& os) const {
    os << "maddpg 1 critic-input obs-then-actions agents " << num_agents() << '\n';
    for (const auto& a : agents_) {
        os << "agent " << std::hexfloat << a.noise_sigma << std::defaultfloat << '\n';
        a.actor.write(os);
        a.actor_target.write(os);
        a.critic.write(os);
        a.critic_target.write(os);
        a.actor_opt.write(os);
        a.critic_opt.write(os);
    }
}

void Maddpg::read(std::istream& is) {
    std::string tag, key, order, agents_key, sigma;
    int version = 0;
    std::size_t n = 0;
    if (!(is >> tag >> version >> key >> order >> agents_key >> n) || tag != "maddpg" || version != 1 ||
        order != "obs-then-actions")
        throw ParseError("checkpoint: expected a maddpg v1 record");
    if (n != num_agents()) throw ParseError("checkpoint: agent count mismatch");
    for (auto& a : agents_) {
        if (!(is >> tag >> sigma) || tag != "agent") throw ParseError("checkpoint: expected an agent record");
        MaddpgAgent loaded;
        loaded.noise_sigma = std::strtod(sigma.c_str(), nullptr);
        loaded.actor = Mlp::read(is);
        loaded.actor_target = Mlp::read(is);
        loaded.critic = Mlp::read(is);
        loaded.critic_target = Mlp::read(is);
        loaded.actor_opt = AdamState::read(is);
        loaded.critic_opt = AdamState::read(is);
        if (!loaded.actor.same_architecture(a.actor) || !loaded.critic.same_architecture(a.critic))
            throw ParseError("checkpoint: network architecture mismatch");
        a = std::move(loaded);
    }
}

}  // namespace gridco
