#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "gridco/grid_model.hpp"

namespace gridco {

struct DesignSample {
    std::vector<double> raw;     // draw used by the score function
    std::vector<double> design;  // value handed to the environment
};

struct DesignPolicyConfig {
    DesignMode mode = DesignMode::continuous;
    std::vector<double> sigma;  // MW, continuous only; one per line
    double mu_floor = 0.01;     // discrete only
    std::size_t n_up = 10;
    double lr = 0.02;
    double baseline_decay = 0.95;
    // Divide advantages by the running standard deviation of G_total.
    bool normalize_advantages = true;
};

// Independent per-line Gaussian (continuous) or Bernoulli (discrete)
// design distribution with a moving-average baseline.
class DesignPolicy {
public:
    DesignPolicy(std::vector<double> mu, DesignPolicyConfig cfg);

    // mu = 0 MW for Gaussian lines, 0.5 for Bernoulli lines.
    static DesignPolicy uninformed(std::size_t lines, DesignPolicyConfig cfg);

    DesignSample sample(std::mt19937_64& rng) const;
    // d ln p / d mu per line.
    std::vector<double> log_prob_grad(const std::vector<double>& raw) const;

    // Records one episode; every n_up episodes applies the REINFORCE step.
    // Returns true when an update happened.
    bool record(const std::vector<double>& raw, double g_total);

    void set_baseline(double value);

    // Gaussian: max(0, mu); Bernoulli: 1 when mu > 0.5.
    std::vector<double> finalize() const;

    const std::vector<double>& mu() const { return mu_; }
    std::vector<double>& mu() { return mu_; }
    const DesignPolicyConfig& config() const { return cfg_; }
    std::optional<double> baseline() const { return baseline_; }
    std::size_t updates() const { return updates_; }
    std::size_t size() const { return mu_.size(); }

    void write(std::ostream& os) const;
    void read(std::istream& is);

private:
    void clamp_mu();

    std::vector<double> mu_;
    DesignPolicyConfig cfg_;
    std::optional<double> baseline_;
    // Running mean and variance of G_total (Welford), for normalization.
    std::size_t seen_ = 0;
    double g_mean_ = 0.0;
    double g_m2_ = 0.0;
    std::vector<std::vector<double>> pending_scores_;
    std::vector<double> pending_adv_;
    std::size_t updates_ = 0;
};

// sum_l c_l * installed increment_l, $ per year.
double expansion_cost(const NetworkCase& net, const std::vector<std::size_t>& candidates,
                      const std::vector<double>& design, DesignMode mode, double fixed_increment);

}  // namespace gridco
