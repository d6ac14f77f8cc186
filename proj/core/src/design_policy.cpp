#include "gridco/design_policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "gridco/error.hpp"

namespace gridco {

DesignPolicy::DesignPolicy(std::vector<double> mu, DesignPolicyConfig cfg) : mu_(std::move(mu)), cfg_(std::move(cfg)) {
    if (cfg_.n_up == 0) throw ValidationError("design policy: n_up must be at least 1");
    if (!(cfg_.lr > 0.0)) throw ValidationError("design policy: learning rate must be positive");
    if (!(cfg_.baseline_decay >= 0.0 && cfg_.baseline_decay < 1.0))
        throw ValidationError("design policy: baseline decay must lie in [0, 1)");
    if (cfg_.mode == DesignMode::continuous) {
        if (cfg_.sigma.size() == 1) cfg_.sigma.assign(mu_.size(), cfg_.sigma.front());
        if (cfg_.sigma.size() != mu_.size())
            throw DimensionError("design policy: expected one sigma per candidate line");
        for (double s : cfg_.sigma)
            if (!(s > 0.0)) throw ValidationError("design policy: sigma must be positive");
    } else {
        if (!(cfg_.mu_floor > 0.0 && cfg_.mu_floor < 0.5))
            throw ValidationError("design policy: mu floor must lie in (0, 0.5)");
        clamp_mu();
    }
    for (double m : mu_)
        if (!std::isfinite(m)) throw ValidationError("design policy: mu must be finite");
}

DesignPolicy DesignPolicy::uninformed(std::size_t lines, DesignPolicyConfig cfg) {
    const double mu0 = cfg.mode == DesignMode::continuous ? 0.0 : 0.5;
    return DesignPolicy(std::vector<double>(lines, mu0), std::move(cfg));
}

void DesignPolicy::clamp_mu() {
    if (cfg_.mode != DesignMode::discrete) return;
    for (double& m : mu_) m = std::clamp(m, cfg_.mu_floor, 1.0 - cfg_.mu_floor);
}

DesignSample DesignPolicy::sample(std::mt19937_64& rng) const {
    DesignSample s;
    s.raw.resize(mu_.size());
    s.design.resize(mu_.size());
    for (std::size_t l = 0; l < mu_.size(); ++l) {
        if (cfg_.mode == DesignMode::continuous) {
            s.raw[l] = std::normal_distribution<double>(mu_[l], cfg_.sigma[l])(rng);
            s.design[l] = std::max(0.0, s.raw[l]);
        } else {
            s.raw[l] = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mu_[l] ? 1.0 : 0.0;
            s.design[l] = s.raw[l];
        }
    }
    return s;
}

std::vector<double> DesignPolicy::log_prob_grad(const std::vector<double>& raw) const {
    if (raw.size() != mu_.size()) throw DimensionError("design policy: design length mismatch");
    std::vector<double> g(mu_.size());
    for (std::size_t l = 0; l < mu_.size(); ++l) {
        if (cfg_.mode == DesignMode::continuous) {
            g[l] = (raw[l] - mu_[l]) / (cfg_.sigma[l] * cfg_.sigma[l]);
        } else {
            if (raw[l] != 0.0 && raw[l] != 1.0) throw ValidationError("design policy: discrete design must be 0 or 1");
            g[l] = raw[l] == 1.0 ? 1.0 / mu_[l] : -1.0 / (1.0 - mu_[l]);
        }
    }
    return g;
}

bool DesignPolicy::record(const std::vector<double>& raw, double g_total) {
    if (!std::isfinite(g_total)) throw ValidationError("design policy: G_total must be finite");
    pending_scores_.push_back(log_prob_grad(raw));
    pending_adv_.push_back(g_total);
    ++seen_;
    const double delta = g_total - g_mean_;
    g_mean_ += delta / static_cast<double>(seen_);
    g_m2_ += delta * (g_total - g_mean_);
    if (pending_adv_.size() < cfg_.n_up) return false;

    if (!baseline_) baseline_ = pending_adv_.front();
    const double b = *baseline_;
    double scale = 1.0;
    if (cfg_.normalize_advantages && seen_ > 1) {
        const double sd = std::sqrt(g_m2_ / static_cast<double>(seen_ - 1));
        if (sd > 0.0) scale = 1.0 / sd;
    }
    std::vector<double> step(mu_.size(), 0.0);
    for (std::size_t k = 0; k < pending_adv_.size(); ++k)
        for (std::size_t l = 0; l < mu_.size(); ++l) step[l] += pending_scores_[k][l] * (pending_adv_[k] - b) * scale;
    const double n = static_cast<double>(pending_adv_.size());
    for (std::size_t l = 0; l < mu_.size(); ++l) mu_[l] += cfg_.lr * step[l] / n;
    clamp_mu();
    for (double g : pending_adv_) baseline_ = cfg_.baseline_decay * *baseline_ + (1.0 - cfg_.baseline_decay) * g;
    pending_scores_.clear();
    pending_adv_.clear();
    ++updates_;
    return true;
}

void DesignPolicy::set_baseline(double value) {
    baseline_ = value;
}

std::vector<double> DesignPolicy::finalize() const {
    std::vector<double> out(mu_.size());
    for (std::size_t l = 0; l < mu_.size(); ++l)
        out[l] = cfg_.mode == DesignMode::continuous ? std::max(0.0, mu_[l]) : (mu_[l] > 0.5 ? 1.0 : 0.0);
    return out;
}

void DesignPolicy::write(std::ostream& os) const {
    auto hex = [&](double v) { os << ' ' << std::hexfloat << v << std::defaultfloat; };
    os << "design-policy 1 " << to_string(cfg_.mode) << ' ' << mu_.size();
    for (double m : mu_) hex(m);
    os << '\n' << "baseline " << (baseline_ ? 1 : 0);
    hex(baseline_.value_or(0.0));
    os << '\n' << "stats " << seen_;
    hex(g_mean_);
    hex(g_m2_);
    os << ' ' << updates_ << '\n' << "pending " << pending_adv_.size() << '\n';
    for (std::size_t k = 0; k < pending_adv_.size(); ++k) {
        hex(pending_adv_[k]);
        for (double s : pending_scores_[k]) hex(s);
        os << '\n';
    }
}

void DesignPolicy::read(std::istream& is) {
    auto num = [&]() {
        std::string tok;
        if (!(is >> tok)) throw ParseError("checkpoint: truncated design policy");
        return std::strtod(tok.c_str(), nullptr);
    };
    std::string tag, mode, key;
    int version = 0;
    std::size_t n = 0;
    if (!(is >> tag >> version >> mode >> n) || tag != "design-policy" || version != 1)
        throw ParseError("checkpoint: expected a design-policy v1 record");
    if (mode != to_string(cfg_.mode) || n != mu_.size()) throw ParseError("checkpoint: design policy shape mismatch");
    for (auto& m : mu_) m = num();
    int has = 0;
    if (!(is >> key >> has) || key != "baseline") throw ParseError("checkpoint: expected baseline");
    const double b = num();
    baseline_ = has ? std::optional<double>(b) : std::nullopt;
    if (!(is >> key >> seen_) || key != "stats") throw ParseError("checkpoint: expected stats");
    g_mean_ = num();
    g_m2_ = num();
    std::size_t pending = 0;
    if (!(is >> updates_ >> key >> pending) || key != "pending") throw ParseError("checkpoint: expected pending");
    pending_adv_.assign(pending, 0.0);
    pending_scores_.assign(pending, std::vector<double>(mu_.size()));
    for (std::size_t k = 0; k < pending; ++k) {
        pending_adv_[k] = num();
        for (auto& s : pending_scores_[k]) s = num();
    }
}

double expansion_cost(const NetworkCase& net, const std::vector<std::size_t>& candidates,
                      const std::vector<double>& design, DesignMode mode, double fixed_increment) {
    if (design.size() != candidates.size()) throw DimensionError("expansion cost: design length mismatch");
    double c = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k)
        c += net.lines.at(candidates[k]).expansion_cost * installed_increment(design[k], mode, fixed_increment);
    return c;
}

}  // namespace gridco
