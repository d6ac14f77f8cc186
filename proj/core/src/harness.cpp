#include "gridco/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridco/design_policy.hpp"
#include "gridco/error.hpp"
#include "gridco/format.hpp"
#include "gridco/maddpg.hpp"
#include "gridco/market_env.hpp"

namespace gridco {

std::size_t summary_window(std::size_t episodes, double fraction) {
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(episodes) - 1e-9));
    return std::max<std::size_t>(1, k);
}

Summary summarize(const MetricsLog& log, std::size_t window, std::string run_id) {
    const auto& eps = log.episodes;
    if (window == 0) throw ValidationError("summary window must be at least one episode");
    if (window > eps.size())
        throw ValidationError("summary window of " + std::to_string(window) + " episodes exceeds the " +
                              std::to_string(eps.size()) + " logged");
    const double w = log.header.w_anu;
    const std::size_t n = log.header.agents.size();
    Summary s;
    s.run_id = std::move(run_id);
    s.mode = log.header.mode;
    s.window = window;
    s.agents = log.header.agents;
    s.mean_bids.assign(n, 0.0);
    s.profits.assign(n, 0.0);
    s.revenues.assign(n, 0.0);
    s.converged = true;
    const double k = static_cast<double>(window);
    for (std::size_t e = eps.size() - window; e < eps.size(); ++e) {
        const auto& r = eps[e];
        for (std::size_t i = 0; i < n; ++i) {
            s.mean_bids[i] += r.mean_bids.at(i) / k;
            s.profits[i] += w * r.profits.at(i) / k;
            s.revenues[i] += w * r.revenues.at(i) / k;
        }
        s.operational_cost += w * r.operational_cost / k;
        s.expansion_cost += r.expansion_cost / k;
        s.shed += r.shed / k;
        if (r.shed > 1e-6) s.converged = false;
    }
    s.total_cost = s.operational_cost + s.expansion_cost;
    if (log.header.planned_operational && log.header.planned_expansion) {
        PlannedCosts p;
        p.operational = *log.header.planned_operational;
        p.expansion = *log.header.planned_expansion;
        p.total = p.operational + p.expansion;
        s.planned = p;
    }
    return s;
}

std::string summary_csv(const std::vector<Summary>& rows) {
    if (rows.empty()) return {};
    const auto& agents = rows.front().agents;
    const bool planned = std::any_of(rows.begin(), rows.end(), [](const Summary& s) { return s.planned.has_value(); });
    std::ostringstream os;
    os << "run_id,mode,window";
    for (const auto& a : agents) os << ",bid_" << a;
    for (const auto& a : agents) os << ",profit_" << a;
    os << ",operational_cost,expansion_cost,total_cost,shed_mwh,converged";
    if (planned) os << ",planned_operational,planned_expansion,planned_total";
    os << "\n";
    for (const auto& s : rows) {
        if (s.agents != agents) throw ValidationError("summary rows have different agent sets");
        os << s.run_id << "," << s.mode << "," << s.window;
        for (double b : s.mean_bids) os << "," << fmt15(b);
        for (double p : s.profits) os << "," << fmt15(p);
        os << "," << fmt15(s.operational_cost) << "," << fmt15(s.expansion_cost) << "," << fmt15(s.total_cost) << ","
           << fmt15(s.shed) << "," << (s.converged ? "true" : "false");
        if (planned) {
            if (s.planned)
                os << "," << fmt15(s.planned->operational) << "," << fmt15(s.planned->expansion) << ","
                   << fmt15(s.planned->total);
            else
                os << ",,,";
        }
        os << "\n";
    }
    return os.str();
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<Summary>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << summary_csv(rows);
}

std::vector<double> scenario_bids(const RunConfig& cfg, const NetworkCase& net) {
    if (!cfg.scenario) throw ConfigError("scenario: required in two-stage mode");
    for (const auto& [name, bid] : cfg.scenario->bids) {
        (void)bid;
        std::size_t g = 0;
        try {
            g = net.generator_index(name);
        } catch (const ValidationError&) {
            throw ConfigError("scenario.bids: no generator named '" + name + "'");
        }
        if (!net.generators[g].strategic)
            throw ConfigError("scenario.bids: generator '" + name + "' is not strategic");
    }
    std::vector<double> bids;
    for (const auto& g : net.generators) {
        if (!g.strategic) {
            bids.push_back(g.marginal_cost);
            continue;
        }
        auto it = cfg.scenario->bids.find(g.name);
        if (it == cfg.scenario->bids.end())
            throw ConfigError("scenario.bids: missing bid for strategic generator '" + g.name + "'");
        bids.push_back(it->second);
    }
    return bids;
}

namespace {

[[noreturn]] void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(ctx + e.what());
    } catch (const SolverError& e) {
        throw SolverError(ctx + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(ctx + e.what());
    } catch (const Error& e) {
        throw Error(ctx + e.what());
    }
}

struct Plan {
    NetworkCase net;
    double w_anu = 0.0;
    DesignMode mode = DesignMode::continuous;
    std::optional<DesignPolicy> policy;
    std::vector<double> fixed_design;
    std::optional<Stage1Result> stage1;
};

std::filesystem::path prepare_dir(const RunConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("output_dir: required for training runs");
    std::filesystem::create_directories(cfg.output_dir / "checkpoints");
    return cfg.output_dir;
}

std::string run_id_of(const std::filesystem::path& dir) {
    auto p = dir;
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

void save_checkpoint(const std::filesystem::path& dir, const Maddpg& agents, const std::optional<DesignPolicy>& policy) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "maddpg.txt");
        agents.write(out);
        if (!out) throw Error("cannot write checkpoint " + (dir / "maddpg.txt").string());
    }
    if (policy) {
        std::ofstream out(dir / "design_policy.txt");
        policy->write(out);
        if (!out) throw Error("cannot write checkpoint " + (dir / "design_policy.txt").string());
    }
}

std::string checkpoint_name(std::size_t episodes) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "episode_%06zu", episodes);
    return buf;
}

void write_design(const std::filesystem::path& path, const Plan& plan, const std::vector<std::size_t>& candidates,
                  const std::vector<double>& final_design, double fixed_increment) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["mode"] = std::string(to_string(plan.mode));
    j["source"] = plan.policy ? "design-policy" : (plan.stage1 ? "stage-1" : "fixed");
    ordered_json lines = ordered_json::array();
    double total = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& line = plan.net.lines[candidates[k]];
        const double installed = installed_increment(final_design[k], plan.mode, fixed_increment);
        const double cost = line.expansion_cost * installed;
        total += cost;
        ordered_json e;
        e["line"] = line.name;
        e["mode"] = std::string(to_string(plan.mode));
        if (plan.policy) {
            e["mu"] = round15(plan.policy->mu()[k]);
            e["sigma"] = plan.mode == DesignMode::continuous ? ordered_json(round15(plan.policy->config().sigma[k]))
                                                             : ordered_json(nullptr);
        } else {
            e["mu"] = nullptr;
            e["sigma"] = nullptr;
        }
        e["design"] = round15(final_design[k]);
        e["installed_mw"] = round15(installed);
        e["annual_cost"] = round15(cost);
        lines.push_back(e);
    }
    j["lines"] = lines;
    j["total_expansion_cost"] = round15(total);
    if (plan.stage1) {
        j["stage1"] = {{"planned_operational", round15(plan.stage1->planned_operational)},
                       {"expansion_cost", round15(plan.stage1->expansion_cost)},
                       {"objective", round15(plan.stage1->objective)},
                       {"iterations", plan.stage1->iterations}};
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

RunArtifacts train(const RunConfig& cfg, Plan plan, const ProgressFn& progress) {
    const auto dir = prepare_dir(cfg);
    RunArtifacts art;
    art.dir = dir;
    art.metrics = dir / "metrics.jsonl";
    art.summary_csv = dir / "summary.csv";
    art.design = dir / "design.out";
    art.stage1 = plan.stage1;

    EnvOptions eo;
    eo.mode = plan.mode;
    eo.fixed_increment = cfg.market.fixed_increment;
    eo.shed_penalty = cfg.market.shed_penalty;
    eo.design_reference = cfg.market.design_reference;
    eo.limits.step_ratio = cfg.market.bid_step_ratio;
    eo.limits.spread = cfg.market.bid_spread;
    MarketEnv env(plan.net, eo);
    const auto& net = env.network();
    const std::size_t n_agents = env.num_agents();
    if (n_agents == 0) throw ConfigError("case has no strategic generators to train");
    const std::size_t K = env.candidates().size();

    auto agent_rng = rng_stream(cfg.seed, "agents");
    auto noise_rng = rng_stream(cfg.seed, "noise");
    auto replay_rng = rng_stream(cfg.seed, "replay");
    auto design_rng = rng_stream(cfg.seed, "design");
    Maddpg agents(std::vector<std::size_t>(n_agents, env.obs_dim()), cfg.maddpg, agent_rng);

    MetricsWriter metrics(art.metrics, cfg.output.log_steps);
    RunHeader h;
    h.version = std::string(library_version());
    h.seed = cfg.seed;
    h.mode = std::string(to_string(cfg.mode));
    h.config_json = run_config_json(cfg);
    for (auto g : env.agents()) {
        h.agents.push_back(net.generators[g].name);
        h.agent_costs.push_back(net.generators[g].marginal_cost);
    }
    for (auto l : env.candidates()) h.candidates.push_back(net.lines[l].name);
    h.design_mode = std::string(to_string(plan.mode));
    h.horizon = env.horizon();
    h.w_anu = plan.w_anu;
    if (plan.stage1) {
        h.planned_operational = plan.stage1->planned_operational;
        h.planned_expansion = plan.stage1->expansion_cost;
    }
    metrics.header(h);

    std::size_t ep = 0, step_t = 0;
    try {
        for (ep = 0; ep < cfg.episodes; ++ep) {
            DesignSample sample;
            if (plan.policy) {
                sample = plan.policy->sample(design_rng);
            } else {
                sample.raw = plan.fixed_design;
                sample.design = plan.fixed_design;
            }
            auto obs = env.reset(sample.design);

            EpisodeRecord rec;
            rec.episode = ep;
            rec.design = sample.design;
            rec.raw = sample.raw;
            rec.profits.assign(n_agents, 0.0);
            rec.revenues.assign(n_agents, 0.0);
            rec.mean_bids.assign(n_agents, 0.0);
            rec.mean_actions.assign(n_agents, 0.0);
            rec.mean_greedy_actions.assign(n_agents, 0.0);
            std::vector<std::vector<double>> rewards(n_agents);
            std::vector<double> loss_sum(n_agents, 0.0);
            std::size_t updates = 0;

            while (!env.done()) {
                step_t = env.time();
                std::vector<Eigen::VectorXd> o(n_agents);
                std::vector<double> a(n_agents);
                for (std::size_t i = 0; i < n_agents; ++i) {
                    o[i] = obs[i].features;
                    a[i] = agents.select_action(i, o[i], true, noise_rng);
                    rec.mean_greedy_actions[i] += agents.select_action(i, o[i], false, noise_rng);
                }
                auto out = env.step(a);
                if (out.infeasible)
                    throw InfeasibleError("market clearing infeasible (load shedding disabled and demand unservable)");
                std::vector<Eigen::VectorXd> o2(n_agents);
                for (std::size_t i = 0; i < n_agents; ++i) o2[i] = out.observations[i].features;
                agents.store(o, a, out.rewards, o2, out.done);
                if (auto stats = agents.train_step(replay_rng)) {
                    for (std::size_t i = 0; i < n_agents; ++i) loss_sum[i] += stats->critic_loss[i];
                    ++updates;
                }

                StepRecord sr;
                sr.episode = ep;
                sr.t = out.t;
                sr.actions = a;
                sr.rewards = out.rewards;
                sr.operational_cost = out.clearing.operational_cost;
                for (double s : out.clearing.shed) sr.shed += s;
                for (std::size_t i = 0; i < n_agents; ++i) {
                    const auto g = env.agents()[i];
                    sr.bids.push_back(out.applied_bids[g]);
                    rewards[i].push_back(out.rewards[i]);
                    rec.profits[i] += out.rewards[i];
                    rec.revenues[i] += out.clearing.gen_price[g] * out.clearing.dispatch[g];
                    rec.mean_bids[i] += out.applied_bids[g];
                    rec.mean_actions[i] += a[i];
                }
                rec.operational_cost += out.clearing.operational_cost;
                rec.shed += sr.shed;
                rec.shed_cost += out.clearing.shed_cost;
                metrics.step(sr);
                obs = std::move(out.observations);
            }
            agents.end_of_episode();

            const double T = static_cast<double>(env.horizon());
            for (std::size_t i = 0; i < n_agents; ++i) {
                rec.mean_bids[i] /= T;
                rec.mean_actions[i] /= T;
                rec.mean_greedy_actions[i] /= T;
                rec.returns.push_back(episode_return(rewards[i], cfg.maddpg.gamma));
                if (updates) rec.critic_loss.push_back(loss_sum[i] / static_cast<double>(updates));
            }
            rec.expansion_cost =
                K ? expansion_cost(net, env.candidates(), sample.design, plan.mode, cfg.market.fixed_increment) : 0.0;
            // Shedding enters G_total so the design policy sees unserved load.
            rec.g_total = -(plan.w_anu * (rec.operational_cost + rec.shed_cost) + rec.expansion_cost);
            if (plan.policy) {
                rec.design_updated = plan.policy->record(sample.raw, rec.g_total);
                rec.mu = plan.policy->mu();
                rec.baseline = plan.policy->baseline();
            }
            rec.noise_sigma = agents.agent(0).noise_sigma;
            metrics.episode(rec);
            if (progress) progress(rec);

            if (cfg.output.checkpoint_every && (ep + 1) % cfg.output.checkpoint_every == 0) {
                metrics.flush();
                const auto cp = dir / "checkpoints" / checkpoint_name(ep + 1);
                save_checkpoint(cp, agents, plan.policy);
                art.checkpoints.push_back(cp);
            }
        }
    } catch (const Error&) {
        metrics.flush();
        try {
            save_checkpoint(dir / "checkpoints" / "partial", agents, plan.policy);
        } catch (const Error&) {
            // The original failure is the one worth reporting.
        }
        rethrow_with_context("episode " + std::to_string(ep) + ", step " + std::to_string(step_t) + ": ");
    }
    metrics.flush();
    const auto final_cp = dir / "checkpoints" / "final";
    save_checkpoint(final_cp, agents, plan.policy);
    art.checkpoints.push_back(final_cp);

    art.final_design = plan.policy ? plan.policy->finalize() : plan.fixed_design;
    write_design(art.design, plan, env.candidates(), art.final_design, cfg.market.fixed_increment);

    const auto log = read_metrics(art.metrics, false);
    art.summary = summarize(log, summary_window(cfg.episodes, cfg.output.summary_fraction), run_id_of(dir));
    write_summary_csv(art.summary_csv, {art.summary});
    return art;
}

}  // namespace

RunArtifacts run_co_optimization(const RunConfig& cfg, const ProgressFn& progress) {
    if (cfg.mode != RunMode::co_opt_continuous && cfg.mode != RunMode::co_opt_discrete)
        throw ConfigError("run_co_optimization: mode must be co-opt-continuous or co-opt-discrete");
    if (cfg.episodes < cfg.design.n_up)
        throw ConfigError("N ≥ N_up required (episodes " + std::to_string(cfg.episodes) + ", design.n_up " +
                          std::to_string(cfg.design.n_up) + ")");
    Plan plan;
    plan.net = load_run_case(cfg);
    plan.w_anu = run_annualization(cfg, plan.net);
    plan.mode = design_mode(cfg.mode);
    const std::size_t K = plan.net.candidate_lines().size();

    DesignPolicyConfig pc;
    pc.mode = plan.mode;
    pc.sigma = cfg.design.sigma;
    pc.mu_floor = cfg.design.mu_floor;
    pc.n_up = cfg.design.n_up;
    pc.lr = cfg.design.lr ? *cfg.design.lr : (plan.mode == DesignMode::continuous ? 0.02 : 0.01);
    pc.baseline_decay = cfg.design.baseline_decay;
    pc.normalize_advantages = cfg.design.normalize_advantages;
    if (cfg.design.mu_init.empty()) {
        plan.policy = DesignPolicy::uninformed(K, pc);
    } else {
        if (cfg.design.mu_init.size() != K)
            throw ConfigError("design.mu_init: expected " + std::to_string(K) + " values, one per candidate line");
        plan.policy = DesignPolicy(cfg.design.mu_init, pc);
    }
    return train(cfg, std::move(plan), progress);
}

RunArtifacts run_fixed_design(const RunConfig& cfg, const std::vector<double>& design, const ProgressFn& progress) {
    if (cfg.episodes == 0) throw ConfigError("episodes: must be >= 1");
    Plan plan;
    plan.net = load_run_case(cfg);
    plan.w_anu = run_annualization(cfg, plan.net);
    plan.mode = DesignMode::continuous;
    if (design.size() != plan.net.candidate_lines().size())
        throw ConfigError("fixed design: expected one value per candidate line");
    plan.fixed_design = design;
    return train(cfg, std::move(plan), progress);
}

RunArtifacts run_two_stage(const RunConfig& cfg, const ProgressFn& progress) {
    if (cfg.mode != RunMode::two_stage) throw ConfigError("run_two_stage: mode must be two-stage");
    if (cfg.episodes == 0) throw ConfigError("episodes: must be >= 1");
    Plan plan;
    plan.net = load_run_case(cfg);
    plan.w_anu = run_annualization(cfg, plan.net);
    plan.mode = DesignMode::continuous;
    const auto bids = scenario_bids(cfg, plan.net);
    Stage1Options so;
    so.shed_penalty = cfg.scenario->shed_penalty;
    plan.stage1 = stage1_expansion_lp(plan.net, bids, plan.w_anu, so);
    plan.fixed_design = plan.stage1->expansion;
    return train(cfg, std::move(plan), progress);
}

RunArtifacts run(const RunConfig& cfg, const ProgressFn& progress) {
    switch (cfg.mode) {
        case RunMode::co_opt_continuous:
        case RunMode::co_opt_discrete: return run_co_optimization(cfg, progress);
        case RunMode::two_stage: return run_two_stage(cfg, progress);
        case RunMode::clear_only: break;
    }
    throw ConfigError("mode clear-only has no training run; use the clear command");
}

}  // namespace gridco
