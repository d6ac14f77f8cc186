#include "gridco/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include "gridco/error.hpp"
#include "gridco/format.hpp"
#include "gridco/market_env.hpp"

namespace gridco {

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::co_opt_continuous: return "co-opt-continuous";
        case RunMode::co_opt_discrete: return "co-opt-discrete";
        case RunMode::two_stage: return "two-stage";
        case RunMode::clear_only: return "clear-only";
    }
    return "?";
}

DesignMode design_mode(RunMode mode) {
    return mode == RunMode::co_opt_discrete ? DesignMode::discrete : DesignMode::continuous;
}

namespace {

using Keys = std::initializer_list<std::string_view>;

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const YAML::Node& node, Keys known, const std::string& where) {
    if (!node.IsMap()) throw ConfigError((where.empty() ? "config" : where) + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown key '" + join(where, key) + "'");
    }
}

template <typename T>
T scalar(const YAML::Node& v, const std::string& where, const char* type) {
    if (!v.IsScalar()) throw ConfigError(where + ": expected " + type);
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": expected " + type + ", got '" + v.Scalar() + "'");
    }
}

double number(const YAML::Node& v, const std::string& where) {
    const double x = scalar<double>(v, where, "a number");
    if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
    return x;
}

double positive(const YAML::Node& v, const std::string& where) {
    const double x = number(v, where);
    if (!(x > 0.0)) throw ConfigError(where + ": must be > 0");
    return x;
}

std::size_t count(const YAML::Node& v, const std::string& where) {
    const auto x = scalar<long long>(v, where, "a non-negative integer");
    if (x < 0) throw ConfigError(where + ": must be >= 0");
    return static_cast<std::size_t>(x);
}

std::vector<double> numbers(const YAML::Node& v, const std::string& where) {
    std::vector<double> out;
    if (v.IsScalar()) {
        out.push_back(number(v, where));
        return out;
    }
    if (!v.IsSequence()) throw ConfigError(where + ": expected a number or a list of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::size_t> counts(const YAML::Node& v, const std::string& where) {
    if (!v.IsSequence()) throw ConfigError(where + ": expected a list of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(count(v[i], where + "[" + std::to_string(i) + "]"));
        if (out.back() == 0) throw ConfigError(where + ": layer widths must be > 0");
    }
    return out;
}

RunMode parse_mode(const YAML::Node& v) {
    const auto s = scalar<std::string>(v, "mode", "a string");
    for (auto m : {RunMode::co_opt_continuous, RunMode::co_opt_discrete, RunMode::two_stage, RunMode::clear_only})
        if (s == to_string(m)) return m;
    throw ConfigError("mode: unknown mode '" + s +
                      "' (expected co-opt-continuous, co-opt-discrete, two-stage or clear-only)");
}

void parse_maddpg(const YAML::Node& n, MaddpgConfig& m) {
    reject_unknown(n,
                   {"actor_hidden", "critic_hidden", "actor_lr", "critic_lr", "tau", "buffer_capacity", "batch_size",
                    "warmup_batches", "noise_sigma", "noise_decay", "noise_floor", "reward_scale"},
                   "maddpg");
    if (n["actor_hidden"]) m.actor_hidden = counts(n["actor_hidden"], "maddpg.actor_hidden");
    if (n["critic_hidden"]) m.critic_hidden = counts(n["critic_hidden"], "maddpg.critic_hidden");
    if (n["actor_lr"]) m.actor_lr = positive(n["actor_lr"], "maddpg.actor_lr");
    if (n["critic_lr"]) m.critic_lr = positive(n["critic_lr"], "maddpg.critic_lr");
    if (n["tau"]) m.tau = positive(n["tau"], "maddpg.tau");
    if (n["buffer_capacity"]) m.buffer_capacity = count(n["buffer_capacity"], "maddpg.buffer_capacity");
    if (n["batch_size"]) m.batch_size = count(n["batch_size"], "maddpg.batch_size");
    if (n["warmup_batches"]) m.warmup_batches = count(n["warmup_batches"], "maddpg.warmup_batches");
    if (n["noise_sigma"]) m.noise_sigma = number(n["noise_sigma"], "maddpg.noise_sigma");
    if (n["noise_decay"]) m.noise_decay = positive(n["noise_decay"], "maddpg.noise_decay");
    if (n["noise_floor"]) m.noise_floor = number(n["noise_floor"], "maddpg.noise_floor");
    if (n["reward_scale"]) m.reward_scale = positive(n["reward_scale"], "maddpg.reward_scale");
    if (m.tau > 1.0) throw ConfigError("maddpg.tau: must lie in (0, 1]");
    if (m.buffer_capacity == 0 || m.batch_size == 0) throw ConfigError("maddpg: buffer_capacity and batch_size must be > 0");
    if (m.noise_sigma < 0.0 || m.noise_floor < 0.0) throw ConfigError("maddpg: noise levels must be >= 0");
    if (m.noise_decay > 1.0) throw ConfigError("maddpg.noise_decay: must lie in (0, 1]");
}

void parse_market(const YAML::Node& n, MarketConfig& m) {
    reject_unknown(n, {"shed_penalty", "fixed_increment", "design_reference", "bid_step_ratio", "bid_spread"}, "market");
    if (n["shed_penalty"]) {
        if (n["shed_penalty"].IsNull())
            m.shed_penalty.reset();
        else
            m.shed_penalty = positive(n["shed_penalty"], "market.shed_penalty");
    }
    if (n["fixed_increment"]) m.fixed_increment = positive(n["fixed_increment"], "market.fixed_increment");
    if (n["design_reference"]) m.design_reference = positive(n["design_reference"], "market.design_reference");
    if (n["bid_step_ratio"]) m.bid_step_ratio = positive(n["bid_step_ratio"], "market.bid_step_ratio");
    if (n["bid_spread"]) m.bid_spread = positive(n["bid_spread"], "market.bid_spread");
    if (m.bid_step_ratio >= 1.0) throw ConfigError("market.bid_step_ratio: must be < 1");
    if (m.bid_spread < 1.0) throw ConfigError("market.bid_spread: must be >= 1");
}

void parse_design(const YAML::Node& n, DesignConfig& d) {
    reject_unknown(n,
                   {"candidates", "sigma", "mu_init", "n_up", "lr", "baseline_decay", "normalize_advantages",
                    "mu_floor"},
                   "design");
    if (n["candidates"]) {
        const auto& c = n["candidates"];
        if (!c.IsSequence()) throw ConfigError("design.candidates: expected a list of line names");
        d.candidates.clear();
        for (std::size_t i = 0; i < c.size(); ++i)
            d.candidates.push_back(scalar<std::string>(c[i], "design.candidates[" + std::to_string(i) + "]", "a line name"));
    }
    if (n["sigma"]) d.sigma = numbers(n["sigma"], "design.sigma");
    for (double s : d.sigma)
        if (!(s > 0.0)) throw ConfigError("design.sigma: must be > 0");
    if (n["mu_init"]) d.mu_init = numbers(n["mu_init"], "design.mu_init");
    if (n["n_up"]) d.n_up = count(n["n_up"], "design.n_up");
    if (d.n_up == 0) throw ConfigError("design.n_up: must be >= 1");
    if (n["lr"]) d.lr = positive(n["lr"], "design.lr");
    if (n["baseline_decay"]) d.baseline_decay = number(n["baseline_decay"], "design.baseline_decay");
    if (d.baseline_decay < 0.0 || d.baseline_decay >= 1.0) throw ConfigError("design.baseline_decay: must lie in [0, 1)");
    if (n["normalize_advantages"])
        d.normalize_advantages = scalar<bool>(n["normalize_advantages"], "design.normalize_advantages", "a boolean");
    if (n["mu_floor"]) d.mu_floor = number(n["mu_floor"], "design.mu_floor");
    if (d.mu_floor <= 0.0 || d.mu_floor >= 0.5) throw ConfigError("design.mu_floor: must lie in (0, 0.5)");
}

ScenarioConfig parse_scenario(const YAML::Node& n) {
    reject_unknown(n, {"bids", "shed_penalty"}, "scenario");
    ScenarioConfig s;
    if (!n["bids"] || !n["bids"].IsMap()) throw ConfigError("scenario.bids: expected a mapping of generator name to bid");
    for (const auto& kv : n["bids"]) {
        const auto name = kv.first.as<std::string>();
        s.bids[name] = positive(kv.second, "scenario.bids." + name);
    }
    if (n["shed_penalty"]) s.shed_penalty = positive(n["shed_penalty"], "scenario.shed_penalty");
    return s;
}

void parse_output(const YAML::Node& n, OutputConfig& o) {
    reject_unknown(n, {"log_steps", "checkpoint_every", "summary_fraction", "progress_every"}, "output");
    if (n["log_steps"]) o.log_steps = scalar<bool>(n["log_steps"], "output.log_steps", "a boolean");
    if (n["checkpoint_every"]) o.checkpoint_every = count(n["checkpoint_every"], "output.checkpoint_every");
    if (n["summary_fraction"]) o.summary_fraction = positive(n["summary_fraction"], "output.summary_fraction");
    if (o.summary_fraction > 1.0) throw ConfigError("output.summary_fraction: must lie in (0, 1]");
    if (n["progress_every"]) o.progress_every = count(n["progress_every"], "output.progress_every");
}

void apply_override(YAML::Node& root, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "': expected key=value");
    const std::string key = text.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(text.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        throw ConfigError("override '" + text + "': " + e.what());
    }
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw ConfigError("override '" + text + "': empty key component");
        parts.push_back(p);
    }
    // yaml-cpp nodes are handles, so descending by reassignment would
    // overwrite the parent; keep a chain of handles instead.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node child = chain.back()[parts[i]];
        if (child && !child.IsMap() && !child.IsNull())
            throw ConfigError("override '" + text + "': '" + parts[i] + "' is not a section");
        if (!child || child.IsNull()) {
            chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
            child = chain.back()[parts[i]];
        }
        chain.push_back(child);
    }
    chain.back()[parts.back()] = value;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::vector<std::string>& overrides,
                           const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
    for (const auto& o : overrides) apply_override(root, o);

    reject_unknown(root,
                   {"case", "mode", "episodes", "horizon", "gamma", "annualization", "seed", "output_dir", "maddpg",
                    "market", "design", "scenario", "output"},
                   "");
    RunConfig cfg;
    if (!root["case"]) throw ConfigError("config: missing key 'case'");
    if (!root["mode"]) throw ConfigError("config: missing key 'mode'");
    cfg.case_path = scalar<std::string>(root["case"], "case", "a path");
    if (cfg.case_path.is_relative() && !base_dir.empty()) cfg.case_path = base_dir / cfg.case_path;
    cfg.mode = parse_mode(root["mode"]);
    if (root["episodes"]) cfg.episodes = count(root["episodes"], "episodes");
    if (root["horizon"]) {
        cfg.horizon = count(root["horizon"], "horizon");
        if (*cfg.horizon == 0) throw ConfigError("horizon: must be >= 1");
    }
    if (root["annualization"]) {
        const auto& a = root["annualization"];
        if (!(a.IsScalar() && a.Scalar() == "auto")) cfg.annualization = positive(a, "annualization");
    }
    if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed", "a non-negative integer");
    if (root["output_dir"]) cfg.output_dir = scalar<std::string>(root["output_dir"], "output_dir", "a path");
    if (root["gamma"]) {
        cfg.maddpg.gamma = number(root["gamma"], "gamma");
        if (cfg.maddpg.gamma < 0.0 || cfg.maddpg.gamma > 1.0) throw ConfigError("gamma: must lie in [0, 1]");
    }
    if (root["maddpg"]) parse_maddpg(root["maddpg"], cfg.maddpg);
    if (root["market"]) parse_market(root["market"], cfg.market);
    if (root["design"]) parse_design(root["design"], cfg.design);
    if (root["scenario"]) cfg.scenario = parse_scenario(root["scenario"]);
    if (root["output"]) parse_output(root["output"], cfg.output);

    const bool trains = cfg.mode != RunMode::clear_only;
    if (trains && cfg.episodes == 0 && cfg.mode == RunMode::two_stage)
        throw ConfigError("episodes: must be >= 1");
    if ((cfg.mode == RunMode::co_opt_continuous || cfg.mode == RunMode::co_opt_discrete) &&
        cfg.episodes < cfg.design.n_up)
        throw ConfigError("N ≥ N_up required (episodes " + std::to_string(cfg.episodes) + ", design.n_up " +
                          std::to_string(cfg.design.n_up) + ")");
    if (cfg.mode == RunMode::two_stage && !cfg.scenario) throw ConfigError("scenario: required in two-stage mode");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), overrides, path.parent_path());
}

std::string run_config_json(const RunConfig& cfg) {
    using nlohmann::ordered_json;
    auto num = [](double v) { return round15(v); };
    auto nums = [&](const std::vector<double>& v) {
        ordered_json a = ordered_json::array();
        for (double x : v) a.push_back(num(x));
        return a;
    };
    ordered_json j;
    j["case"] = cfg.case_path.string();
    j["mode"] = std::string(to_string(cfg.mode));
    j["episodes"] = cfg.episodes;
    j["horizon"] = cfg.horizon ? ordered_json(*cfg.horizon) : ordered_json("auto");
    j["gamma"] = num(cfg.maddpg.gamma);
    j["annualization"] = cfg.annualization ? ordered_json(num(*cfg.annualization)) : ordered_json("auto");
    j["seed"] = cfg.seed;
    const auto& m = cfg.maddpg;
    j["maddpg"] = {{"actor_hidden", m.actor_hidden},     {"critic_hidden", m.critic_hidden},
                   {"actor_lr", num(m.actor_lr)},         {"critic_lr", num(m.critic_lr)},
                   {"tau", num(m.tau)},                   {"buffer_capacity", m.buffer_capacity},
                   {"batch_size", m.batch_size},          {"warmup_batches", m.warmup_batches},
                   {"noise_sigma", num(m.noise_sigma)},   {"noise_decay", num(m.noise_decay)},
                   {"noise_floor", num(m.noise_floor)},   {"reward_scale", num(m.reward_scale)}};
    const auto& k = cfg.market;
    j["market"] = {{"shed_penalty", k.shed_penalty ? ordered_json(num(*k.shed_penalty)) : ordered_json(nullptr)},
                   {"fixed_increment", num(k.fixed_increment)},
                   {"design_reference", num(k.design_reference)},
                   {"bid_step_ratio", num(k.bid_step_ratio)},
                   {"bid_spread", num(k.bid_spread)}};
    const auto& d = cfg.design;
    j["design"] = {{"candidates", d.candidates},
                   {"sigma", nums(d.sigma)},
                   {"mu_init", nums(d.mu_init)},
                   {"n_up", d.n_up},
                   {"lr", d.lr ? ordered_json(num(*d.lr)) : ordered_json("auto")},
                   {"baseline_decay", num(d.baseline_decay)},
                   {"normalize_advantages", d.normalize_advantages},
                   {"mu_floor", num(d.mu_floor)}};
    if (cfg.scenario) {
        ordered_json bids = ordered_json::object();
        for (const auto& [name, b] : cfg.scenario->bids) bids[name] = num(b);
        j["scenario"] = {{"bids", bids}, {"shed_penalty", num(cfg.scenario->shed_penalty)}};
    }
    const auto& o = cfg.output;
    j["output"] = {{"log_steps", o.log_steps},
                   {"checkpoint_every", o.checkpoint_every},
                   {"summary_fraction", num(o.summary_fraction)},
                   {"progress_every", o.progress_every}};
    return j.dump();
}

NetworkCase load_run_case(const RunConfig& cfg) {
    auto net = restrict_candidates(load_case(cfg.case_path), cfg.design.candidates);
    if (cfg.horizon) {
        if (*cfg.horizon > net.profile.horizon())
            throw ConfigError("horizon " + std::to_string(*cfg.horizon) + " exceeds the case profile length " +
                              std::to_string(net.profile.horizon()));
        net.profile.shape.resize(*cfg.horizon);
    }
    return net;
}

double run_annualization(const RunConfig& cfg, const NetworkCase& net) {
    return cfg.annualization ? *cfg.annualization : annualization_factor(net.profile.horizon());
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name) {
    // FNV-1a of the stream name, mixed with the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = seed ^ h;
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
    return std::mt19937_64(seq);
}

}  // namespace gridco
