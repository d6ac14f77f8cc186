#include "gridco/metrics.hpp"

#include <json.hpp>

#include "gridco/error.hpp"
#include "gridco/format.hpp"

#ifndef GRIDCO_VERSION
#define GRIDCO_VERSION "unknown"
#endif

namespace gridco {

std::string_view library_version() {
    return GRIDCO_VERSION;
}

namespace {

using nlohmann::ordered_json;

ordered_json nums(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(round15(x));
    return a;
}

std::vector<double> get_nums(const ordered_json& j, const char* key) {
    std::vector<double> out;
    for (const auto& x : j.at(key)) out.push_back(x.get<double>());
    return out;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool log_steps)
    : out_(path, std::ios::out | std::ios::trunc), log_steps_(log_steps) {
    if (!out_) throw Error("cannot write metrics file " + path.string());
}

void MetricsWriter::line(const std::string& text) {
    out_ << text << '\n';
    if (!out_) throw Error("metrics stream write failed");
}

void MetricsWriter::header(const RunHeader& h) {
    ordered_json j;
    j["type"] = "header";
    j["version"] = h.version;
    j["seed"] = h.seed;
    j["mode"] = h.mode;
    j["config"] = h.config_json.empty() ? ordered_json::object() : ordered_json::parse(h.config_json);
    j["agents"] = h.agents;
    j["agent_costs"] = nums(h.agent_costs);
    j["candidates"] = h.candidates;
    j["design_mode"] = h.design_mode;
    j["horizon"] = h.horizon;
    j["w_anu"] = round15(h.w_anu);
    if (h.planned_operational) j["planned_operational"] = round15(*h.planned_operational);
    if (h.planned_expansion) j["planned_expansion"] = round15(*h.planned_expansion);
    line(j.dump());
}

void MetricsWriter::step(const StepRecord& r) {
    if (!log_steps_) return;
    ordered_json j;
    j["type"] = "step";
    j["episode"] = r.episode;
    j["t"] = r.t;
    j["actions"] = nums(r.actions);
    j["bids"] = nums(r.bids);
    j["rewards"] = nums(r.rewards);
    j["operational_cost"] = round15(r.operational_cost);
    j["shed"] = round15(r.shed);
    line(j.dump());
}

void MetricsWriter::episode(const EpisodeRecord& r) {
    ordered_json j;
    j["type"] = "episode";
    j["episode"] = r.episode;
    j["design"] = nums(r.design);
    j["raw"] = nums(r.raw);
    j["mu"] = nums(r.mu);
    j["baseline"] = r.baseline ? ordered_json(round15(*r.baseline)) : ordered_json(nullptr);
    j["design_updated"] = r.design_updated;
    j["operational_cost"] = round15(r.operational_cost);
    j["shed"] = round15(r.shed);
    j["shed_cost"] = round15(r.shed_cost);
    j["expansion_cost"] = round15(r.expansion_cost);
    j["g_total"] = round15(r.g_total);
    j["returns"] = nums(r.returns);
    j["profits"] = nums(r.profits);
    j["revenues"] = nums(r.revenues);
    j["mean_bids"] = nums(r.mean_bids);
    j["mean_actions"] = nums(r.mean_actions);
    j["mean_greedy_actions"] = nums(r.mean_greedy_actions);
    j["noise_sigma"] = round15(r.noise_sigma);
    j["critic_loss"] = nums(r.critic_loss);
    line(j.dump());
}

void MetricsWriter::flush() {
    out_.flush();
}

MetricsLog read_metrics(const std::filesystem::path& path, bool with_steps) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open metrics file " + path.string());
    MetricsLog log;
    bool have_header = false;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.empty()) continue;
        if (!with_steps && text.rfind("{\"type\":\"step\"", 0) == 0) continue;
        try {
            const auto j = ordered_json::parse(text);
            const auto type = j.at("type").get<std::string>();
            if (type == "header") {
                auto& h = log.header;
                h.version = j.at("version").get<std::string>();
                h.seed = j.at("seed").get<std::uint64_t>();
                h.mode = j.at("mode").get<std::string>();
                h.config_json = j.at("config").dump();
                h.agents = j.at("agents").get<std::vector<std::string>>();
                h.agent_costs = get_nums(j, "agent_costs");
                h.candidates = j.at("candidates").get<std::vector<std::string>>();
                h.design_mode = j.at("design_mode").get<std::string>();
                h.horizon = j.at("horizon").get<std::size_t>();
                h.w_anu = j.at("w_anu").get<double>();
                if (j.contains("planned_operational")) h.planned_operational = j["planned_operational"].get<double>();
                if (j.contains("planned_expansion")) h.planned_expansion = j["planned_expansion"].get<double>();
                have_header = true;
            } else if (type == "step") {
                StepRecord r;
                r.episode = j.at("episode").get<std::size_t>();
                r.t = j.at("t").get<std::size_t>();
                r.actions = get_nums(j, "actions");
                r.bids = get_nums(j, "bids");
                r.rewards = get_nums(j, "rewards");
                r.operational_cost = j.at("operational_cost").get<double>();
                r.shed = j.at("shed").get<double>();
                log.steps.push_back(std::move(r));
            } else if (type == "episode") {
                EpisodeRecord r;
                r.episode = j.at("episode").get<std::size_t>();
                r.design = get_nums(j, "design");
                r.raw = get_nums(j, "raw");
                r.mu = get_nums(j, "mu");
                if (!j.at("baseline").is_null()) r.baseline = j.at("baseline").get<double>();
                r.design_updated = j.at("design_updated").get<bool>();
                r.operational_cost = j.at("operational_cost").get<double>();
                r.shed = j.at("shed").get<double>();
                r.shed_cost = j.at("shed_cost").get<double>();
                r.expansion_cost = j.at("expansion_cost").get<double>();
                r.g_total = j.at("g_total").get<double>();
                r.returns = get_nums(j, "returns");
                r.profits = get_nums(j, "profits");
                r.revenues = get_nums(j, "revenues");
                r.mean_bids = get_nums(j, "mean_bids");
                r.mean_actions = get_nums(j, "mean_actions");
                r.mean_greedy_actions = get_nums(j, "mean_greedy_actions");
                r.noise_sigma = j.at("noise_sigma").get<double>();
                r.critic_loss = get_nums(j, "critic_loss");
                log.episodes.push_back(std::move(r));
            } else {
                throw ParseError("unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_header) throw ParseError(path.string() + ": no header record");
    return log;
}

}  // namespace gridco
