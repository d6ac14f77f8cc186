#include "gridco/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridco/error.hpp"
#include "gridco/format.hpp"
#include "gridco/harness.hpp"

namespace gridco {

std::vector<BidViolation> check_bid_constraints(const MetricsLog& log, const BidLimits& limits, double tol,
                                                const std::string& run_id) {
    if (log.steps.empty()) throw ValidationError("metrics log has no step records (was output.log_steps off?)");
    const auto& agents = log.header.agents;
    const auto& costs = log.header.agent_costs;
    const std::size_t n = agents.size();
    std::vector<BidViolation> out;

    std::vector<double> prev(n), lo(n), hi(n);
    std::size_t episode = static_cast<std::size_t>(-1);
    auto close_episode = [&] {
        if (episode == static_cast<std::size_t>(-1)) return;
        for (std::size_t i = 0; i < n; ++i) {
            const double spread = hi[i] / lo[i];
            if (spread > limits.spread + tol) out.push_back({run_id, episode, 0, agents[i], "spread", spread});
        }
    };
    for (const auto& s : log.steps) {
        if (s.bids.size() != n) throw DimensionError("step record bid count differs from the agent count");
        if (s.episode != episode) {
            close_episode();
            episode = s.episode;
            for (std::size_t i = 0; i < n; ++i) prev[i] = lo[i] = hi[i] = costs.at(i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double b = s.bids[i];
            const double ratio = b / prev[i];
            if (ratio > 1.0 + limits.step_ratio + tol || ratio < 1.0 - limits.step_ratio - tol)
                out.push_back({run_id, s.episode, s.t, agents[i], "step", ratio});
            prev[i] = b;
            lo[i] = std::min(lo[i], b);
            hi[i] = std::max(hi[i], b);
        }
    }
    close_episode();
    return out;
}

namespace {

double summary_fraction_of(const RunHeader& h) {
    const auto j = nlohmann::json::parse(h.config_json, nullptr, false);
    if (j.is_object() && j.contains("output") && j["output"].contains("summary_fraction"))
        return j["output"]["summary_fraction"].get<double>();
    return 0.1;
}

std::string run_id_of(const std::filesystem::path& dir) {
    auto p = dir;
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

void write_file(const std::filesystem::path& path, const std::string& text, ReportResult& res) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    res.files.push_back(path);
}

}  // namespace

ReportResult write_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir,
                          const BidLimits& limits) {
    if (run_dirs.empty()) throw ConfigError("report: no run directories given");
    struct Run {
        std::string id;
        MetricsLog log;
        Summary summary;
    };
    std::vector<Run> runs;
    for (const auto& dir : run_dirs) {
        const auto path = dir / "metrics.jsonl";
        if (!std::filesystem::exists(path)) throw ParseError(dir.string() + ": no metrics.jsonl");
        Run r;
        r.id = run_id_of(dir);
        r.log = read_metrics(path);
        if (r.log.episodes.empty()) throw ParseError(path.string() + ": no episode records");
        r.summary = summarize(r.log, summary_window(r.log.episodes.size(), summary_fraction_of(r.log.header)), r.id);
        runs.push_back(std::move(r));
    }
    std::filesystem::create_directories(out_dir);
    ReportResult res;
    res.runs = runs.size();

    std::vector<std::string> agents;
    bool planned = false;
    for (const auto& r : runs) {
        for (const auto& a : r.log.header.agents)
            if (std::find(agents.begin(), agents.end(), a) == agents.end()) agents.push_back(a);
        planned = planned || r.summary.planned.has_value();
    }

    // total_cost = operational_cost + expansion_cost, all $/yr.
    std::ostringstream bd;
    bd << "run_id,mode,window,operational_cost,expansion_cost,total_cost";
    for (const auto& a : agents) bd << ",revenue_" << a;
    for (const auto& a : agents) bd << ",profit_" << a;
    bd << ",shed_mwh,converged";
    if (planned) bd << ",planned_operational,planned_expansion,planned_total";
    bd << "\n";
    for (const auto& r : runs) {
        const auto& s = r.summary;
        bd << r.id << "," << s.mode << "," << s.window << "," << fmt15(s.operational_cost) << ","
           << fmt15(s.expansion_cost) << "," << fmt15(s.total_cost);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& a : agents) {
                auto it = std::find(s.agents.begin(), s.agents.end(), a);
                bd << ",";
                if (it == s.agents.end()) continue;
                const auto i = static_cast<std::size_t>(it - s.agents.begin());
                bd << fmt15(pass == 0 ? s.revenues[i] : s.profits[i]);
            }
        }
        bd << "," << fmt15(s.shed) << "," << (s.converged ? "true" : "false");
        if (planned) {
            if (s.planned)
                bd << "," << fmt15(s.planned->operational) << "," << fmt15(s.planned->expansion) << ","
                   << fmt15(s.planned->total);
            else
                bd << ",,,";
        }
        bd << "\n";
    }
    write_file(out_dir / "breakdown.csv", bd.str(), res);

    std::ostringstream bids;
    bids << "run_id,episode,agent,mean_bid,mean_action,mean_greedy_action,profit\n";
    std::ostringstream mu;
    mu << "run_id,episode,line,mu,design,raw,design_updated\n";
    for (const auto& r : runs) {
        const auto& h = r.log.header;
        for (const auto& e : r.log.episodes) {
            for (std::size_t i = 0; i < h.agents.size(); ++i)
                bids << r.id << "," << e.episode << "," << h.agents[i] << "," << fmt15(e.mean_bids.at(i)) << ","
                     << fmt15(e.mean_actions.at(i)) << "," << fmt15(e.mean_greedy_actions.at(i)) << ","
                     << fmt15(e.profits.at(i)) << "\n";
            for (std::size_t k = 0; k < h.candidates.size(); ++k) {
                mu << r.id << "," << e.episode << "," << h.candidates[k] << ",";
                if (k < e.mu.size()) mu << fmt15(e.mu[k]);
                mu << "," << fmt15(e.design.at(k)) << "," << fmt15(e.raw.at(k)) << ","
                   << (e.design_updated ? "true" : "false") << "\n";
            }
        }
    }
    write_file(out_dir / "bids.csv", bids.str(), res);
    write_file(out_dir / "mu.csv", mu.str(), res);

    if (runs.size() >= 2) {
        std::ostringstream cmp;
        cmp << "run_id,mode,operational_cost,expansion_cost,total_cost,total_vs_first,planned_total\n";
        const double base = runs.front().summary.total_cost;
        for (const auto& r : runs) {
            const auto& s = r.summary;
            cmp << r.id << "," << s.mode << "," << fmt15(s.operational_cost) << "," << fmt15(s.expansion_cost) << ","
                << fmt15(s.total_cost) << "," << fmt15(base != 0.0 ? s.total_cost / base - 1.0 : 0.0) << ",";
            if (s.planned) cmp << fmt15(s.planned->total);
            cmp << "\n";
        }
        write_file(out_dir / "comparison.csv", cmp.str(), res);
    }

    for (const auto& r : runs) {
        auto v = check_bid_constraints(r.log, limits, 1e-9, r.id);
        res.steps_checked += r.log.steps.size();
        res.violations.insert(res.violations.end(), v.begin(), v.end());
    }
    return res;
}

}  // namespace gridco
