#include "cli.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "gridco/dcopf.hpp"
#include "gridco/error.hpp"
#include "gridco/format.hpp"
#include "gridco/harness.hpp"
#include "gridco/report.hpp"
#include "gridco/run_config.hpp"

namespace gridco::cli {

namespace {

// Bids file: a list with one bid per generator, or a map from generator
// name to bid where missing generators bid their marginal cost.
std::vector<double> load_bids(const std::filesystem::path& path, const NetworkCase& net) {
    if (!std::filesystem::exists(path)) throw ParseError("bids file not found: " + path.string());
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    std::vector<double> bids;
    for (const auto& g : net.generators) bids.push_back(g.marginal_cost);
    try {
        if (root.IsSequence()) {
            if (root.size() != net.num_generators())
                throw ValidationError(path.string() + ": expected " + std::to_string(net.num_generators()) +
                                      " bids, got " + std::to_string(root.size()));
            for (std::size_t i = 0; i < root.size(); ++i) bids[i] = root[i].as<double>();
        } else if (root.IsMap()) {
            for (const auto& kv : root) bids[net.generator_index(kv.first.as<std::string>())] = kv.second.as<double>();
        } else {
            throw ParseError(path.string() + ": expected a list of bids or a map of generator name to bid");
        }
    } catch (const YAML::Exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    for (double b : bids)
        if (!std::isfinite(b)) throw ValidationError(path.string() + ": bids must be finite");
    return bids;
}

std::string clearing_csv(const ClearingResult& r) {
    std::ostringstream os;
    auto row = [&](const char* name, const std::vector<double>& v) {
        os << name;
        for (double x : v) os << "," << fmt15(x);
        os << "\n";
    };
    os << "quantity,values\n";
    row("dispatch", r.dispatch);
    row("lmp", r.lmp);
    row("gen_price", r.gen_price);
    row("flow", r.flows);
    row("shed", r.shed);
    row("angle", r.angles);
    row("operational_cost", {r.operational_cost});
    row("shed_cost", {r.shed_cost});
    row("objective", {r.objective});
    return os.str();
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write " + out_path);
    f << text;
}

struct TrainArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir;
    bool quiet = false;
    bool verbose = false;
};

int train_like(const TrainArgs& a, bool benchmark, std::ostream& out, std::ostream& err) {
    auto cfg = load_run_config(a.config, a.overrides);
    if (benchmark && cfg.mode != RunMode::two_stage)
        throw ConfigError("mode: benchmark needs mode two-stage, got '" + std::string(to_string(cfg.mode)) + "'");
    if (!benchmark && cfg.mode != RunMode::co_opt_continuous && cfg.mode != RunMode::co_opt_discrete)
        throw ConfigError("mode: train needs co-opt-continuous or co-opt-discrete, got '" +
                          std::string(to_string(cfg.mode)) + "'" +
                          (cfg.mode == RunMode::two_stage ? " (use the benchmark command)" : ""));
    if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
    if (cfg.output_dir.empty()) cfg.output_dir = std::filesystem::path("runs") / std::filesystem::path(a.config).stem();

    const std::size_t every = a.verbose ? 1 : cfg.output.progress_every;
    std::deque<double> recent;
    ProgressFn progress;
    if (!a.quiet && every > 0) {
        progress = [&, every](const EpisodeRecord& e) {
            recent.push_back(e.g_total);
            if (recent.size() > every) recent.pop_front();
            if ((e.episode + 1) % every != 0 && e.episode + 1 != cfg.episodes) return;
            const double g = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
            out << "episode " << e.episode + 1 << "/" << cfg.episodes << " reward";
            for (double p : e.profits) out << " " << fmt15(round15(p));
            if (!e.mu.empty()) {
                out << " mu";
                for (double m : e.mu) out << " " << fmt15(m);
            } else if (!e.design.empty()) {
                out << " design";
                for (double d : e.design) out << " " << fmt15(d);
            }
            out << " G_avg " << fmt15(g) << " sigma " << fmt15(e.noise_sigma) << "\n";
            out.flush();
        };
    }
    const auto art = run(cfg, progress);
    if (!a.quiet) {
        if (art.stage1) {
            out << "stage 1: expansion";
            for (double x : art.stage1->expansion) out << " " << fmt15(x);
            out << " MW, planned cost " << fmt15(art.stage1->objective) << " $/yr\n";
        }
        out << "final design";
        for (double d : art.final_design) out << " " << fmt15(d);
        out << "\ntotal cost " << fmt15(art.summary.total_cost) << " $/yr (operational "
            << fmt15(art.summary.operational_cost) << ", expansion " << fmt15(art.summary.expansion_cost) << ")\n";
        out << "artifacts in " << art.dir.string() << "\n";
    }
    if (!art.summary.converged) err << "warning: load was shed during the summary window\n";
    return ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Co-optimization of market bidding and transmission expansion", "gridco"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version()));

    auto* clear = app.add_subcommand("clear", "Clear one market snapshot and print the result as CSV");
    std::string case_path, bids_path, clear_out;
    std::size_t step = 0;
    bool no_shed = false;
    double shed_penalty = 1e4;
    clear->add_option("--case", case_path, "Case file")->required();
    clear->add_option("--bids", bids_path, "Bids file: a list, or a map of generator name to bid")->required();
    clear->add_option("--step", step, "Demand profile step")->capture_default_str();
    auto* no_shed_flag = clear->add_flag("--no-shed", no_shed, "Disable load shedding");
    clear->add_option("--shed-penalty", shed_penalty, "Value of lost load, $/MWh")
        ->capture_default_str()
        ->excludes(no_shed_flag);
    clear->add_option("--out", clear_out, "Write the CSV here instead of standard output");

    TrainArgs train_args, bench_args;
    auto add_train_opts = [](CLI::App* sub, TrainArgs& a) {
        sub->add_option("config", a.config, "Run configuration file")->required();
        sub->add_option("--override,-O", a.overrides, "dotted.key=value, applied before validation")
            ->allow_extra_args(false);
        sub->add_option("--out", a.out_dir, "Output directory (overrides output_dir)");
        auto* q = sub->add_flag("-q,--quiet", a.quiet, "No progress output");
        sub->add_flag("-v,--verbose", a.verbose, "Progress line every episode")->excludes(q);
    };
    auto* train = app.add_subcommand("train", "Run bidding and expansion co-optimization");
    add_train_opts(train, train_args);
    auto* bench = app.add_subcommand("benchmark", "Run the two-stage benchmark (expansion LP, then bidding)");
    add_train_opts(bench, bench_args);

    auto* report = app.add_subcommand("report", "Write plot-ready CSVs and check bid constraints");
    std::vector<std::string> report_dirs;
    std::string report_out;
    report->add_option("runs", report_dirs, "Run directories")->required();
    report->add_option("--out", report_out, "Output directory (default: the single run directory, else ./report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << library_version() << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return input_error;
    }

    try {
        if (*clear) {
            const auto net = load_case(case_path);
            for (const auto& d : validate(net))
                if (d.is_error()) throw ValidationError(to_string(d));
            if (step >= net.profile.horizon())
                throw ValidationError("--step " + std::to_string(step) + " outside the profile (" +
                                      std::to_string(net.profile.horizon()) + " steps)");
            auto input = truthful_input(net, step, no_shed ? std::nullopt : std::optional<double>(shed_penalty));
            input.bids = load_bids(bids_path, net);
            const auto result = clear_market(net, input);
            emit(clearing_csv(result), clear_out, out);
            return ok;
        }
        if (*train) return train_like(train_args, false, out, err);
        if (*bench) return train_like(bench_args, true, out, err);
        if (*report) {
            std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
            std::filesystem::path dest = report_out;
            if (dest.empty()) dest = dirs.size() == 1 ? dirs.front() : std::filesystem::path("report");
            const auto res = write_report(dirs, dest);
            for (const auto& f : res.files) out << "wrote " << f.string() << "\n";
            for (const auto& v : res.violations)
                err << "bid violation: run " << v.run_id << " episode " << v.episode << " step " << v.t << " agent "
                    << v.agent << " " << v.kind << " " << fmt15(v.value) << "\n";
            out << "bid constraints: " << res.steps_checked << " steps checked, " << res.violations.size()
                << " violations\n";
            return res.violations.empty() ? ok : runtime_failure;
        }
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return infeasible;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return input_error;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return runtime_failure;
    }
    return input_error;
}

}  // namespace gridco::cli
