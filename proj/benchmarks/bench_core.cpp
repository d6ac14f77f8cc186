#include <benchmark/benchmark.h>

#include <random>

#include "gridco/dcopf.hpp"
#include "gridco/design_policy.hpp"
#include "gridco/maddpg.hpp"
#include "gridco/market_env.hpp"
#include "gridco/neural.hpp"
#include "gridco/stage1.hpp"

using namespace gridco;

namespace {

const NetworkCase& ieee30() {
    static const NetworkCase net = load_case(GRIDCO_DATA_DIR "/ieee30.case");
    return net;
}

void BM_ClearIeee30(benchmark::State& state) {
    const auto& net = ieee30();
    const auto in = truthful_input(net, 18, 1e4);
    for (auto _ : state) benchmark::DoNotOptimize(clear_market(net, in));
}
BENCHMARK(BM_ClearIeee30);

void BM_EnvEpisodeIeee30(benchmark::State& state) {
    MarketEnv env(ieee30());
    const std::vector<double> design(env.candidates().size(), 0.0);
    const std::vector<double> actions(env.num_agents(), 0.5);
    for (auto _ : state) {
        env.reset(design);
        while (!env.done()) benchmark::DoNotOptimize(env.step(actions));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(env.horizon()));
}
BENCHMARK(BM_EnvEpisodeIeee30)->Unit(benchmark::kMillisecond);

void BM_Stage1Ieee30(benchmark::State& state) {
    const auto net = restrict_candidates(ieee30(), {"4-12", "27-28"});
    std::vector<double> bids;
    for (const auto& g : net.generators) bids.push_back(g.strategic ? 90.0 : g.marginal_cost);
    const double w = annualization_factor(net.profile.horizon());
    for (auto _ : state) benchmark::DoNotOptimize(stage1_expansion_lp(net, bids, w));
}
BENCHMARK(BM_Stage1Ieee30)->Unit(benchmark::kMillisecond);

void BM_MlpForwardBackward(benchmark::State& state) {
    const auto width = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    auto net = Mlp::initialized({6, width, width, width, 1}, OutputActivation::identity, rng);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 64);
    const Eigen::MatrixXd G = Eigen::MatrixXd::Ones(1, 64);
    MlpTape tape;
    for (auto _ : state) {
        net.forward_batch(X, &tape);
        benchmark::DoNotOptimize(net.backward(tape, G));
    }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(128);

void BM_MaddpgTrainStep(benchmark::State& state) {
    const auto width = static_cast<std::size_t>(state.range(0));
    MaddpgConfig cfg;
    cfg.actor_hidden.assign(5, width);
    cfg.critic_hidden.assign(3, width);
    std::mt19937_64 init(1), rng(2);
    const std::size_t agents = 3, obs = 4;
    Maddpg m(std::vector<std::size_t>(agents, obs), cfg, init);
    std::vector<Eigen::VectorXd> o(agents, Eigen::VectorXd::Random(obs));
    for (std::size_t k = 0; k < cfg.batch_size * cfg.warmup_batches; ++k)
        m.store(o, std::vector<double>(agents, 0.5), std::vector<double>(agents, 1e3), o, false);
    for (auto _ : state) benchmark::DoNotOptimize(m.train_step(rng));
}
BENCHMARK(BM_MaddpgTrainStep)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_DesignPolicyRecord(benchmark::State& state) {
    DesignPolicyConfig cfg;
    cfg.sigma = {5.0};
    DesignPolicy p(std::vector<double>(6, 0.0), cfg);
    std::mt19937_64 rng(3);
    for (auto _ : state) {
        const auto s = p.sample(rng);
        benchmark::DoNotOptimize(p.record(s.raw, -s.raw[0]));
    }
}
BENCHMARK(BM_DesignPolicyRecord);

}  // namespace
BENCHMARK_MAIN();
