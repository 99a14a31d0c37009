#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "skillr1/advantages.hpp"
#include "skillr1/engine.hpp"
#include "skillr1/objective.hpp"

using namespace skillr1;

namespace
{
std::vector<double> random_rewards(std::size_t k, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution hit(0.3);
    std::vector<double> r(k);
    for (auto& v : r)
        v = hit(gen) ? 1.0 : 0.0;
    return r;
}

std::vector<double> random_features(int d, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> f(feature_dim(d));
    for (auto& v : f)
        v = u(gen);
    f.back() = 1.0;
    return f;
}

struct EpisodeFixture
{
    SyntheticEnvConfig ec;
    std::vector<InstanceWithBank> instances;
    SyntheticEnv env;
    PolicyParams params;
    PolicySkillGenerator gen;
    TrainConfig cfg;

    explicit EpisodeFixture(int d)
        : ec{d, 0.1, 1, 4, 1}
        , instances(make_instances(ec, 1))
        , env(ec)
        , params(PolicyParams::random(d, 0.5, 1))
        , gen(PolicySnapshot(params, SnapshotRole::behavior), true)
    {
    }
};
}  // namespace

static void BM_IntraAdvantage(benchmark::State& state)
{
    auto r = random_rewards(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(intra_advantage(r));
}
BENCHMARK(BM_IntraAdvantage)->Arg(4)->Arg(16)->Arg(64);

static void BM_ActionDistribution(benchmark::State& state)
{
    int d = static_cast<int>(state.range(0));
    auto params = PolicyParams::random(d, 0.5, 2);
    auto f = random_features(d, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(action_distribution(params.weights, f));
}
BENCHMARK(BM_ActionDistribution)->Arg(8)->Arg(32)->Arg(128);

static void BM_LogprobGrad(benchmark::State& state)
{
    int d = static_cast<int>(state.range(0));
    auto params = PolicyParams::random(d, 0.5, 3);
    auto f = random_features(d, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(logprob_grad(params.weights, f, 1));
}
BENCHMARK(BM_LogprobGrad)->Arg(8)->Arg(32)->Arg(128);

static void BM_RunEpisode(benchmark::State& state)
{
    EpisodeFixture fx(8);
    fx.cfg.generations = static_cast<int>(state.range(0));
    auto const& item = fx.instances.front();
    std::int64_t episode = 0;
    for (auto _ : state)
    {
        auto res = run_episode(item.instance, item.bank, Ports{fx.env, fx.env, fx.gen},
                               fx.cfg, EpisodeContext{1, episode++, false, 1});
        benchmark::DoNotOptimize(res.objective_value);
    }
}
BENCHMARK(BM_RunEpisode)->Arg(1)->Arg(5)->Arg(20);

static void BM_EpisodeSurrogate(benchmark::State& state)
{
    EpisodeFixture fx(8);
    fx.cfg.generations = static_cast<int>(state.range(0));
    auto const& item = fx.instances.front();
    auto res = run_episode(item.instance, item.bank, Ports{fx.env, fx.env, fx.gen}, fx.cfg,
                           EpisodeContext{});
    PolicySnapshot const& behavior = fx.gen.snapshot();
    PolicySnapshot reference(fx.params, SnapshotRole::reference);
    for (auto _ : state)
    {
        auto s = episode_surrogate(res.history, res.advantages, fx.params, behavior,
                                   reference, 0.2, 0.01);
        benchmark::DoNotOptimize(s.value);
    }
}
BENCHMARK(BM_EpisodeSurrogate)->Arg(1)->Arg(5)->Arg(20);

BENCHMARK_MAIN();
