#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sictf/corpus.hpp"
#include "sictf/factorization.hpp"
#include "sictf/side_info.hpp"

using namespace sictf;

namespace {

TripleTensor random_tensor(int n, int m, int nnz_per_slice, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> node(0, n - 1);
    std::uniform_real_distribution<double> weight(0.5, 5.0);
    std::vector<Triple> triples;
    for (int k = 0; k < m; ++k)
        for (int t = 0; t < nnz_per_slice; ++t)
            triples.push_back({node(rng), k, node(rng), weight(rng)});
    return build_tensor(triples, n, m);
}

NpHypernymMatrix random_w(int n, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NpHypernymMatrix W;
    W.n = n;
    for (int j = 0; j < h; ++j) W.hypernyms.get_or_add("h" + std::to_string(j));
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i) trips.emplace_back(i, rng() % h, 1.0);
    W.W.resize(n, h);
    W.W.setFromTriplets(trips.begin(), trips.end());
    W.stored_pairs = n;
    return W;
}

void bench_fit_sweep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int m = 10, c = 20, h = 30;
    auto X = random_tensor(n, m, n * 4, 1);
    auto W = random_w(n, h, 2);
    RelSimilarityMatrix S;
    S.m = m;
    for (int i = 0; i + 1 < m; i += 2) S.pairs.insert({i, i + 1});

    FactorizationConfig cfg;
    cfg.rank = c;
    cfg.max_iters = 1;
    cfg.tol = 1e-300;
    for (auto _ : state) {
        auto model = fit(X, W, S, cfg);
        benchmark::DoNotOptimize(model.fit_trace.back());
    }
}
BENCHMARK(bench_fit_sweep)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void bench_fit_sweep_threads(benchmark::State& state) {
    const int n = 1000, m = 10, c = 20;
    auto X = random_tensor(n, m, n * 4, 1);
    NpHypernymMatrix W;
    W.n = n;
    W.W.resize(n, 0);
    RelSimilarityMatrix S;
    S.m = m;
    FactorizationConfig cfg;
    cfg.rank = c;
    cfg.lambda_np = 0;
    cfg.max_iters = 1;
    cfg.tol = 1e-300;
    cfg.threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto model = fit(X, W, S, cfg);
        benchmark::DoNotOptimize(model.fit_trace.back());
    }
}
BENCHMARK(bench_fit_sweep_threads)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void bench_objective(benchmark::State& state) {
    const int n = 1000, m = 10, c = 20;
    auto X = random_tensor(n, m, n * 4, 1);
    auto W = random_w(n, 30, 2);
    RelSimilarityMatrix S;
    S.m = m;
    FactorizationConfig cfg;
    cfg.rank = c;
    auto model = init_factors(n, m, W.h(), cfg);
    for (auto _ : state) benchmark::DoNotOptimize(objective(X, W, S, model, cfg));
}
BENCHMARK(bench_objective)->Unit(benchmark::kMillisecond);

void bench_build_tensor(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<Triple> triples;
    for (int t = 0; t < 100000; ++t)
        triples.push_back({static_cast<int>(rng() % 5000), static_cast<int>(rng() % 50),
                           static_cast<int>(rng() % 5000), 1.0});
    for (auto _ : state) {
        auto X = build_tensor(triples, 5000, 50);
        benchmark::DoNotOptimize(X.sum());
    }
}
BENCHMARK(bench_build_tensor)->Unit(benchmark::kMillisecond);

void bench_relation_similarity(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(-1, 1);
    Vocabulary rels;
    EmbeddingTable table;
    table.dim = 100;
    for (int i = 0; i < 500; ++i) {
        std::string name = "rel" + std::to_string(i);
        rels.get_or_add(name);
        Eigen::VectorXd v(100);
        for (int d = 0; d < 100; ++d) v(d) = unif(rng);
        table.vectors[name] = v;
    }
    for (auto _ : state) {
        auto S = build_relation_similarity(table, rels, 0.7);
        benchmark::DoNotOptimize(S.pair_count());
    }
}
BENCHMARK(bench_relation_similarity)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
