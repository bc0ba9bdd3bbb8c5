// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick one.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "docintel/ingest.hpp"
#include "docintel/kernels.hpp"
#include "docintel/sparse/index.hpp"
#include "docintel/sparse/query.hpp"

using namespace docintel;

namespace {

std::vector<float> random_floats(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) ? kernels::Exec::kParallel : kernels::Exec::kSerial;
}

void BM_dot_rows(benchmark::State& state) {
  const std::size_t rows = state.range(1), dim = 256;
  const auto m = random_floats(rows * dim, 1);
  const auto q = random_floats(dim, 2);
  std::vector<double> out(rows);
  for (auto _ : state) {
    kernels::dot_rows(exec_of(state), m, dim, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

void BM_top_k_rows(benchmark::State& state) {
  const std::size_t rows = state.range(1), dim = 256;
  const auto m = random_floats(rows * dim, 3);
  const auto q = random_floats(dim, 4);
  for (auto _ : state) {
    auto top = kernels::top_k_rows(exec_of(state), m, dim, q, 10);
    benchmark::DoNotOptimize(top.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

void BM_bm25_rank(benchmark::State& state) {
  static const std::vector<std::string> vocab = {"river", "stone", "water", "fish", "tree", "sky",
                                                 "road", "hill", "cloud", "field", "rain", "wind"};
  std::mt19937_64 rng(5);
  sparse::SparseIndex index;
  for (std::int64_t i = 0; i < state.range(1); ++i) {
    std::string text;
    for (int w = 0; w < 60; ++w) text += vocab[rng() % vocab.size()] + " ";
    ingest::Chunk c;
    c.source_path = "/bench.txt";
    c.seq = static_cast<std::size_t>(i);
    c.start_offset = static_cast<std::size_t>(i) * 1000;
    c.end_offset = c.start_offset + text.size();
    c.chunk_id = ingest::make_chunk_id(c.source_path, c.start_offset, c.end_offset);
    c.text = std::move(text);
    index.add_chunk(c);
  }
  const auto q = sparse::parse_query("river OR fish OR cloud");
  for (auto _ : state) {
    auto ranked = index.rank(q, {}, exec_of(state));
    benchmark::DoNotOptimize(ranked.data());
  }
}

}  // namespace

BENCHMARK(BM_dot_rows)->ArgsProduct({{0, 1}, {1000, 50000}})->ArgNames({"parallel", "rows"});
BENCHMARK(BM_top_k_rows)->ArgsProduct({{0, 1}, {1000, 50000}})->ArgNames({"parallel", "rows"});
BENCHMARK(BM_bm25_rank)->ArgsProduct({{0, 1}, {2000, 20000}})->ArgNames({"parallel", "chunks"});

BENCHMARK_MAIN();
