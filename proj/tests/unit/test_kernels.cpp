#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <random>

#include "docintel/kernels.hpp"

using namespace docintel::kernels;

namespace {

std::vector<float> random_matrix(std::size_t rows, std::size_t dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> m(rows * dim);
  for (auto& x : m) x = d(rng);
  return m;
}

}  // namespace

TEST_CASE("dot_rows serial and parallel are bit-identical") {
  const std::size_t rows = 777, dim = 48;
  const auto m = random_matrix(rows, dim, 1);
  const auto q = random_matrix(1, dim, 2);
  std::vector<double> a(rows), b(rows);
  dot_rows(Exec::kSerial, m, dim, q, a);
  dot_rows(Exec::kParallel, m, dim, q, b);
  CHECK(std::memcmp(a.data(), b.data(), rows * sizeof(double)) == 0);
  double expect = 0;
  for (std::size_t j = 0; j < dim; ++j) expect += static_cast<double>(m[5 * dim + j]) * q[j];
  CHECK(a[5] == expect);
}

TEST_CASE("top_k_rows agrees with a full sort") {
  const std::size_t rows = 500, dim = 8;
  auto m = random_matrix(rows, dim, 3);
  // Duplicate rows force score ties.
  std::copy(m.begin(), m.begin() + dim, m.begin() + 7 * dim);
  const auto q = random_matrix(1, dim, 4);
  for (std::size_t k : {std::size_t{1}, std::size_t{10}, rows, rows + 5}) {
    const auto s = top_k_rows(Exec::kSerial, m, dim, q, k);
    const auto p = top_k_rows(Exec::kParallel, m, dim, q, k);
    REQUIRE(s.size() == std::min(k, rows));
    REQUIRE(p.size() == s.size());
    std::vector<double> all(rows);
    dot_rows(Exec::kSerial, m, dim, q, all);
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return all[x] > all[y]; });
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].index == order[i]);
      CHECK(p[i].index == s[i].index);
      CHECK(p[i].score == s[i].score);
    }
  }
}

TEST_CASE("sort_top_k tie order") {
  std::vector<Scored> v = {{4, 1.0}, {2, 3.0}, {9, 1.0}, {1, 1.0}, {3, 3.0}};
  sort_top_k(v, 4);
  REQUIRE(v.size() == 4);
  CHECK(v[0].index == 2);
  CHECK(v[1].index == 3);
  CHECK(v[2].index == 1);
  CHECK(v[3].index == 4);
}

TEST_CASE("for_each_index visits every index once") {
  std::vector<std::atomic<int>> hits(1000);
  for_each_index(Exec::kParallel, hits.size(), [&](std::size_t i) { hits[i]++; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h.load() == 1; }));
  CHECK(max_threads() >= 1);
}
