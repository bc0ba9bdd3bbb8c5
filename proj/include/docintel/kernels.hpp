#pragma once

// Data-parallel inner loops. Every kernel has a serial reference that the
// tests hold the OpenMP path to (outputs must be bit-identical, since each
// output element is computed independently in both paths).

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace docintel::kernels {

enum class Exec { kSerial, kParallel };

bool openmp_enabled();
int max_threads();

// Calls fn(i) for i in [0, n). fn must not throw.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::kParallel && n > 1) {
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

// out[r] = <matrix row r, query>, accumulated in double. matrix is row-major
// with `dim` columns.
void dot_rows(Exec exec, std::span<const float> matrix, std::size_t dim,
              std::span<const float> query, std::span<double> out);

struct Scored {
  std::size_t index;
  double score;
};

// Top-k rows by dot product, score descending, ties by row index ascending.
std::vector<Scored> top_k_rows(Exec exec, std::span<const float> matrix,
                               std::size_t dim, std::span<const float> query,
                               std::size_t k);

// Orders by score descending then index ascending, keeping the first k.
void sort_top_k(std::vector<Scored>& scored, std::size_t k);

}  // namespace docintel::kernels
