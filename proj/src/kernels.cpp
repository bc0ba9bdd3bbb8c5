#include "docintel/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "docintel/error.hpp"

namespace docintel::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void dot_rows(Exec exec, std::span<const float> matrix, std::size_t dim,
              std::span<const float> query, std::span<double> out) {
  if (query.size() != dim || matrix.size() != out.size() * dim) {
    throw Error(ErrorCode::kDimensionMismatch, "dot_rows: shape mismatch");
  }
  for_each_index(exec, out.size(), [&](std::size_t r) {
    const float* row = matrix.data() + r * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc += static_cast<double>(row[j]) * static_cast<double>(query[j]);
    }
    out[r] = acc;
  });
}

void sort_top_k(std::vector<Scored>& scored, std::size_t k) {
  auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  };
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k),
                    scored.end(), better);
  scored.resize(k);
}

std::vector<Scored> top_k_rows(Exec exec, std::span<const float> matrix,
                               std::size_t dim, std::span<const float> query,
                               std::size_t k) {
  const std::size_t rows = dim == 0 ? 0 : matrix.size() / dim;
  std::vector<double> scores(rows);
  dot_rows(exec, matrix, dim, query, scores);
  std::vector<Scored> scored(rows);
  for (std::size_t r = 0; r < rows; ++r) scored[r] = {r, scores[r]};
  sort_top_k(scored, k);
  return scored;
}

}  // namespace docintel::kernels
