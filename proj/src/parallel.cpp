#include "qbd/parallel.hpp"

#include <omp.h>

namespace qbd {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace detail {

void run_openmp(std::ptrdiff_t n, void (*body)(void*, std::ptrdiff_t), void* ctx) {
  const int threads = thread_count();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail

}  // namespace qbd
