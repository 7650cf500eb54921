// Index-parallel kernels with a serial reference path.
//
// Every data-parallel loop in the library goes through for_each_index so the
// OpenMP path and the serial path share one body and can be compared in tests
// and benchmarks.
#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace qbd {

enum class Exec { serial, openmp };

/// Threads used by Exec::openmp; 0 leaves the OpenMP runtime default.
void set_thread_count(int n);
int thread_count();

namespace detail {
void run_openmp(std::ptrdiff_t n, void (*body)(void*, std::ptrdiff_t), void* ctx);
}

/// Calls f(i) for i in [0, n). The first exception thrown by any index is rethrown.
template <class F>
void for_each_index(std::ptrdiff_t n, F&& f, Exec exec) {
  if (exec == Exec::serial || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
    return;
  }
  struct Ctx {
    F* f;
    std::exception_ptr err;
    std::mutex m;
  } ctx{&f, nullptr, {}};
  auto body = [](void* p, std::ptrdiff_t i) {
    auto* c = static_cast<Ctx*>(p);
    try {
      (*c->f)(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(c->m);
      if (!c->err) c->err = std::current_exception();
    }
  };
  detail::run_openmp(n, body, &ctx);
  if (ctx.err) std::rethrow_exception(ctx.err);
}

}  // namespace qbd
