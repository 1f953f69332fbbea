#pragma once

#include <cstddef>
#include <functional>
#include <memory>

namespace tsim {

/// Fixed-size worker pool for data-parallel loops. A thread count of 1 runs
/// everything inline on the caller.
class Executor {
 public:
  explicit Executor(int threads);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  int threads() const { return threads_; }

  /// Calls body(begin, end) over disjoint chunks covering [0, n).
  void parallel_for(std::size_t n, std::size_t grain,
                    const std::function<void(std::size_t, std::size_t)>& body);

 private:
  struct Impl;
  int threads_;
  std::unique_ptr<Impl> impl_;
};

/// Worker count used when the caller passes 0: the hardware parallelism.
int default_thread_count();

}  // namespace tsim
