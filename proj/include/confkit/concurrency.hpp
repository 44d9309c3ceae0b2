#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace confkit {

/// Cooperative cancellation handle. Copies share one flag; workers either
/// poll cancelled() or sleep through wait_for(), which returns early when the
/// controller fires cancel().
class CancelToken {
 public:
  CancelToken() : state_(std::make_shared<State>()) {}

  void cancel() {
    {
      std::lock_guard<std::mutex> lock(state_->mu);
      state_->cancelled = true;
    }
    state_->cv.notify_all();
  }

  bool cancelled() const {
    std::lock_guard<std::mutex> lock(state_->mu);
    return state_->cancelled;
  }

  /// Sleeps up to `d`, waking early on cancellation. Returns true iff
  /// cancelled by the time it returns.
  template <class Rep, class Period>
  bool wait_for(std::chrono::duration<Rep, Period> d) const {
    std::unique_lock<std::mutex> lock(state_->mu);
    state_->cv.wait_for(lock, d, [&] { return state_->cancelled; });
    return state_->cancelled;
  }

 private:
  struct State {
    mutable std::mutex mu;
    std::condition_variable cv;
    bool cancelled = false;
  };
  std::shared_ptr<State> state_;
};

/// Runs body(0..n-1) across at most max_in_flight worker threads. Indices are
/// claimed from a shared counter, so callers must key any output by index,
/// not by completion order. The first exception wins; remaining indices are
/// abandoned and the exception rethrows on the calling thread after join.
inline void parallel_for(size_t n, size_t max_in_flight,
                         const std::function<void(size_t)>& body) {
  if (n == 0) return;
  if (max_in_flight <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  size_t workers = std::min(max_in_flight, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace confkit
