#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rpf {

/// Malformed input data (bad rows, out-of-range ids, inconsistent shapes).
class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid model or run configuration.
class config_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values, zero intensities at observed events, guard trips.
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/**
 * Dense row-major 3-index array, used for the U x K x I and P x K x J
 * factor tensors.
 */
template <typename T> class Array3 {
  public:
    Array3() = default;
    Array3(std::size_t n0, std::size_t n1, std::size_t n2, T fill = T{})
        : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

    T &operator()(std::size_t a, std::size_t b, std::size_t c) {
        return data_[(a * n1_ + b) * n2_ + c];
    }
    const T &operator()(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * n1_ + b) * n2_ + c];
    }

    std::size_t dim0() const { return n0_; }
    std::size_t dim1() const { return n1_; }
    std::size_t dim2() const { return n2_; }
    std::size_t size() const { return data_.size(); }

    std::vector<T> &data() { return data_; }
    const std::vector<T> &data() const { return data_; }

    bool operator==(const Array3 &) const = default;

  private:
    std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
    std::vector<T> data_;
};

/**
 * Runs fn(begin, end) over contiguous chunks of [0, n) on up to `threads`
 * workers. Chunk boundaries depend only on n and threads, so any per-index
 * output is independent of scheduling.
 */
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)> &fn) {
    if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto &t : workers) t.join();
}

} // namespace rpf
