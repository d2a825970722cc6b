/*
 * core.hpp - shared containers, errors, deterministic RNG, parallel_for
 *
 * Copyright (c) 2026 or3d authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace or3d {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDepth : Error { using Error::Error; };
struct InvalidDepthRange : Error { using Error::Error; };
struct DegenerateBaseline : Error { using Error::Error; };
struct ImageSizeMismatch : Error { using Error::Error; };
struct DisparityRangeTooLarge : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct IndivisibleFactor : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct TooFewQueries : Error { using Error::Error; };
struct InfeasiblePlacement : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

/// Dense row-major H x W grid. Pixel (x, y) is addressed as (col, row).
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {
        if (width < 0 || height < 0)
            throw ImageSizeMismatch("negative image dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return data_[static_cast<size_t>(y) * width_ + x];
    }
    const T& operator()(int x, int y) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return data_[static_cast<size_t>(y) * width_ + x];
    }

    bool contains(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_size(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

constexpr double kInvalidDisparity = -1.0;

/// Disparity in pixels plus a per-pixel validity flag. Invalid pixels hold
/// kInvalidDisparity so serialized maps stay unambiguous.
struct DisparityMap {
    Image<double> disparity;
    Image<uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int width, int height)
        : disparity(width, height, kInvalidDisparity), valid(width, height, 0) {}

    int width() const { return disparity.width(); }
    int height() const { return disparity.height(); }

    void set(int x, int y, double d) {
        disparity(x, y) = d;
        valid(x, y) = 1;
    }
    void invalidate(int x, int y) {
        disparity(x, y) = kInvalidDisparity;
        valid(x, y) = 0;
    }
    int valid_count() const {
        int n = 0;
        for (uint8_t v : valid.data()) n += v ? 1 : 0;
        return n;
    }
};

/// splitmix64: tiny, seedable, identical across platforms. All randomness in
/// the project flows through this so runs are bit-reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        assert(hi >= lo);
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    /// Standard normal via Box-Muller (one value per two draws).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Derive an independent stream; decorrelates sibling consumers.
    Rng fork(uint64_t stream) {
        Rng child(next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
        return child;
    }

private:
    uint64_t state_;
};

/// Worker cap from OR3D_THREADS (0 or unset = all cores).
inline int thread_count() {
    const char* env = std::getenv("OR3D_THREADS");
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (!env) return hw;
    int n = std::atoi(env);
    if (n <= 0) return hw;
    return std::min(n, hw);
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks; each
/// index is processed exactly once, so writes to disjoint outputs are
/// deterministic regardless of thread count.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
    int threads = thread_count();
    if (threads <= 1 || n < 2 * threads) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    int64_t block = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int64_t lo = t * block;
        int64_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

}  // namespace or3d
