#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace imprecise::detail {

/// Prefix-sum counter over ranks 0..n-1.
class FenwickCount {
public:
    explicit FenwickCount(std::size_t n) : tree_(n + 1, 0) {}

    void add(std::size_t rank, long delta = 1) {
        for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    /// Sum over ranks [0, rank_end).
    long prefix(std::size_t rank_end) const {
        long s = 0;
        for (std::size_t i = std::min(rank_end, tree_.size() - 1); i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

private:
    std::vector<long> tree_;
};

/// Prefix-maximum over ranks 0..n-1; values only grow.
template <typename T>
class FenwickMax {
public:
    FenwickMax(std::size_t n, T floor) : tree_(n + 1, floor), floor_(floor) {}

    void raise(std::size_t rank, T value) {
        for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] = std::max(tree_[i], value);
    }

    /// Max over ranks [0, rank_end).
    T prefix(std::size_t rank_end) const {
        T m = floor_;
        for (std::size_t i = std::min(rank_end, tree_.size() - 1); i > 0; i -= i & (~i + 1)) m = std::max(m, tree_[i]);
        return m;
    }

private:
    std::vector<T> tree_;
    T floor_;
};

/// Sorted unique coordinates with rank lookups.
class Compressor {
public:
    explicit Compressor(std::vector<double> values) : values_(std::move(values)) {
        std::sort(values_.begin(), values_.end());
        values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
    }

    std::size_t size() const { return values_.size(); }

    /// Number of stored values < x.
    std::size_t count_less(double x) const {
        return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), x) - values_.begin());
    }
    /// Number of stored values <= x.
    std::size_t count_less_equal(double x) const {
        return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), x) - values_.begin());
    }
    /// Rank of a stored value.
    std::size_t rank(double x) const { return count_less(x); }

private:
    std::vector<double> values_;
};

}  // namespace imprecise::detail
