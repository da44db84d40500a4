#pragma once
#include <cstddef>
#include <vector>

namespace volcorr {

// Pairwise (cascade) summation. Association depends only on element order,
// so sums over preallocated slots are identical for any upstream thread count.
template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
    if (n == 0) return T(0);
    if (n <= 8) {
        T s = data[0];
        for (std::size_t i = 1; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(data, h) + pairwise_sum(data + h, n - h);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum(v.data(), v.size());
}

// Kahan compensated accumulator for long sequential sums.
template <typename T>
struct KahanSum {
    T sum = T(0);
    T comp = T(0);
    void add(T x) {
        T y = x - comp;
        T t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    T value() const { return sum; }
};

}  // namespace volcorr
