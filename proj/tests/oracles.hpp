// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written in the most naive way possible —
// different algorithms from the production code — so agreement is evidence.
#pragma once

#include <fragnorm/geometry.hpp>
#include <fragnorm/words.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

// Free reduction by repeated full rescans: delete the first adjacent
// inverse pair found, restart from scratch, until no pair remains. The
// `shuffle_order` variant deletes a uniformly random cancellable pair
// instead, to exercise confluence (the result must not depend on order).
inline std::vector<int32_t> brute_reduce(std::vector<int32_t> w) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i + 1 < w.size(); ++i) {
            if (w[i] == -w[i + 1]) {
                w.erase(w.begin() + i, w.begin() + i + 2);
                changed = true;
                break;
            }
        }
    }
    return w;
}

inline std::vector<int32_t> brute_reduce_random_order(std::vector<int32_t> w,
                                                      std::mt19937& rng) {
    while (true) {
        std::vector<size_t> sites;
        for (size_t i = 0; i + 1 < w.size(); ++i)
            if (w[i] == -w[i + 1]) sites.push_back(i);
        if (sites.empty()) return w;
        size_t pick = sites[std::uniform_int_distribution<size_t>(0, sites.size() - 1)(rng)];
        w.erase(w.begin() + pick, w.begin() + pick + 2);
    }
}

// Naive overlapping substring count via direct double loop (no std::equal,
// no early exits beyond the obvious).
inline int64_t naive_count(const std::vector<int32_t>& pattern,
                           const std::vector<int32_t>& text) {
    if (pattern.empty() || text.size() < pattern.size()) return 0;
    int64_t c = 0;
    for (size_t i = 0; i + pattern.size() <= text.size(); ++i) {
        bool ok = true;
        for (size_t j = 0; j < pattern.size(); ++j)
            if (text[i + j] != pattern[j]) { ok = false; break; }
        if (ok) ++c;
    }
    return c;
}

// Random reduced word of exactly the requested length.
inline fragnorm::ReducedWord random_reduced_word(int rank, int length,
                                                 std::mt19937& rng) {
    std::vector<int32_t> letters;
    std::uniform_int_distribution<int> gen(1, rank);
    std::bernoulli_distribution sign(0.5);
    while (int(letters.size()) < length) {
        int32_t l = gen(rng) * (sign(rng) ? 1 : -1);
        if (!letters.empty() && letters.back() == -l) continue;
        letters.push_back(l);
    }
    return fragnorm::ReducedWord::reduce(rank, letters);
}

// Total winding angle (in turns) of a closed polyline around a point,
// accumulated edge by edge with atan2 increments. For a genuinely closed
// loop avoiding the point this is an integer up to floating-point noise.
inline double winding_turns(const std::vector<fragnorm::Vec2>& poly,
                            fragnorm::Vec2 center) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        fragnorm::Vec2 u = poly[i] - center;
        fragnorm::Vec2 v = poly[i + 1] - center;
        total += std::atan2(fragnorm::cross(u, v), fragnorm::dot(u, v));
    }
    return total / fragnorm::kTau;
}

// Sum of exponents of generator `idx` (1-based) in a word — the image in
// the abelianization, which for loop words must match winding numbers.
inline int64_t exponent_sum(const fragnorm::ReducedWord& w, int idx) {
    int64_t s = 0;
    for (int32_t l : w.letters()) {
        if (l == idx) ++s;
        if (l == -idx) --s;
    }
    return s;
}

} // namespace oracles
