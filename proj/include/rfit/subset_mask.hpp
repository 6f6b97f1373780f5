/**
 * @file subset_mask.hpp
 * @brief N-bit point-selection vector with flip/popcount operations.
 */

#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <vector>

#include "rfit/errors.hpp"

namespace rfit {

/// Selection vector z over N data points; bit i selects point i.
class SubsetMask {
public:
    SubsetMask() = default;

    explicit SubsetMask(int n) : n_(n), words_(static_cast<std::size_t>((n + 63) / 64), 0) {}

    /// Mask over n <= 64 points from the low bits of an integer.
    static SubsetMask from_bits(std::uint64_t bits, int n) {
        if (n > 64) throw UsageError("from_bits supports at most 64 points");
        SubsetMask m(n);
        if (n > 0) m.words_[0] = (n == 64) ? bits : (bits & ((1ULL << n) - 1));
        return m;
    }

    static SubsetMask full(int n) {
        SubsetMask m(n);
        for (int i = 0; i < n; ++i) m.set(i);
        return m;
    }

    int size() const { return n_; }

    bool test(int i) const {
        assert(i >= 0 && i < n_);
        return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL;
    }

    void set(int i, bool value = true) {
        assert(i >= 0 && i < n_);
        const std::uint64_t bit = 1ULL << (i & 63);
        if (value)
            words_[static_cast<std::size_t>(i) >> 6] |= bit;
        else
            words_[static_cast<std::size_t>(i) >> 6] &= ~bit;
    }

    /// z ^ e_i (involution: flipping twice restores the mask).
    SubsetMask flipped(int i) const {
        assert(i >= 0 && i < n_);
        SubsetMask m = *this;
        m.words_[static_cast<std::size_t>(i) >> 6] ^= 1ULL << (i & 63);
        return m;
    }

    int popcount() const {
        int c = 0;
        for (std::uint64_t w : words_) c += std::popcount(w);
        return c;
    }

    bool none() const { return popcount() == 0; }

    /// Low-bit integer encoding; valid for n <= 64.
    std::uint64_t to_bits() const {
        if (n_ > 64) throw UsageError("to_bits supports at most 64 points");
        return words_.empty() ? 0 : words_[0];
    }

    /// Selected indices in ascending order.
    std::vector<int> selected() const {
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(popcount()));
        for (int i = 0; i < n_; ++i)
            if (test(i)) idx.push_back(i);
        return idx;
    }

    /// Bitwise z <= other (subset order on the lattice).
    bool is_subset_of(const SubsetMask& other) const {
        assert(n_ == other.n_);
        for (std::size_t w = 0; w < words_.size(); ++w)
            if (words_[w] & ~other.words_[w]) return false;
        return true;
    }

    bool operator==(const SubsetMask&) const = default;

private:
    int n_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace rfit
