/**
 * @file influence.cpp
 * @brief Exact influence by lattice enumeration and the classical k-subset sampler.
 */

#include "rfit/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace rfit {

namespace {

/**
 * Feasibility oracle with logical query accounting. The logical counter
 * advances once per f evaluation regardless of how the bit was obtained;
 * monotone shortcuts and memoization only reduce solver work.
 */
class MaskOracle {
public:
    MaskOracle(const Dataset& data, double eps, const OracleTable* table)
        : data_(data), eps_(eps), table_(table), index_ok_(data.size() <= 63) {}

    int eval(const SubsetMask& z) {
        ++logical_;
        return raw(z);
    }

    /// f(z ^ e_i) given f(z); monotonicity settles half the flips without a solve.
    int eval_flip(const SubsetMask& z, int f_z, int i) {
        ++logical_;
        if (z.test(i)) {
            if (f_z == 0) return 0;  // subsets of a consensus set stay feasible
        } else {
            if (f_z == 1) return 1;  // supersets of an infeasible set stay infeasible
        }
        return raw(z.flipped(i));
    }

    std::uint64_t logical_queries() const { return logical_; }

private:
    int raw(const SubsetMask& z) {
        if (table_ && index_ok_) return (*table_)[z.to_bits()];
        if (index_ok_) {
            const std::uint64_t key = z.to_bits();
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
            const int bit = f_test(data_, z, eps_);
            memo_.emplace(key, bit);
            return bit;
        }
        return f_test(data_, z, eps_);
    }

    const Dataset& data_;
    double eps_;
    const OracleTable* table_;
    bool index_ok_;
    std::unordered_map<std::uint64_t, int> memo_;
    std::uint64_t logical_ = 0;
};

void run_sampler_range(const Dataset& data, double eps, int k, std::uint64_t seed,
                       std::uint64_t m_begin, std::uint64_t m_end,
                       const ClassicalSampleOptions& opt, EstimatorTrace& trace,
                       std::uint64_t& logical_out) {
    const int n = data.size();
    MaskOracle oracle(data, eps, opt.table);
    for (std::uint64_t m = m_begin; m < m_end; ++m) {
        SplitMix64 rng = SplitMix64::derive(seed, m);
        const SubsetMask z = sample_k_subset(n, k, rng);
        const int f_z = oracle.eval(z);
        std::vector<std::uint8_t>& row = trace.indicators[m];
        row.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            row[static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>(oracle.eval_flip(z, f_z, i) != f_z);
        trace.masks[m] = z;
    }
    logical_out = oracle.logical_queries();
}

}  // namespace

const char* influence_method_name(InfluenceMethod method) {
    switch (method) {
        case InfluenceMethod::ExactFull: return "exact-full";
        case InfluenceMethod::ExactKSubset: return "exact-k-subset";
        case InfluenceMethod::ClassicalSampled: return "classical-sampled";
        case InfluenceMethod::QuantumSampled: return "quantum-sampled";
    }
    return "unknown";
}

InfluenceVector exact_influence_full(const Dataset& data, double eps, int n_cap) {
    return exact_influence_full(build_oracle_table(data, eps, n_cap));
}

InfluenceVector exact_influence_full(const OracleTable& table) {
    const int n = table.n;
    const std::uint64_t size = table.table_size();
    InfluenceVector out;
    out.method = InfluenceMethod::ExactFull;
    out.eps = table.eps;
    out.alphas.assign(static_cast<std::size_t>(n), 0.0);

    // each disagreeing flip pair contributes both of its endpoints to the 2^N count
    for (int i = 0; i < n; ++i) {
        const std::uint64_t bit = 1ULL << i;
        std::uint64_t disagreements = 0;
        for (std::uint64_t z = 0; z < size; ++z) {
            if (z & bit) continue;
            disagreements += table.bits[z] != table.bits[z | bit];
        }
        out.alphas[static_cast<std::size_t>(i)] =
            2.0 * static_cast<double>(disagreements) / static_cast<double>(size);
    }
    return out;
}

InfluenceVector exact_influence_ksubset(const Dataset& data, double eps, int k) {
    const int n = data.size();
    if (k < 0 || k > n) throw UsageError("k must satisfy 0 <= k <= N");

    MaskOracle oracle(data, eps, nullptr);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n), 0);
    std::uint64_t total = 0;

    std::vector<int> comb(static_cast<std::size_t>(k));
    std::iota(comb.begin(), comb.end(), 0);
    for (;;) {
        SubsetMask z(n);
        for (int i : comb) z.set(i);
        const int f_z = oracle.eval(z);
        for (int i = 0; i < n; ++i)
            counts[static_cast<std::size_t>(i)] += oracle.eval_flip(z, f_z, i) != f_z;
        ++total;

        int j = k - 1;
        while (j >= 0 && comb[static_cast<std::size_t>(j)] == n - k + j) --j;
        if (j < 0) break;
        ++comb[static_cast<std::size_t>(j)];
        for (int l = j + 1; l < k; ++l)
            comb[static_cast<std::size_t>(l)] = comb[static_cast<std::size_t>(l - 1)] + 1;
    }

    InfluenceVector out;
    out.method = InfluenceMethod::ExactKSubset;
    out.eps = eps;
    out.iterations = total;
    out.alphas.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.alphas[static_cast<std::size_t>(i)] =
            static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(total);
    return out;
}

std::pair<InfluenceVector, EstimatorTrace> sample_influence_classical(
    const Dataset& data, double eps, int k, std::uint64_t m_iters, std::uint64_t seed,
    const ClassicalSampleOptions& opt) {
    const int n = data.size();
    if (m_iters < 1) throw UsageError("the sampler needs at least one iteration");
    if (k < 1 || k > n) throw UsageError("k must satisfy 1 <= k <= N");

    EstimatorTrace trace;
    trace.masks.resize(m_iters);
    trace.indicators.resize(m_iters);

    const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(m_iters)));
    if (threads == 1) {
        std::uint64_t logical = 0;
        run_sampler_range(data, eps, k, seed, 0, m_iters, opt, trace, logical);
        trace.oracle_queries = logical;
    } else {
        std::vector<std::uint64_t> logicals(static_cast<std::size_t>(threads), 0);
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (m_iters + static_cast<std::uint64_t>(threads) - 1) /
                                    static_cast<std::uint64_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const std::uint64_t begin = static_cast<std::uint64_t>(t) * chunk;
            const std::uint64_t end = std::min(m_iters, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, t, begin, end] {
                run_sampler_range(data, eps, k, seed, begin, end, opt, trace,
                                  logicals[static_cast<std::size_t>(t)]);
            });
        }
        for (auto& th : pool) th.join();
        trace.oracle_queries = std::accumulate(logicals.begin(), logicals.end(),
                                               std::uint64_t{0});
    }

    InfluenceVector out;
    out.method = InfluenceMethod::ClassicalSampled;
    out.eps = eps;
    out.iterations = m_iters;
    out.seed = seed;
    out.alphas.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& row : trace.indicators)
        for (int i = 0; i < n; ++i)
            out.alphas[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
    for (double& a : out.alphas) a /= static_cast<double>(m_iters);
    return {std::move(out), std::move(trace)};
}

double hoeffding_bound(std::uint64_t m_iters, double delta) {
    const double raw = 1.0 - 2.0 * std::exp(-2.0 * static_cast<double>(m_iters) * delta * delta);
    return std::clamp(raw, 0.0, 1.0);
}

double within_delta_fraction(const InfluenceVector& est, const InfluenceVector& exact,
                             double delta) {
    if (est.size() != exact.size())
        throw UsageError("influence vectors compare different population sizes");
    if (est.size() == 0) return 1.0;
    int hits = 0;
    for (int i = 0; i < est.size(); ++i)
        hits += std::abs(est.alphas[static_cast<std::size_t>(i)] -
                         exact.alphas[static_cast<std::size_t>(i)]) < delta;
    return static_cast<double>(hits) / static_cast<double>(est.size());
}

InfluenceVector normalize(const InfluenceVector& raw) {
    InfluenceVector out = raw;
    const double top = out.alphas.empty()
                           ? 0.0
                           : *std::max_element(out.alphas.begin(), out.alphas.end());
    if (top > 0.0)
        for (double& a : out.alphas) a /= top;
    return out;
}

}  // namespace rfit
