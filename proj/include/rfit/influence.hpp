/**
 * @file influence.hpp
 * @brief Per-point influence: exact lattice enumeration and the classical k-subset sampler.
 *
 * The influence of point i is the probability that flipping i's membership in
 * a uniformly random subset changes the subset's feasibility. High influence
 * marks outliers.
 */

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rfit/minimax.hpp"
#include "rfit/oracle_table.hpp"

namespace rfit {

enum class InfluenceMethod { ExactFull, ExactKSubset, ClassicalSampled, QuantumSampled };

const char* influence_method_name(InfluenceMethod method);

struct InfluenceVector {
    std::vector<double> alphas;  ///< per-point influence in [0, 1]
    InfluenceMethod method = InfluenceMethod::ExactFull;
    double eps = 0.0;
    std::uint64_t iterations = 0;  ///< M for sampled methods; sample-space size for ExactKSubset
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(alphas.size()); }
};

/// Per-iteration record of the classical sampler.
struct EstimatorTrace {
    std::vector<SubsetMask> masks;                      ///< z drawn at each iteration
    std::vector<std::vector<std::uint8_t>> indicators;  ///< X_i per iteration
    std::uint64_t oracle_queries = 0;                   ///< logical f evaluations: M * (N + 1)
};

/**
 * Exact influence over all 2^N subsets: alpha_i = 2^{-N} * |{z : f(z ^ e_i) != f(z)}|.
 * Builds a monotone-pruned oracle table internally; N must not exceed n_cap.
 */
InfluenceVector exact_influence_full(const Dataset& data, double eps,
                                     int n_cap = kDefaultExactCap);

/// Same flip counting over an already-built table (no further solves).
InfluenceVector exact_influence_full(const OracleTable& table);

/**
 * Expectation of the sampled estimator over its own sample space: the average
 * of the per-point flip indicator over all C(N, k) k-subsets.
 */
InfluenceVector exact_influence_ksubset(const Dataset& data, double eps, int k);

struct ClassicalSampleOptions {
    int threads = 1;                  ///< iterations partitioned across threads; output is identical
    const OracleTable* table = nullptr;  ///< optional prebuilt table backing the oracle
};

/**
 * Classical sampling estimator: M iterations, each drawing a uniform k-subset
 * z, evaluating f(z) once, and comparing f(z ^ e_i) for every point. Exactly
 * N + 1 logical oracle queries per iteration (the base evaluation is cached
 * across the inner loop). Iteration m uses the derived stream seed
 * mix(seed, m), so results do not depend on scheduling.
 */
std::pair<InfluenceVector, EstimatorTrace> sample_influence_classical(
    const Dataset& data, double eps, int k, std::uint64_t m_iters, std::uint64_t seed,
    const ClassicalSampleOptions& opt = {});

/// Lower bound on Pr(|estimate - truth| < delta) after m_iters samples, clamped to [0, 1].
double hoeffding_bound(std::uint64_t m_iters, double delta);

/// Fraction of points whose estimate lies within delta of the reference.
double within_delta_fraction(const InfluenceVector& est, const InfluenceVector& exact,
                             double delta);

/// Divides by the maximum entry; an all-zero vector is returned unchanged.
InfluenceVector normalize(const InfluenceVector& raw);

}  // namespace rfit
