/**
 * @file quantum.hpp
 * @brief Simulated Bernstein-Vazirani influence estimator.
 *
 * The Hadamard-oracle-Hadamard circuit leaves the top register in the state
 * sum_s I(s) |s>, where I(s) = 2^{-N} sum_t (-1)^{f(t) + s.t} is the Fourier
 * spectrum of (-1)^f. The simulation computes that spectrum directly with a
 * fast Walsh-Hadamard transform, which is amplitude-for-amplitude identical
 * to running the circuit; measurements are then sampled from I(s)^2. The
 * ancilla qubit factors out of the top register and is not materialized.
 *
 * Influences are recovered either exactly (alpha_i = sum over masks with bit
 * i set of I(s)^2) or by averaging M measured bitstrings, one logical oracle
 * invocation each.
 */

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rfit/influence.hpp"
#include "rfit/oracle_table.hpp"

namespace rfit {

/// Normalized spectrum of (-1)^f; squares sum to 1.
struct FourierSpectrum {
    int n = 0;
    double eps = 0.0;
    std::vector<double> coeffs;  ///< 2^n entries, index s, bit i = point i

    double parseval_sum() const;
};

/// In-place fast Walsh-Hadamard transform of the sign table, O(N 2^N).
FourierSpectrum fwht_spectrum(const OracleTable& table);

/**
 * alpha_i = sum over s with bit i set of coeffs[s]^2. Throws NumericalError
 * when the spectrum violates the unit-sum-of-squares identity beyond 1e-9.
 */
InfluenceVector influence_from_spectrum(const FourierSpectrum& spectrum);

/// M measured bitstrings; one logical oracle query per measurement.
struct MeasurementRecord {
    std::vector<std::uint64_t> samples;
    std::uint64_t oracle_queries = 0;
    std::uint64_t seed = 0;
};

/**
 * Draws M bitstrings with probability coeffs[s]^2 (cumulative table, binary
 * search, ties toward the lower index) and averages bit i over the draws.
 * Draw m uses the derived stream mix(seed, m), so any batch partitioning
 * reproduces the same record.
 */
std::pair<InfluenceVector, MeasurementRecord> bv_sample(const FourierSpectrum& spectrum,
                                                        std::uint64_t m_iters,
                                                        std::uint64_t seed);

/// Side-by-side logical oracle query accounting for the two estimators.
struct QueryReport {
    int n = 0;
    std::uint64_t classical_iterations = 0;
    std::uint64_t quantum_iterations = 0;
    std::uint64_t classical_total = 0;       ///< M * (N + 1)
    std::uint64_t quantum_total = 0;         ///< M
    double classical_per_iteration = 0.0;    ///< N + 1
    double quantum_per_iteration = 1.0;
    double ratio_cached = 0.0;  ///< (N+1)M / M accounting (base evaluation cached)
    double ratio_naive = 0.0;   ///< NM / M accounting (two calls per comparison, one cached away)

    std::string to_string() const;
};

QueryReport query_report(const EstimatorTrace& classical, const MeasurementRecord& quantum);

/// Writes <base>.bin (uint8 per entry) and <base>.json header {"N", "eps"}.
void export_table(const OracleTable& table, const std::string& base_path);

/// Writes <base>.bin (little-endian float64) and <base>.json header {"N", "eps", "norm"}.
void export_spectrum(const FourierSpectrum& spectrum, const std::string& base_path);

}  // namespace rfit
