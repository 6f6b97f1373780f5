/**
 * @file oracle_table.hpp
 * @brief Full truth table of the feasibility test over the 2^N subset lattice.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "rfit/minimax.hpp"

namespace rfit {

inline constexpr int kDefaultExactCap = 20;

/**
 * Truth table of f over all 2^N subsets. Index bit i corresponds to data
 * point i (bit 0 = first point). The table is monotone (adding points never
 * turns an infeasible subset feasible) and entry 0 (the empty set) is 0.
 */
struct OracleTable {
    int n = 0;
    double eps = 0.0;
    std::vector<std::uint8_t> bits;

    // build cost metadata
    std::uint64_t solver_calls = 0;  ///< minimax solves actually performed
    std::uint64_t pruned = 0;        ///< entries settled by monotonicity alone

    std::uint8_t operator[](std::uint64_t t) const { return bits[t]; }
    std::uint64_t table_size() const { return 1ULL << n; }
};

/**
 * Builds the table level-by-level from the empty set upward. A mask with any
 * infeasible immediate subset is infeasible without a solve, so solver work
 * concentrates on the feasibility boundary. Throws UsageError when N exceeds
 * n_cap.
 */
OracleTable build_oracle_table(const Dataset& data, double eps, int n_cap = kDefaultExactCap);

}  // namespace rfit
