/**
 * @file oracle_table.cpp
 * @brief Monotone-pruned construction of the full feasibility truth table.
 */

#include "rfit/oracle_table.hpp"

#include <bit>
#include <string>

namespace rfit {

OracleTable build_oracle_table(const Dataset& data, double eps, int n_cap) {
    const int n = data.size();
    if (n > n_cap)
        throw UsageError("N = " + std::to_string(n) + " exceeds the exact enumeration cap (" +
                         std::to_string(n_cap) +
                         "); use the sampled estimator or raise the cap");
    if (n > 30) throw UsageError("exact enumeration over 2^N is not practical for N > 30");

    OracleTable table;
    table.n = n;
    table.eps = eps;
    const std::uint64_t size = 1ULL << n;
    table.bits.assign(size, 0);

    // bucket masks by popcount so every immediate subset is settled first
    std::vector<std::vector<std::uint32_t>> levels(static_cast<std::size_t>(n) + 1);
    for (std::uint64_t t = 0; t < size; ++t)
        levels[static_cast<std::size_t>(std::popcount(t))].push_back(
            static_cast<std::uint32_t>(t));

    for (int level = 1; level <= n; ++level) {
        for (std::uint32_t t : levels[static_cast<std::size_t>(level)]) {
            bool settled = false;
            for (std::uint32_t rest = t; rest; rest &= rest - 1) {
                const std::uint32_t without = t & ~(rest & (0u - rest));
                if (table.bits[without]) {  // an infeasible subset poisons every superset
                    table.bits[t] = 1;
                    ++table.pruned;
                    settled = true;
                    break;
                }
            }
            if (settled) continue;
            ++table.solver_calls;
            table.bits[t] = static_cast<std::uint8_t>(
                f_test(data, SubsetMask::from_bits(t, n), eps));
        }
    }
    return table;
}

}  // namespace rfit
