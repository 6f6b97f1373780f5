/**
 * @file quantum.cpp
 * @brief Fourier spectrum of the feasibility oracle and measurement sampling.
 */

#include "rfit/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rfit {

double FourierSpectrum::parseval_sum() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return s;
}

FourierSpectrum fwht_spectrum(const OracleTable& table) {
    const std::uint64_t size = table.table_size();
    FourierSpectrum spectrum;
    spectrum.n = table.n;
    spectrum.eps = table.eps;
    spectrum.coeffs.resize(size);
    for (std::uint64_t t = 0; t < size; ++t)
        spectrum.coeffs[t] = table.bits[t] ? -1.0 : 1.0;

    // in-place butterfly
    for (std::uint64_t len = 1; len < size; len <<= 1) {
        for (std::uint64_t block = 0; block < size; block += len << 1) {
            for (std::uint64_t j = block; j < block + len; ++j) {
                const double a = spectrum.coeffs[j];
                const double b = spectrum.coeffs[j + len];
                spectrum.coeffs[j] = a + b;
                spectrum.coeffs[j + len] = a - b;
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(size);
    for (double& c : spectrum.coeffs) c *= scale;
    return spectrum;
}

InfluenceVector influence_from_spectrum(const FourierSpectrum& spectrum) {
    const double parseval = spectrum.parseval_sum();
    if (std::abs(parseval - 1.0) > 1e-9)
        throw NumericalError("spectrum violates the unit sum-of-squares identity: got " +
                             std::to_string(parseval));

    InfluenceVector out;
    out.method = InfluenceMethod::ExactFull;
    out.eps = spectrum.eps;
    out.alphas.assign(static_cast<std::size_t>(spectrum.n), 0.0);
    const std::uint64_t size = spectrum.coeffs.size();
    for (std::uint64_t s = 0; s < size; ++s) {
        const double p = spectrum.coeffs[s] * spectrum.coeffs[s];
        std::uint64_t rest = s;
        while (rest) {
            const int i = std::countr_zero(rest);
            out.alphas[static_cast<std::size_t>(i)] += p;
            rest &= rest - 1;
        }
    }
    return out;
}

std::pair<InfluenceVector, MeasurementRecord> bv_sample(const FourierSpectrum& spectrum,
                                                        std::uint64_t m_iters,
                                                        std::uint64_t seed) {
    if (m_iters < 1) throw UsageError("measurement sampling needs at least one run");

    // cumulative distribution over the support of I(s)^2
    std::vector<std::uint64_t> support;
    std::vector<double> cum;
    double acc = 0.0;
    for (std::uint64_t s = 0; s < spectrum.coeffs.size(); ++s) {
        const double p = spectrum.coeffs[s] * spectrum.coeffs[s];
        if (p > 0.0) {
            acc += p;
            support.push_back(s);
            cum.push_back(acc);
        }
    }
    if (support.empty()) throw NumericalError("spectrum has no probability mass");
    cum.back() = std::max(cum.back(), 1.0);  // absorb rounding in the final bin

    MeasurementRecord record;
    record.seed = seed;
    record.oracle_queries = m_iters;  // one logical oracle invocation per run
    record.samples.resize(m_iters);

    const int n = spectrum.n;
    std::vector<std::uint64_t> bit_counts(static_cast<std::size_t>(n), 0);
    for (std::uint64_t m = 0; m < m_iters; ++m) {
        const double u = SplitMix64::derive(seed, m).next_double();
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const std::size_t pos = std::min(static_cast<std::size_t>(it - cum.begin()),
                                         support.size() - 1);
        const std::uint64_t s = support[pos];
        record.samples[m] = s;
        std::uint64_t rest = s;
        while (rest) {
            ++bit_counts[static_cast<std::size_t>(std::countr_zero(rest))];
            rest &= rest - 1;
        }
    }

    InfluenceVector out;
    out.method = InfluenceMethod::QuantumSampled;
    out.eps = spectrum.eps;
    out.iterations = m_iters;
    out.seed = seed;
    out.alphas.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.alphas[static_cast<std::size_t>(i)] =
            static_cast<double>(bit_counts[static_cast<std::size_t>(i)]) /
            static_cast<double>(m_iters);
    return {std::move(out), std::move(record)};
}

QueryReport query_report(const EstimatorTrace& classical, const MeasurementRecord& quantum) {
    QueryReport report;
    report.classical_iterations = classical.masks.size();
    report.quantum_iterations = quantum.oracle_queries;
    report.n = classical.masks.empty() ? 0 : classical.masks.front().size();
    report.classical_total = classical.oracle_queries;
    report.quantum_total = quantum.oracle_queries;
    report.classical_per_iteration =
        report.classical_iterations
            ? static_cast<double>(report.classical_total) /
                  static_cast<double>(report.classical_iterations)
            : 0.0;
    report.quantum_per_iteration = 1.0;
    if (report.quantum_total) {
        report.ratio_cached = static_cast<double>(report.classical_total) /
                              static_cast<double>(report.quantum_total);
        // naive accounting charges N per iteration instead of N + 1
        report.ratio_naive =
            static_cast<double>(report.classical_total - report.classical_iterations) /
            static_cast<double>(report.quantum_total);
    }
    return report;
}

std::string QueryReport::to_string() const {
    std::ostringstream os;
    os << "logical oracle queries (N = " << n << ")\n"
       << "  classical: " << classical_total << " total, " << classical_per_iteration
       << " per iteration over " << classical_iterations << " iterations\n"
       << "  quantum:   " << quantum_total << " total, 1 per iteration over "
       << quantum_iterations << " iterations\n"
       << "  speed-up ratio (cached base evaluation, (N+1)M/M): " << ratio_cached << "\n"
       << "  speed-up ratio (NM/M convention):                  " << ratio_naive << "\n";
    return os.str();
}

namespace {

void write_binary(const std::string& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    out << text;
}

}  // namespace

void export_table(const OracleTable& table, const std::string& base_path) {
    write_binary(base_path + ".bin", table.bits.data(), table.bits.size());
    nlohmann::ordered_json header;
    header["N"] = table.n;
    header["eps"] = table.eps;
    write_text(base_path + ".json", header.dump(2) + "\n");
}

void export_spectrum(const FourierSpectrum& spectrum, const std::string& base_path) {
    write_binary(base_path + ".bin", spectrum.coeffs.data(),
                 spectrum.coeffs.size() * sizeof(double));
    nlohmann::ordered_json header;
    header["N"] = spectrum.n;
    header["eps"] = spectrum.eps;
    header["norm"] = "2^-N";
    write_text(base_path + ".json", header.dump(2) + "\n");
}

}  // namespace rfit
