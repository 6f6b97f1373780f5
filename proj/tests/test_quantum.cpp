/**
 * @file test_quantum.cpp
 * @brief Oracle tables, Fourier spectra, measurement sampling, and query accounting.
 */

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "json.hpp"
#include "rfit/pipeline.hpp"
#include "rfit/quantum.hpp"
#include "test_utils.hpp"

using namespace rfit;
using rfit_test::bv_statevector_amplitudes;
using rfit_test::make_line_dataset;

namespace {

const std::vector<std::pair<double, double>> kSpike{{0, 0}, {1, 0}, {0.5, 10}};

/// f(z) = z_1 as an oracle table (dictator on the first point).
OracleTable dictator_table(int n) {
    OracleTable t;
    t.n = n;
    t.eps = 0.1;
    t.bits.resize(1ULL << n);
    for (std::uint64_t z = 0; z < t.table_size(); ++z) t.bits[z] = z & 1ULL;
    return t;
}

}  // namespace

TEST(OracleTable, AllInlierTableIsZero) {
    const Instance inst = generate({ModelKind::Line2D, 6, 6, 0.0, 10.0, 2});
    const OracleTable table = build_oracle_table(inst.dataset(), inst.eps);
    for (std::uint8_t b : table.bits) EXPECT_EQ(b, 0);
}

TEST(OracleTable, WorkedThreePointInstance) {
    const OracleTable table = build_oracle_table(make_line_dataset(kSpike), 0.1);
    for (std::uint64_t t = 0; t < 8; ++t) EXPECT_EQ(table.bits[t], t == 7 ? 1 : 0);
}

TEST(OracleTable, MonotoneOnEveryEdge) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Instance inst = generate({ModelKind::Line2D, 8, 5, 0.1, 10.0, seed});
        const OracleTable table = build_oracle_table(inst.dataset(), inst.eps);
        EXPECT_EQ(table.bits[0], 0);
        for (std::uint64_t t = 0; t < table.table_size(); ++t)
            for (int i = 0; i < 8; ++i)
                if (!(t & (1ULL << i))) EXPECT_LE(table.bits[t], table.bits[t | (1ULL << i)]);
    }
}

TEST(OracleTable, CapEnforced) {
    const Instance inst = generate({ModelKind::Line2D, 12, 8, 0.1, 10.0, 1});
    EXPECT_THROW(build_oracle_table(inst.dataset(), inst.eps, 10), UsageError);
}

TEST(Spectrum, ConstantFunctionIsDeltaAtZero) {
    OracleTable zeros;
    zeros.n = 4;
    zeros.eps = 0.1;
    zeros.bits.assign(16, 0);
    const FourierSpectrum s = fwht_spectrum(zeros);
    EXPECT_DOUBLE_EQ(s.coeffs[0], 1.0);
    for (std::uint64_t i = 1; i < 16; ++i) EXPECT_DOUBLE_EQ(s.coeffs[i], 0.0);
}

TEST(Spectrum, DictatorConcentratesOnItsCharacter) {
    const FourierSpectrum s = fwht_spectrum(dictator_table(4));
    EXPECT_DOUBLE_EQ(s.coeffs[1], 1.0);  // index e_1
    for (std::uint64_t i = 0; i < 16; ++i)
        if (i != 1) EXPECT_DOUBLE_EQ(s.coeffs[i], 0.0);
}

TEST(Spectrum, WorkedThreePointValues) {
    const FourierSpectrum s = fwht_spectrum(build_oracle_table(make_line_dataset(kSpike), 0.1));
    EXPECT_NEAR(s.coeffs[0], 0.75, 1e-12);
    for (std::uint64_t i = 1; i < 8; ++i) {
        const double sign = (std::popcount(i) % 2 == 0) ? -1.0 : 1.0;
        EXPECT_NEAR(s.coeffs[i], sign * 0.25, 1e-12);
    }
}

TEST(Spectrum, ParsevalHoldsOnRandomInstances) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = generate({ModelKind::Line2D, 9, 6, 0.1, 10.0, seed});
        const FourierSpectrum s =
            fwht_spectrum(build_oracle_table(inst.dataset(), inst.eps));
        EXPECT_NEAR(s.parseval_sum(), 1.0, 1e-12);
    }
}

// The spectrum must equal, amplitude for amplitude, a literal statevector run
// of the Hadamard-oracle-Hadamard circuit with the ancilla prepared in |1>.
TEST(Spectrum, MatchesLiteralCircuitSimulation) {
    std::vector<OracleTable> tables;
    tables.push_back(build_oracle_table(make_line_dataset(kSpike), 0.1));
    tables.push_back(dictator_table(5));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Instance inst = generate({ModelKind::Line2D, 8, 5, 0.1, 10.0, seed});
        tables.push_back(build_oracle_table(inst.dataset(), inst.eps));
    }
    for (const OracleTable& table : tables) {
        const FourierSpectrum s = fwht_spectrum(table);
        const std::vector<double> amps = bv_statevector_amplitudes(table);
        ASSERT_EQ(amps.size(), s.coeffs.size());
        for (std::size_t i = 0; i < amps.size(); ++i)
            EXPECT_NEAR(amps[i], s.coeffs[i], 1e-12);
    }
}

TEST(SpectrumInfluence, DictatorAndConstant) {
    const InfluenceVector dict = influence_from_spectrum(fwht_spectrum(dictator_table(4)));
    EXPECT_DOUBLE_EQ(dict.alphas[0], 1.0);
    for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(dict.alphas[static_cast<std::size_t>(i)], 0.0);

    OracleTable zeros;
    zeros.n = 3;
    zeros.eps = 0.1;
    zeros.bits.assign(8, 0);
    for (double a : influence_from_spectrum(fwht_spectrum(zeros)).alphas)
        EXPECT_DOUBLE_EQ(a, 0.0);
}

TEST(SpectrumInfluence, MatchesEnumerationOnWorkedInstance) {
    const OracleTable table = build_oracle_table(make_line_dataset(kSpike), 0.1);
    const InfluenceVector via_fourier = influence_from_spectrum(fwht_spectrum(table));
    const InfluenceVector via_flips = exact_influence_full(table);
    for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(via_fourier.alphas[static_cast<std::size_t>(i)],
                    via_flips.alphas[static_cast<std::size_t>(i)], 1e-12);
}

TEST(SpectrumInfluence, MatchesEnumerationOnRandomInstances) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = generate({ModelKind::Line2D, 11, 7, 0.1, 10.0, seed});
        const OracleTable table = build_oracle_table(inst.dataset(), inst.eps);
        const InfluenceVector a = influence_from_spectrum(fwht_spectrum(table));
        const InfluenceVector b = exact_influence_full(table);
        for (int i = 0; i < 11; ++i)
            EXPECT_NEAR(a.alphas[static_cast<std::size_t>(i)],
                        b.alphas[static_cast<std::size_t>(i)], 1e-9);
    }
}

TEST(SpectrumInfluence, ParsevalViolationRejected) {
    FourierSpectrum bad;
    bad.n = 2;
    bad.eps = 0.1;
    bad.coeffs = {0.5, 0.5, 0.5, 0.6};
    EXPECT_THROW(influence_from_spectrum(bad), NumericalError);
}

TEST(BvSample, DictatorIsAPointMass) {
    const auto [vec, record] = bv_sample(fwht_spectrum(dictator_table(4)), 32, 9);
    EXPECT_EQ(record.oracle_queries, 32u);
    EXPECT_DOUBLE_EQ(vec.alphas[0], 1.0);
    for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(vec.alphas[static_cast<std::size_t>(i)], 0.0);
    for (std::uint64_t s : record.samples) EXPECT_EQ(s, 1u);
}

TEST(BvSample, ConcentratesAroundExactInfluence) {
    const FourierSpectrum s = fwht_spectrum(build_oracle_table(make_line_dataset(kSpike), 0.1));
    const auto [vec, record] = bv_sample(s, 100000, 4);
    for (double a : vec.alphas) EXPECT_NEAR(a, 0.25, 0.01);
}

TEST(BvSample, DeterministicAndPrefixStable) {
    const FourierSpectrum s = fwht_spectrum(build_oracle_table(make_line_dataset(kSpike), 0.1));
    const auto [v1, r1] = bv_sample(s, 500, 77);
    const auto [v2, r2] = bv_sample(s, 500, 77);
    EXPECT_EQ(r1.samples, r2.samples);

    // draw m depends only on (seed, m): a longer run extends a shorter one
    const auto [v3, r3] = bv_sample(s, 200, 77);
    for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(r3.samples[i], r1.samples[i]);
}

TEST(BvSample, EmpiricalDistributionMatchesSpectrum) {
    const Instance inst = generate({ModelKind::Line2D, 6, 4, 0.1, 10.0, 23});
    const FourierSpectrum s = fwht_spectrum(build_oracle_table(inst.dataset(), inst.eps));
    const std::uint64_t m = 1000000;
    const auto [vec, record] = bv_sample(s, m, 13);

    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t sample : record.samples) ++counts[sample];

    double chi2 = 0.0;
    int dof = -1;
    for (std::uint64_t idx = 0; idx < s.coeffs.size(); ++idx) {
        const double p = s.coeffs[idx] * s.coeffs[idx];
        if (p <= 0.0) {
            EXPECT_EQ(counts.count(idx), 0u);
            continue;
        }
        const double expected = p * static_cast<double>(m);
        const double observed = static_cast<double>(counts[idx]);
        chi2 += (observed - expected) * (observed - expected) / expected;
        ++dof;
    }
    EXPECT_GT(rfit_test::chi_square_p_value(chi2, dof), 0.001);
}

TEST(QueryReport, WorkedRatios) {
    const Dataset tiny = make_line_dataset({{0.0, 0.0}});
    const auto [cv, trace1] = sample_influence_classical(tiny, 0.1, 1, 4, 1);
    MeasurementRecord quantum;
    quantum.oracle_queries = 4;
    const QueryReport r1 = query_report(trace1, quantum);
    EXPECT_EQ(r1.classical_total, 8u);  // N = 1: two queries per iteration
    EXPECT_DOUBLE_EQ(r1.ratio_cached, 2.0);
    EXPECT_DOUBLE_EQ(r1.ratio_naive, 1.0);

    const Dataset spike = make_line_dataset(kSpike);
    const auto [cv2, trace2] = sample_influence_classical(spike, 0.1, 3, 1, 1);
    MeasurementRecord one;
    one.oracle_queries = 1;
    const QueryReport r2 = query_report(trace2, one);
    EXPECT_EQ(r2.classical_total, 4u);
    EXPECT_EQ(r2.quantum_total, 1u);
    EXPECT_DOUBLE_EQ(r2.ratio_cached, 4.0);
}

TEST(Export, TableAndSpectrumFilesRoundTrip) {
    const OracleTable table = build_oracle_table(make_line_dataset(kSpike), 0.1);
    const FourierSpectrum spectrum = fwht_spectrum(table);
    const std::string base = ::testing::TempDir() + "rfit_export";

    export_table(table, base + "_table");
    export_spectrum(spectrum, base + "_spec");

    {
        std::ifstream bin(base + "_table.bin", std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(bin)),
                                std::istreambuf_iterator<char>());
        ASSERT_EQ(bytes.size(), table.bits.size());
        for (std::size_t i = 0; i < bytes.size(); ++i)
            EXPECT_EQ(static_cast<std::uint8_t>(bytes[i]), table.bits[i]);

        std::ifstream hdr(base + "_table.json");
        nlohmann::json j;
        hdr >> j;
        EXPECT_EQ(j["N"], 3);
        EXPECT_DOUBLE_EQ(j["eps"].get<double>(), 0.1);
    }
    {
        std::ifstream bin(base + "_spec.bin", std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(bin)),
                                std::istreambuf_iterator<char>());
        ASSERT_EQ(bytes.size(), spectrum.coeffs.size() * sizeof(double));
        std::vector<double> back(spectrum.coeffs.size());
        std::memcpy(back.data(), bytes.data(), bytes.size());
        EXPECT_EQ(back, spectrum.coeffs);

        std::ifstream hdr(base + "_spec.json");
        nlohmann::json j;
        hdr >> j;
        EXPECT_EQ(j["N"], 3);
        EXPECT_EQ(j["norm"], "2^-N");
    }
}

// Each measured bit is a Bernoulli draw of the exact influence, so the same
// concentration bound as the classical sampler applies to the estimates.
TEST(BvSample, HoeffdingBoundHolds) {
    const Instance inst = generate({ModelKind::Line2D, 10, 7, 0.1, 10.0, 29});
    const OracleTable table = build_oracle_table(inst.dataset(), inst.eps);
    const FourierSpectrum s = fwht_spectrum(table);
    const InfluenceVector truth = influence_from_spectrum(s);

    for (std::uint64_t m : {200ull, 1600ull}) {
        int pass = 0;
        const int trials = 40;
        for (int t = 0; t < trials; ++t) {
            const auto [est, record] = bv_sample(s, m, 500 + static_cast<std::uint64_t>(t));
            pass += within_delta_fraction(est, truth, 0.05) >= hoeffding_bound(m, 0.05);
        }
        EXPECT_GE(pass, trials * 9 / 10) << "m = " << m;
    }
}
