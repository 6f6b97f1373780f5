/**
 * @file pipeline.hpp
 * @brief Synthetic instance generation, instance/report I/O, and the two-step robust fit.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfit/influence.hpp"
#include "rfit/quantum.hpp"

namespace rfit {

struct GroundTruth {
    ParamVector x;
    std::vector<int> inlier_labels;  ///< 1 = inlier, 0 = outlier
};

struct GenerationParams {
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    double outlier_spread = 0.0;
    int inlier_count = 0;
};

struct Instance {
    ModelKind kind = ModelKind::Line2D;
    std::vector<DataPoint> points;
    double eps = 0.0;
    std::optional<GroundTruth> truth;
    std::optional<GenerationParams> generation;  ///< set for generated instances
    std::optional<std::string> source_path;      ///< set for ingested instances

    int size() const { return static_cast<int>(points.size()); }
    Dataset dataset() const { return Dataset(kind, points); }
};

/// Default inlier threshold per kind: line 0.3, triangulation 1 px, homography 4 px.
double default_eps(ModelKind kind);

struct InstanceConfig {
    ModelKind kind = ModelKind::Line2D;
    int n = 0;
    int inlier_count = 0;
    double noise_sigma = 0.1;
    double outlier_spread = 10.0;
    std::uint64_t seed = 1;
    double eps = 0.0;  ///< 0 selects the kind default
};

/**
 * Synthetic instance with ground truth. Inliers are noisy measurements of a
 * random model; outliers are uniform draws kept clear of the model so the
 * stored labels are meaningful. Degenerate draws are retried up to 100 times.
 */
Instance generate(const InstanceConfig& cfg);

/// Number of points with residual <= eps at x; points outside the positive-denominator region count as disagreeing.
int consensus(const Dataset& data, const ParamVector& x, double eps);

enum class EstimatorKind { Exact, Classical, Quantum };

EstimatorKind estimator_from_name(const std::string& name);
const char* estimator_name(EstimatorKind method);

struct FitOptions {
    EstimatorKind method = EstimatorKind::Exact;
    std::uint64_t m_iters = 5000;
    double gamma = 0.3;  ///< threshold on normalized influence, in (0, 1]
    std::uint64_t seed = 1;
    int n_cap = kDefaultExactCap;
};

struct FitReport {
    InfluenceVector influence;
    InfluenceVector influence_norm;
    std::vector<int> inlier_mask;  ///< 1 = retained (normalized influence <= gamma)
    ParamVector refit;
    int consensus_at_refit = 0;

    EstimatorKind method = EstimatorKind::Exact;
    std::uint64_t m_iters = 0;
    std::uint64_t seed = 0;
    double gamma = 0.3;
    std::uint64_t classical_queries = 0;  ///< logical oracle queries (classical estimator)
    std::uint64_t quantum_queries = 0;    ///< logical oracle queries (quantum estimator)
    std::uint64_t table_solver_calls = 0; ///< minimax solves spent building a truth table
    double elapsed_seconds = 0.0;
};

/**
 * Two-step robust fit: estimate influences, keep points whose normalized
 * influence is at most gamma, refit by least squares on the retained set,
 * and score consensus at the refit.
 */
FitReport robust_fit(const Instance& instance, const FitOptions& opt);

/// Parses an instance file; schema violations raise SchemaError naming the field.
Instance ingest(const std::string& path);

/// Writes the instance JSON; byte-identical for identical instances.
void emit_instance(const Instance& instance, const std::string& path);

/// Writes the fit report JSON (volatile timing excluded so reruns are byte-identical).
void emit_report(const FitReport& report, const Instance& instance, const std::string& path);

/// CSV columns: index, alpha, alpha_norm, label_pred, label_true (last column only with truth).
void write_influence_csv(const Instance& instance, const InfluenceVector& raw,
                         const InfluenceVector& norm, double gamma, const std::string& path);

/// Sorted normalized-influence CSV plus a gnuplot stub, written into out_dir.
void write_plot_files(const InfluenceVector& norm, const std::string& out_dir);

}  // namespace rfit
