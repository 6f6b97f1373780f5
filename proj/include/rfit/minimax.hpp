/**
 * @file minimax.hpp
 * @brief Minimax residual solver g(C) = min_x max_i r_i(x) and the Boolean feasibility test.
 *
 * Linear (line) residuals are solved exactly as a small Chebyshev minimax by
 * vertex enumeration of the epigraph LP. General fractional residuals are
 * solved by bisection on the residual level; each level's convex feasibility
 * subproblem min_x max_i (||A_i x + b_i|| - level * (c_i.x + d_i)) is handled
 * by projected subgradient descent with Polyak steps and deterministic
 * restarts.
 */

#pragma once

#include <vector>

#include "rfit/geometry.hpp"
#include "rfit/rng.hpp"
#include "rfit/subset_mask.hpp"

namespace rfit {

/// Immutable problem instance: model kind, points, precomputed residual forms.
class Dataset {
public:
    Dataset(ModelKind kind, std::vector<DataPoint> points);

    ModelKind kind() const { return kind_; }
    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<DataPoint>& points() const { return points_; }
    const std::vector<FractionalForm>& forms() const { return forms_; }
    const FractionalForm& form(int i) const { return forms_[static_cast<std::size_t>(i)]; }

private:
    ModelKind kind_;
    std::vector<DataPoint> points_;
    std::vector<FractionalForm> forms_;
};

enum class SolveStatus { Exact, Bisection, EmptySet };

struct MinimaxResult {
    double value = 0.0;      ///< g, within the bisection tolerance
    ParamVector witness;     ///< achieves max residual <= value + tol
    SolveStatus status = SolveStatus::EmptySet;
    int iterations = 0;      ///< bisection levels (0 for the exact path)
    bool warning = false;    ///< solver budget exhausted near a decision boundary
};

struct MinimaxOptions {
    double tol = 1e-6;         ///< bisection width tau_g
    double slack = 1e-8;       ///< feasibility slack sigma
    int subgrad_iters = 2000;  ///< subgradient budget per level, per restart
    int restarts = 3;
    double alpha_cap = 1e12;   ///< bracket-doubling cap before giving up
};

MinimaxResult solve_minimax(const std::vector<FractionalForm>& forms, double tol);
MinimaxResult solve_minimax(const std::vector<FractionalForm>& forms,
                            const MinimaxOptions& opt = {});

struct FeasibilityOutcome {
    int bit = 0;                      ///< 0 = consensus set (g <= eps), 1 = not
    double g = 0.0;
    bool boundary_ambiguous = false;  ///< |g - eps| within solver tolerance
    bool warning = false;
};

/// Feasibility test with diagnostics. Empty mask is feasible by convention.
FeasibilityOutcome f_test_ex(const Dataset& data, const SubsetMask& z, double eps,
                             const MinimaxOptions& opt = {});

/// Boolean feasibility test: 0 iff the selected subset fits within eps.
int f_test(const Dataset& data, const SubsetMask& z, double eps);

/// Uniformly random k-of-n mask via partial Fisher-Yates; deterministic given the generator state.
SubsetMask sample_k_subset(int n, int k, SplitMix64& rng);

}  // namespace rfit
