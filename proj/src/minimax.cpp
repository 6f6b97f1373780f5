/**
 * @file minimax.cpp
 * @brief Minimax residual solver: exact Chebyshev path for linear residuals,
 *        level bisection with subgradient feasibility for fractional ones.
 */

#include "rfit/minimax.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIterateCap = 1e8;  // projection ball for subgradient iterates

// ---------------------------------------------------------------------------
// Exact path: linear residuals |a_i . x + b_i| as an epigraph LP
// ---------------------------------------------------------------------------

/// Minimum-norm interpolant of a single linear residual (residual 0).
Vec interpolate_single(const FractionalForm& form) {
    const Vec a = form.A.row(0).transpose();
    return a * (-form.b(0) / a.squaredNorm());
}

struct LinearCandidate {
    double t = kInf;
    Vec x;
};

/**
 * Exact Chebyshev minimax for linear residuals by vertex enumeration of
 *   min t  s.t.  +-(a_i . x + b_i) <= t.
 * The optimum sits on d+1 tight constraints; every (d+1)-subset of the 2n
 * constraint rows is solved and checked for feasibility. Returns an empty
 * candidate if no feasible vertex exists (degenerate direction structure).
 */
LinearCandidate chebyshev_vertex_enumeration(const Mat& A, const Vec& b) {
    const int n = static_cast<int>(A.rows());
    const int d = static_cast<int>(A.cols());
    const int rows = 2 * n;
    const int pick = d + 1;

    Mat G(rows, pick);
    Vec h(rows);
    for (int i = 0; i < n; ++i) {
        G.row(2 * i).head(d) = A.row(i);
        G(2 * i, d) = -1.0;
        h(2 * i) = -b(i);
        G.row(2 * i + 1).head(d) = -A.row(i);
        G(2 * i + 1, d) = -1.0;
        h(2 * i + 1) = b(i);
    }
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    const double feas_tol = 1e-9 * scale;

    LinearCandidate best;
    std::vector<int> comb(static_cast<std::size_t>(pick));
    std::iota(comb.begin(), comb.end(), 0);

    Mat S(pick, pick);
    Vec hs(pick);
    for (;;) {
        for (int r = 0; r < pick; ++r) {
            S.row(r) = G.row(comb[static_cast<std::size_t>(r)]);
            hs(r) = h(comb[static_cast<std::size_t>(r)]);
        }
        Eigen::FullPivLU<Mat> lu(S);
        if (lu.isInvertible()) {
            const Vec y = lu.solve(hs);
            const double t = y(d);
            if (t > -feas_tol && t < best.t) {
                if (((G * y - h).array() <= feas_tol).all()) {
                    best.t = t;
                    best.x = y.head(d);
                }
            }
        }
        // next combination
        int k = pick - 1;
        while (k >= 0 && comb[static_cast<std::size_t>(k)] == rows - pick + k) --k;
        if (k < 0) break;
        ++comb[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < pick; ++j)
            comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Bisection path: general fractional residuals
// ---------------------------------------------------------------------------

/// h_alpha(x) = max_i (||A_i x + b_i|| - alpha (c_i . x + d_i)); index of the max in *argmax.
double level_objective(const std::vector<FractionalForm>& forms, double alpha, const Vec& x,
                       int* argmax) {
    double value = -kInf;
    int arg = 0;
    for (std::size_t i = 0; i < forms.size(); ++i) {
        const FractionalForm& f = forms[i];
        const double v = (f.A * x + f.b).norm() - alpha * (f.c.dot(x) + f.d0);
        if (v > value) {
            value = v;
            arg = static_cast<int>(i);
        }
    }
    if (argmax) *argmax = arg;
    return value;
}

Vec piece_gradient(const FractionalForm& f, double alpha, const Vec& x) {
    const Vec num = f.A * x + f.b;
    const double nn = num.norm();
    Vec grad = -alpha * f.c;
    if (nn > 0.0) grad += f.A.transpose() * (num / nn);
    return grad;
}

/// Linearization of the active piece at the point it was evaluated. Pieces
/// are convex, so the cut under-estimates the level objective everywhere.
struct Cut {
    Vec grad;
    Vec at;
    double value;
};

/**
 * Wolfe's minimum-norm-point algorithm over conv{points}. Exact (finite)
 * up to floating error, which matters here: a (near-)zero result certifies
 * delta-stationarity and lets infeasible levels terminate early.
 */
void min_norm_point(const std::vector<const Vec*>& points, Vec* out,
                    std::vector<double>* weights) {
    const int m = static_cast<int>(points.size());
    const int d = static_cast<int>(points[0]->size());
    int start = 0;
    double best_norm = points[0]->squaredNorm();
    for (int i = 1; i < m; ++i) {
        const double s = points[i]->squaredNorm();
        if (s < best_norm) {
            best_norm = s;
            start = i;
        }
    }
    std::vector<int> corral{start};
    std::vector<double> w{1.0};
    Vec x = *points[start];

    for (int major = 0; major < 4 * m + 16; ++major) {
        int pick = 0;
        double dot = kInf;
        for (int i = 0; i < m; ++i) {
            const double t = x.dot(*points[i]);
            if (t < dot) {
                dot = t;
                pick = i;
            }
        }
        if (dot >= x.squaredNorm() - 1e-14 * (1.0 + x.squaredNorm())) break;  // optimal
        bool already = false;
        for (int idx : corral) already = already || idx == pick;
        if (already) break;
        corral.push_back(pick);
        w.push_back(0.0);

        for (int minor = 0; minor < 4 * m + 16; ++minor) {
            const int k = static_cast<int>(corral.size());
            // affine minimizer over the corral: bordered Gram system
            Mat B = Mat::Zero(k + 1, k + 1);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    B(a, b) = points[static_cast<std::size_t>(corral[a])]->dot(
                        *points[static_cast<std::size_t>(corral[b])]);
            B.col(k).head(k).setOnes();
            B.row(k).head(k).setOnes();
            Vec rhs = Vec::Zero(k + 1);
            rhs(k) = 1.0;
            Eigen::FullPivLU<Mat> lu(B);
            if (!lu.isInvertible()) {  // affinely dependent corral: drop the newest
                corral.pop_back();
                w.pop_back();
                break;
            }
            const Vec v = lu.solve(rhs).head(k);
            if (v.minCoeff() > 1e-12) {
                w.assign(v.data(), v.data() + k);
                break;
            }
            double theta = 1.0;
            for (int i = 0; i < k; ++i)
                if (v(i) < 1e-12 && w[static_cast<std::size_t>(i)] > v(i))
                    theta = std::min(theta, w[static_cast<std::size_t>(i)] /
                                                (w[static_cast<std::size_t>(i)] - v(i)));
            for (int i = 0; i < k; ++i)
                w[static_cast<std::size_t>(i)] =
                    (1.0 - theta) * w[static_cast<std::size_t>(i)] + theta * v(i);
            for (int i = k - 1; i >= 0 && corral.size() > 1; --i) {
                if (w[static_cast<std::size_t>(i)] <= 1e-12) {
                    corral.erase(corral.begin() + i);
                    w.erase(w.begin() + i);
                }
            }
        }
        x = Vec::Zero(d);
        for (std::size_t i = 0; i < corral.size(); ++i)
            x += w[i] * *points[static_cast<std::size_t>(corral[i])];
    }

    *out = x;
    weights->assign(static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < corral.size(); ++i)
        (*weights)[static_cast<std::size_t>(corral[i])] = w[i];
}

/// Minimum-norm least-squares seed on the stacked numerators.
Vec least_squares_seed(const std::vector<FractionalForm>& forms, int d) {
    Eigen::Index rows = 0;
    for (const auto& f : forms) rows += f.A.rows();
    Mat A(rows, d);
    Vec b(rows);
    Eigen::Index at = 0;
    for (const auto& f : forms) {
        A.middleRows(at, f.A.rows()) = f.A;
        b.segment(at, f.b.size()) = -f.b;
        at += f.A.rows();
    }
    return A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

struct LevelOutcome {
    bool feasible = false;
    Vec x;
    double best = kInf;
    bool exhausted = false;            // full budget spent without a clear margin
    bool certified_infeasible = false; // aggregated-cut lower bound exceeded the slack
};

/**
 * Convex feasibility at one bisection level: projected subgradient descent
 * with Polyak-style steps from each deterministic seed. The search direction
 * aggregates recent subgradients (minimum-norm point of their convex hull,
 * with the bundle linearization errors folded into the step length), which
 * keeps the iteration moving along piecewise-smooth valleys where a raw
 * subgradient step zigzags. A vanishing aggregate certifies a lower bound on
 * the level objective, so clearly infeasible levels terminate early.
 */
LevelOutcome solve_level(const std::vector<FractionalForm>& forms, double alpha,
                         const std::vector<Vec>& seeds, const MinimaxOptions& opt) {
    LevelOutcome out;
    const double clear_margin = std::max(100.0 * opt.slack, 1e-5);
    const std::size_t bundle_cap =
        2 * static_cast<std::size_t>(forms[0].dim() + 1) + 4;
    int restarts_used = 0;

    // witnesses that sit on the degenerate region boundary are rejected
    const auto acceptable = [&forms](const Vec& xx) {
        for (const FractionalForm& f : forms)
            if (f.c.dot(xx) + f.d0 < 1e-9) return false;
        return true;
    };

    std::vector<Cut> bundle;
    std::vector<double> errors, weights;
    std::vector<const Vec*> grads;

    for (const Vec& seed : seeds) {
        if (restarts_used++ >= opt.restarts) break;
        Vec x = seed;
        int arg = 0;
        double fx = level_objective(forms, alpha, x, &arg);
        Vec grad = piece_gradient(forms[static_cast<std::size_t>(arg)], alpha, x);
        if (fx < out.best) {
            out.best = fx;
            out.x = x;
        }
        if (fx <= opt.slack && acceptable(x)) {
            out.feasible = true;
            out.x = x;
            return out;
        }

        int stall = 0;
        bool full_budget = true;
        for (int it = 0; it < opt.subgrad_iters; ++it) {
            bundle.push_back({grad, x, fx});
            if (bundle.size() > bundle_cap) bundle.erase(bundle.begin());

            // cuts under-estimate the objective everywhere; the error is the
            // gap at the current point (stale cuts never poison, only slow)
            errors.clear();
            const double error_cap = 2.0 * (std::abs(fx) + opt.slack) + 1e-6;
            for (std::size_t j = 0; j < bundle.size();) {
                const double lin =
                    bundle[j].value + bundle[j].grad.dot(x - bundle[j].at);
                const double e = fx - lin;
                if (e > error_cap) {
                    bundle.erase(bundle.begin() + static_cast<std::ptrdiff_t>(j));
                    continue;
                }
                errors.push_back(std::max(e, 0.0));
                ++j;
            }

            grads.clear();
            for (const Cut& cut : bundle) grads.push_back(&cut.grad);
            Vec dir;
            min_norm_point(grads, &dir, &weights);
            double ebar = 0.0;
            for (std::size_t j = 0; j < bundle.size(); ++j) ebar += weights[j] * errors[j];

            const double d2 = dir.squaredNorm();
            const double gap = fx - ebar + opt.slack;  // Polyak numerator toward -slack

            // aggregated cut: h(y) >= fx - ebar + dir.(y - x); a vanishing
            // direction therefore bounds the level minimum from below
            const double cert_radius = 1e4 * (1.0 + x.norm());
            if (fx - ebar - std::sqrt(d2) * cert_radius > opt.slack) {
                out.certified_infeasible = true;
                return out;
            }

            if (d2 < 1e-30 || gap <= 0.0) {
                // aggregate unusable; restart the bundle from the newest cut
                bundle.clear();
                const double g2 = grad.squaredNorm();
                if (g2 < 1e-30) break;  // flat piece: fx is the piece minimum
                x -= ((fx + opt.slack) / g2) * grad;
            } else {
                x -= (gap / d2) * dir;
            }
            const double xn = x.norm();
            if (xn > kIterateCap) x *= kIterateCap / xn;

            fx = level_objective(forms, alpha, x, &arg);
            grad = piece_gradient(forms[static_cast<std::size_t>(arg)], alpha, x);
            if (fx < out.best - 1e-15 * (1.0 + std::abs(out.best))) {
                out.best = fx;
                out.x = x;
                stall = 0;
            } else {
                ++stall;
            }
            if (fx <= opt.slack && acceptable(x)) {
                out.feasible = true;
                out.x = x;
                return out;
            }
            if (stall > 400 && out.best > clear_margin) {
                full_budget = false;
                break;  // far from feasibility and no longer improving
            }
        }
        out.exhausted = out.exhausted || full_budget;
    }
    out.exhausted = out.exhausted && out.best <= 1e-4;  // only flag near-boundary budget burns
    return out;
}

MinimaxResult bisection_fractional(const std::vector<FractionalForm>& forms,
                                   const MinimaxOptions& opt) {
    const int d = forms[0].dim();
    const Vec origin = Vec::Zero(d);
    const Vec ls = least_squares_seed(forms, d);

    MinimaxResult result;
    result.status = SolveStatus::Bisection;

    double lo = 0.0;
    double hi = 0.0;
    Vec witness;
    bool have_witness = false;

    double min_den = kInf;
    for (const auto& f : forms) min_den = std::min(min_den, f.c.dot(ls) + f.d0);
    if (min_den > 1e-9) {
        // the seed is interior, so its max residual brackets the optimum
        for (const auto& f : forms) hi = std::max(hi, residual(f, ls));
        witness = ls;
        have_witness = true;
        if (hi <= opt.tol) {
            result.value = hi;
            result.witness = ls;
            return result;
        }
        hi += 1e-12 * (1.0 + hi);
    } else {
        hi = 1.0;
        for (;;) {
            LevelOutcome lv = solve_level(forms, hi, {origin, ls}, opt);
            ++result.iterations;
            if (lv.feasible) {
                witness = lv.x;
                have_witness = true;
                break;
            }
            hi *= 2.0;
            if (hi > opt.alpha_cap)
                throw NumericalError(
                    "minimax bisection could not bracket the optimum; residuals appear "
                    "unbounded on the positive-denominator region");
        }
    }

    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        // previous level's witness first: warm starts settle most levels instantly
        std::vector<Vec> seeds;
        if (have_witness) seeds.push_back(witness);
        seeds.push_back(ls);
        seeds.push_back(origin);
        LevelOutcome lv = solve_level(forms, mid, seeds, opt);
        ++result.iterations;
        if (lv.feasible) {
            hi = mid;
            witness = lv.x;
            have_witness = true;
        } else {
            lo = mid;
            if (lv.exhausted) result.warning = true;
        }
        if (result.iterations > 200) break;  // safety net; tol reached long before
    }

    result.value = hi;
    result.witness = witness;
    if (have_witness) {
        double max_res = 0.0;
        for (const auto& f : forms) {
            const double den = f.c.dot(witness) + f.d0;
            if (den < 1e-9) {
                result.warning = true;  // degenerate witness on the region boundary
                max_res = kInf;
                break;
            }
            max_res = std::max(max_res, (f.A * witness + f.b).norm() / den);
        }
        if (max_res > result.value + opt.tol) result.warning = true;
    }
    return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset::Dataset(ModelKind kind, std::vector<DataPoint> points)
    : kind_(kind), points_(std::move(points)) {
    forms_.reserve(points_.size());
    for (const auto& p : points_) forms_.push_back(to_fractional_form(p, kind_));
}

// ---------------------------------------------------------------------------
// solve_minimax
// ---------------------------------------------------------------------------

MinimaxResult solve_minimax(const std::vector<FractionalForm>& forms, double tol) {
    MinimaxOptions opt;
    opt.tol = tol;
    return solve_minimax(forms, opt);
}

MinimaxResult solve_minimax(const std::vector<FractionalForm>& forms, const MinimaxOptions& opt) {
    if (opt.tol <= 0.0) throw UsageError("minimax tolerance must be positive");
    MinimaxResult result;
    if (forms.empty()) {
        result.status = SolveStatus::EmptySet;  // g over the empty set is 0 by convention
        result.witness = Vec();
        return result;
    }
    const int d = forms[0].dim();
    bool all_linear = true;
    for (const auto& f : forms) {
        if (f.dim() != d) throw UsageError("residual forms have mixed parameter dimensions");
        if (!f.linear() || f.A.rows() != 1) all_linear = false;
        if (f.linear() && f.d0 <= 0.0)
            throw UsageError("linear residual form requires a positive constant denominator");
    }

    const long long n = static_cast<long long>(forms.size());
    // vertex enumeration is exact but combinatorial; keep it to small instances
    const bool enumerable = all_linear && d <= 3 && n <= 40;
    if (enumerable) {
        if (n == 1) {
            result.value = 0.0;
            result.witness = interpolate_single(forms[0]) / forms[0].d0;
            result.status = SolveStatus::Exact;
            return result;
        }
        Mat A(n, d);
        Vec b(n);
        for (long long i = 0; i < n; ++i) {
            const auto& f = forms[static_cast<std::size_t>(i)];
            A.row(i) = f.A.row(0) / f.d0;
            b(i) = f.b(0) / f.d0;
        }
        // identical directions: one-dimensional Chebyshev midpoint
        bool identical_rows = true;
        for (long long i = 1; i < n && identical_rows; ++i)
            identical_rows = (A.row(i) - A.row(0)).cwiseAbs().maxCoeff() < 1e-14;
        if (identical_rows) {
            const double y = -0.5 * (b.maxCoeff() + b.minCoeff());
            const Vec a0 = A.row(0).transpose();
            result.value = 0.5 * (b.maxCoeff() - b.minCoeff());
            result.witness = a0 * (y / a0.squaredNorm());
            result.status = SolveStatus::Exact;
            return result;
        }
        LinearCandidate cand = chebyshev_vertex_enumeration(A, b);
        if (cand.x.size() == d) {
            // primal check: the vertex value must dominate every residual
            double worst = 0.0;
            for (long long i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(A.row(i).dot(cand.x) + b(i)));
            if (worst <= cand.t + 1e-9 * (1.0 + cand.t)) {
                result.value = std::max(cand.t, 0.0);
                result.witness = cand.x;
                result.status = SolveStatus::Exact;
                return result;
            }
        }
        // fall through to bisection on enumeration failure
    }
    return bisection_fractional(forms, opt);
}

// ---------------------------------------------------------------------------
// Feasibility test
// ---------------------------------------------------------------------------

FeasibilityOutcome f_test_ex(const Dataset& data, const SubsetMask& z, double eps,
                             const MinimaxOptions& opt) {
    if (eps < 0.0) throw UsageError("inlier threshold eps must be nonnegative");
    if (z.size() != data.size()) throw UsageError("mask size does not match the dataset");
    FeasibilityOutcome out;
    if (z.none()) return out;  // empty selection is a consensus set by convention

    std::vector<FractionalForm> sub;
    sub.reserve(static_cast<std::size_t>(z.popcount()));
    for (int i = 0; i < data.size(); ++i)
        if (z.test(i)) sub.push_back(data.form(i));

    const MinimaxResult res = solve_minimax(sub, opt);
    out.g = res.value;
    out.bit = res.value > eps ? 1 : 0;
    out.warning = res.warning;
    // g carries the bisection tolerance, so a value that close to eps cannot
    // certify the bit
    out.boundary_ambiguous = std::abs(res.value - eps) < opt.tol &&
                             (res.status == SolveStatus::Bisection || res.warning);
    return out;
}

int f_test(const Dataset& data, const SubsetMask& z, double eps) {
    return f_test_ex(data, z, eps).bit;
}

SubsetMask sample_k_subset(int n, int k, SplitMix64& rng) {
    if (k < 0 || k > n) throw UsageError("k-subset sampling requires 0 <= k <= N");
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    SubsetMask mask(n);
    for (int j = 0; j < k; ++j) {
        const std::uint64_t pick =
            static_cast<std::uint64_t>(j) + rng.next_below(static_cast<std::uint64_t>(n - j));
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        mask.set(pool[static_cast<std::size_t>(j)]);
    }
    return mask;
}

}  // namespace rfit
