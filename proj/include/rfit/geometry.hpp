/**
 * @file geometry.hpp
 * @brief Model families, the unified fractional residual form, and least-squares refits.
 *
 * Three model kinds are supported: 2D line fitting (d = 2), multiview
 * triangulation of one scene point (d = 3), and homography estimation with
 * the bottom-right matrix entry fixed to 1 (d = 8). Every per-point residual
 * is expressed as
 *
 *     r(x) = ||A x + b||_2 / (c.x + d0)
 *
 * which is quasiconvex on the region where the denominator is positive. Line
 * residuals are the special case c = 0, d0 = 1.
 */

#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "rfit/errors.hpp"
#include "rfit/subset_mask.hpp"

namespace rfit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ParamVector = Vec;

enum class ModelKind { Line2D, Triangulation, Homography };

/// Parameter dimension d: 2 / 3 / 8.
int param_dim(ModelKind kind);

/// Combinatorial dimension k = d + 1: 3 / 4 / 9.
int combinatorial_dim(ModelKind kind);

/// Minimum number of selected points a least-squares refit needs.
int min_fit_points(ModelKind kind);

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

/// 2D point (a, b) fitted against the line b = x1 * a + x2 (vertical distance).
struct LinePoint {
    double a = 0.0;
    double b = 0.0;
};

/// One calibrated view of the scene point: 3x4 camera matrix plus pixel observation.
struct TriangObs {
    Eigen::Matrix<double, 3, 4> camera;
    Eigen::Vector2d pixel;
};

/// Two-view feature correspondence u (image 1) -> v (image 2).
struct HomogCorr {
    Eigen::Vector2d u;
    Eigen::Vector2d v;
};

using DataPoint = std::variant<LinePoint, TriangObs, HomogCorr>;

/// Residual ||A x + b|| / (c.x + d0); defined where the denominator is positive.
struct FractionalForm {
    Mat A;
    Vec b;
    Vec c;
    double d0 = 1.0;

    int dim() const { return static_cast<int>(A.cols()); }
    bool linear() const { return c.isZero(0.0); }
};

/**
 * Converts a data point of the given kind into its fractional residual form.
 * Throws UsageError when the point's tag does not match the kind, or when a
 * camera matrix is rank-deficient.
 */
FractionalForm to_fractional_form(const DataPoint& p, ModelKind kind);

double denominator(const FractionalForm& form, const ParamVector& x);

/// Evaluates the residual; throws NonpositiveDenominator outside the region.
double residual(const FractionalForm& form, const ParamVector& x);

/**
 * Direct least-squares fit on the points selected by the mask.
 *
 * Line2D: ordinary least squares on vertical residuals. Homography:
 * normalized DLT, rescaled so the bottom-right entry is 1. Triangulation:
 * homogeneous linear solve on the cross-product constraints followed by one
 * Gauss-Newton pass on the reprojection error.
 */
ParamVector least_squares_fit(ModelKind kind, const std::vector<DataPoint>& data,
                              const SubsetMask& mask);

/// Assembles the 3x3 homography with unit bottom-right entry from 8 parameters.
Eigen::Matrix3d homography_from_params(const ParamVector& x);

/// Inverse of homography_from_params; NumericalError when |H33| is near zero.
ParamVector params_from_homography(const Eigen::Matrix3d& H);

}  // namespace rfit
