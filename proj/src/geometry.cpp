/**
 * @file geometry.cpp
 * @brief Residual forms and least-squares refits for the three model families.
 */

#include "rfit/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

namespace rfit {

namespace {

constexpr double kRankTol = 1e-10;

/// Isotropic (Hartley) normalization: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());

    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(pts.size());

    const double scale = (mean_dist > 1e-12) ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    T(0, 0) = scale;
    T(1, 1) = scale;
    T(0, 2) = -scale * centroid.x();
    T(1, 2) = -scale * centroid.y();
    return T;
}

Eigen::Vector2d apply_h(const Eigen::Matrix3d& T, const Eigen::Vector2d& p) {
    const Eigen::Vector3d q = T * p.homogeneous();
    return q.hnormalized();
}

ParamVector fit_line(const std::vector<DataPoint>& data, const std::vector<int>& idx) {
    Mat design(idx.size(), 2);
    Vec rhs(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& p = std::get<LinePoint>(data[static_cast<std::size_t>(idx[r])]);
        design(static_cast<Eigen::Index>(r), 0) = p.a;
        design(static_cast<Eigen::Index>(r), 1) = 1.0;
        rhs(static_cast<Eigen::Index>(r)) = p.b;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(design);
    qr.setThreshold(kRankTol);
    if (qr.rank() < 2)
        throw NumericalError("singular line fit: selected points share one abscissa");
    return qr.solve(rhs);
}

ParamVector fit_homography(const std::vector<DataPoint>& data, const std::vector<int>& idx) {
    std::vector<Eigen::Vector2d> us, vs;
    us.reserve(idx.size());
    vs.reserve(idx.size());
    for (int i : idx) {
        const auto& c = std::get<HomogCorr>(data[static_cast<std::size_t>(i)]);
        us.push_back(c.u);
        vs.push_back(c.v);
    }
    const Eigen::Matrix3d T1 = normalizing_transform(us);
    const Eigen::Matrix3d T2 = normalizing_transform(vs);

    Mat M(2 * idx.size(), 9);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Eigen::Vector2d u = apply_h(T1, us[r]);
        const Eigen::Vector2d v = apply_h(T2, vs[r]);
        const Eigen::Index j = static_cast<Eigen::Index>(2 * r);
        M.row(j) << u.x(), u.y(), 1.0, 0.0, 0.0, 0.0, -v.x() * u.x(), -v.x() * u.y(), -v.x();
        M.row(j + 1) << 0.0, 0.0, 0.0, u.x(), u.y(), 1.0, -v.y() * u.x(), -v.y() * u.y(), -v.y();
    }

    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);  // null vector needs the 9th column
    const auto& sv = svd.singularValues();
    if (sv(7) < 1e-10 * sv(0))
        throw NumericalError("degenerate homography fit: correspondences are (nearly) collinear");

    const Vec h = svd.matrixV().col(8);
    Eigen::Matrix3d Hn;
    Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    const Eigen::Matrix3d H = T2.inverse() * Hn * T1;
    return params_from_homography(H);
}

ParamVector fit_triangulation(const std::vector<DataPoint>& data, const std::vector<int>& idx) {
    // Homogeneous linear system from the cross-product constraints.
    Mat M(2 * idx.size(), 4);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& obs = std::get<TriangObs>(data[static_cast<std::size_t>(idx[r])]);
        const Eigen::Index j = static_cast<Eigen::Index>(2 * r);
        M.row(j) = obs.pixel.x() * obs.camera.row(2) - obs.camera.row(0);
        M.row(j + 1) = obs.pixel.y() * obs.camera.row(2) - obs.camera.row(1);
    }
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(2) < 1e-10 * sv(0))
        throw NumericalError("degenerate triangulation: rays do not intersect uniquely");
    const Eigen::Vector4d Xh = svd.matrixV().col(3);
    if (std::abs(Xh(3)) < 1e-12 * Xh.norm())
        throw NumericalError("degenerate triangulation: rays are (nearly) parallel");
    Eigen::Vector3d X = Xh.head<3>() / Xh(3);

    // One Gauss-Newton pass on the reprojection error.
    Mat J(2 * idx.size(), 3);
    Vec res(2 * idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& obs = std::get<TriangObs>(data[static_cast<std::size_t>(idx[r])]);
        const Eigen::Vector4d Xt = X.homogeneous();
        const double w = obs.camera.row(2) * Xt;
        if (std::abs(w) < 1e-12) return X;  // refinement undefined here; keep linear solution
        const double px = (obs.camera.row(0) * Xt)(0) / w;
        const double py = (obs.camera.row(1) * Xt)(0) / w;
        const Eigen::Index j = static_cast<Eigen::Index>(2 * r);
        res(j) = obs.pixel.x() - px;
        res(j + 1) = obs.pixel.y() - py;
        J.row(j) = (obs.camera.row(0).head<3>() - px * obs.camera.row(2).head<3>()) / w;
        J.row(j + 1) = (obs.camera.row(1).head<3>() - py * obs.camera.row(2).head<3>()) / w;
    }
    const Mat JtJ = J.transpose() * J;
    Eigen::LDLT<Mat> ldlt(JtJ);
    if (ldlt.info() == Eigen::Success) {
        const Vec step = ldlt.solve(J.transpose() * res);
        if (step.allFinite()) X += step;
    }
    return X;
}

}  // namespace

int param_dim(ModelKind kind) {
    switch (kind) {
        case ModelKind::Line2D: return 2;
        case ModelKind::Triangulation: return 3;
        case ModelKind::Homography: return 8;
    }
    throw UsageError("unknown model kind");
}

int combinatorial_dim(ModelKind kind) { return param_dim(kind) + 1; }

int min_fit_points(ModelKind kind) {
    switch (kind) {
        case ModelKind::Line2D: return 2;
        case ModelKind::Triangulation: return 2;
        case ModelKind::Homography: return 4;
    }
    throw UsageError("unknown model kind");
}

const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Line2D: return "line";
        case ModelKind::Triangulation: return "triangulation";
        case ModelKind::Homography: return "homography";
    }
    throw UsageError("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "line") return ModelKind::Line2D;
    if (name == "triangulation") return ModelKind::Triangulation;
    if (name == "homography") return ModelKind::Homography;
    throw UsageError("unknown model kind '" + name + "' (expected line|triangulation|homography)");
}

FractionalForm to_fractional_form(const DataPoint& p, ModelKind kind) {
    FractionalForm form;
    switch (kind) {
        case ModelKind::Line2D: {
            const auto* lp = std::get_if<LinePoint>(&p);
            if (!lp) throw UsageError("data point tag does not match model kind 'line'");
            form.A = Mat(1, 2);
            form.A << lp->a, 1.0;
            form.b = Vec::Constant(1, -lp->b);
            form.c = Vec::Zero(2);
            form.d0 = 1.0;
            return form;
        }
        case ModelKind::Triangulation: {
            const auto* obs = std::get_if<TriangObs>(&p);
            if (!obs) throw UsageError("data point tag does not match model kind 'triangulation'");
            Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(obs->camera);
            if (svd.singularValues()(2) < kRankTol * svd.singularValues()(0))
                throw UsageError("camera matrix is rank-deficient");
            // rows (P^{1:2} - p P^3), split into the x-part and the constant column
            const Eigen::Matrix<double, 2, 4> G =
                obs->camera.topRows<2>() - obs->pixel * obs->camera.row(2);
            form.A = G.leftCols<3>();
            form.b = G.col(3);
            form.c = obs->camera.row(2).head<3>().transpose();
            form.d0 = obs->camera(2, 3);
            return form;
        }
        case ModelKind::Homography: {
            const auto* corr = std::get_if<HomogCorr>(&p);
            if (!corr) throw UsageError("data point tag does not match model kind 'homography'");
            const double u1 = corr->u.x(), u2 = corr->u.y();
            const double v1 = corr->v.x(), v2 = corr->v.y();
            form.A = Mat::Zero(2, 8);
            form.A.row(0) << u1, u2, 1.0, 0.0, 0.0, 0.0, -v1 * u1, -v1 * u2;
            form.A.row(1) << 0.0, 0.0, 0.0, u1, u2, 1.0, -v2 * u1, -v2 * u2;
            form.b = Vec(2);
            form.b << -v1, -v2;
            form.c = Vec::Zero(8);
            form.c(6) = u1;
            form.c(7) = u2;
            form.d0 = 1.0;
            return form;
        }
    }
    throw UsageError("unknown model kind");
}

double denominator(const FractionalForm& form, const ParamVector& x) {
    if (x.size() != form.dim())
        throw UsageError("parameter vector length does not match the residual form");
    return form.c.dot(x) + form.d0;
}

double residual(const FractionalForm& form, const ParamVector& x) {
    const double den = denominator(form, x);
    if (den <= 0.0) throw NonpositiveDenominator(den);
    return (form.A * x + form.b).norm() / den;
}

ParamVector least_squares_fit(ModelKind kind, const std::vector<DataPoint>& data,
                              const SubsetMask& mask) {
    if (mask.size() != static_cast<int>(data.size()))
        throw UsageError("mask size does not match the data size");
    const std::vector<int> idx = mask.selected();
    if (static_cast<int>(idx.size()) < min_fit_points(kind))
        throw UsageError("mask selects " + std::to_string(idx.size()) + " points; at least " +
                         std::to_string(min_fit_points(kind)) + " required for " +
                         kind_name(kind));
    switch (kind) {
        case ModelKind::Line2D: return fit_line(data, idx);
        case ModelKind::Homography: return fit_homography(data, idx);
        case ModelKind::Triangulation: return fit_triangulation(data, idx);
    }
    throw UsageError("unknown model kind");
}

Eigen::Matrix3d homography_from_params(const ParamVector& x) {
    if (x.size() != 8) throw UsageError("homography parameter vector must have 8 entries");
    Eigen::Matrix3d H;
    H << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), 1.0;
    return H;
}

ParamVector params_from_homography(const Eigen::Matrix3d& H) {
    if (std::abs(H(2, 2)) < 1e-6 * H.norm())
        throw NumericalError("homography bottom-right entry is near zero; unit convention breaks");
    const Eigen::Matrix3d Hs = H / H(2, 2);
    ParamVector x(8);
    x << Hs(0, 0), Hs(0, 1), Hs(0, 2), Hs(1, 0), Hs(1, 1), Hs(1, 2), Hs(2, 0), Hs(2, 1);
    return x;
}

}  // namespace rfit
