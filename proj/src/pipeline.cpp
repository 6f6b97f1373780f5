/**
 * @file pipeline.cpp
 * @brief Instance generation, JSON/CSV I/O, and the two-step robust fit.
 */

#include "rfit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rfit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kMaxRedraws = 100;

[[noreturn]] void schema_fail(const std::string& context, const std::string& what) {
    throw SchemaError(context + ": " + what);
}

double require_number(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) schema_fail(context, "missing required field '" + key + "'");
    if (!j[key].is_number()) schema_fail(context + "." + key, "expected a number");
    return j[key].get<double>();
}

Eigen::Vector2d project_homography(const Eigen::Matrix3d& H, const Eigen::Vector2d& u) {
    const Eigen::Vector3d q = H * u.homogeneous();
    return q.hnormalized();
}

Eigen::Vector2d project_camera(const Eigen::Matrix<double, 3, 4>& P, const Eigen::Vector3d& X) {
    const Eigen::Vector3d q = P * X.homogeneous();
    return q.hnormalized();
}

Instance generate_line(const InstanceConfig& cfg, SplitMix64& rng) {
    Instance inst;
    inst.kind = ModelKind::Line2D;
    const double slope = rng.next_uniform(-1.0, 1.0);
    const double intercept = rng.next_uniform(-1.0, 1.0);
    const double span = cfg.outlier_spread;
    // keep outliers clear of the line so the stored labels mean what they say
    const double margin = std::max(4.0 * cfg.noise_sigma, 0.1 * span);

    for (int i = 0; i < cfg.n; ++i) {
        const bool inlier = i < cfg.inlier_count;
        const double a = rng.next_uniform(-0.5 * span, 0.5 * span);
        double b = 0.0;
        if (inlier) {
            b = slope * a + intercept + cfg.noise_sigma * rng.next_gaussian();
        } else {
            int tries = 0;
            do {
                b = slope * a + intercept + rng.next_uniform(-0.5 * span, 0.5 * span);
                if (++tries > kMaxRedraws)
                    throw NumericalError("could not place an outlier away from the line");
            } while (std::abs(b - (slope * a + intercept)) < margin);
        }
        inst.points.emplace_back(LinePoint{a, b});
    }

    GroundTruth truth;
    truth.x = Vec(2);
    truth.x << slope, intercept;
    inst.truth = truth;
    return inst;
}

Instance generate_homography(const InstanceConfig& cfg, SplitMix64& rng) {
    Instance inst;
    inst.kind = ModelKind::Homography;
    const double w = cfg.outlier_spread;  // image side length

    Eigen::Matrix3d H;
    for (int attempt = 0;; ++attempt) {
        if (attempt > kMaxRedraws) throw NumericalError("could not draw a well-conditioned homography");
        const double angle = rng.next_uniform(-0.3, 0.3);
        const double scale = rng.next_uniform(0.85, 1.15);
        const double tx = rng.next_uniform(-0.1 * w, 0.1 * w);
        const double ty = rng.next_uniform(-0.1 * w, 0.1 * w);
        const double p1 = rng.next_uniform(-0.1, 0.1) / w;
        const double p2 = rng.next_uniform(-0.1, 0.1) / w;
        H << scale * std::cos(angle), -scale * std::sin(angle), tx,
             scale * std::sin(angle),  scale * std::cos(angle), ty,
             p1, p2, 1.0;
        if (std::abs(H.determinant()) > 1e-3 && std::abs(H(2, 2)) >= 0.5) break;
    }

    const double margin = std::max(10.0 * cfg.noise_sigma, 0.03 * w);
    for (int i = 0; i < cfg.n; ++i) {
        const bool inlier = i < cfg.inlier_count;
        const Eigen::Vector2d u(rng.next_uniform(0.0, w), rng.next_uniform(0.0, w));
        Eigen::Vector2d v;
        if (inlier) {
            v = project_homography(H, u) +
                cfg.noise_sigma * Eigen::Vector2d(rng.next_gaussian(), rng.next_gaussian());
        } else {
            int tries = 0;
            do {
                v = Eigen::Vector2d(rng.next_uniform(0.0, w), rng.next_uniform(0.0, w));
                if (++tries > kMaxRedraws)
                    throw NumericalError("could not place an outlier correspondence");
            } while ((v - project_homography(H, u)).norm() < margin);
        }
        inst.points.emplace_back(HomogCorr{u, v});
    }

    GroundTruth truth;
    truth.x = params_from_homography(H);
    inst.truth = truth;
    return inst;
}

Instance generate_triangulation(const InstanceConfig& cfg, SplitMix64& rng) {
    Instance inst;
    inst.kind = ModelKind::Triangulation;
    const double w = cfg.outlier_spread;  // frame side length
    const double focal = w;
    const double ring_radius = 4.0;

    const Eigen::Vector3d X(rng.next_uniform(-0.5, 0.5), rng.next_uniform(-0.5, 0.5),
                            rng.next_uniform(-0.5, 0.5));

    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    K(0, 0) = focal;
    K(1, 1) = focal;
    K(0, 2) = 0.5 * w;
    K(1, 2) = 0.5 * w;

    const double margin = std::max(10.0 * cfg.noise_sigma, 0.03 * w);
    for (int i = 0; i < cfg.n; ++i) {
        const double theta = 2.0 * M_PI * i / cfg.n + rng.next_uniform(-0.1, 0.1);
        const Eigen::Vector3d center(ring_radius * std::cos(theta),
                                     ring_radius * std::sin(theta),
                                     rng.next_uniform(-0.5, 0.5));
        const Eigen::Vector3d zc = (-center).normalized();  // look at the origin
        const Eigen::Vector3d xc = Eigen::Vector3d::UnitZ().cross(zc).normalized();
        const Eigen::Vector3d yc = zc.cross(xc);
        Eigen::Matrix3d R;
        R.row(0) = xc;
        R.row(1) = yc;
        R.row(2) = zc;
        Eigen::Matrix<double, 3, 4> P;
        P.leftCols<3>() = K * R;
        P.col(3) = -K * R * center;

        const Eigen::Vector2d proj = project_camera(P, X);
        Eigen::Vector2d pixel;
        const bool inlier = i < cfg.inlier_count;
        if (inlier) {
            pixel = proj + cfg.noise_sigma * Eigen::Vector2d(rng.next_gaussian(),
                                                             rng.next_gaussian());
        } else {
            int tries = 0;
            do {
                pixel = Eigen::Vector2d(rng.next_uniform(0.0, w), rng.next_uniform(0.0, w));
                if (++tries > kMaxRedraws)
                    throw NumericalError("could not place an outlier observation");
            } while ((pixel - proj).norm() < margin);
        }
        inst.points.emplace_back(TriangObs{P, pixel});
    }

    GroundTruth truth;
    truth.x = X;
    inst.truth = truth;
    return inst;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double default_eps(ModelKind kind) {
    switch (kind) {
        case ModelKind::Line2D: return 0.3;
        case ModelKind::Triangulation: return 1.0;
        case ModelKind::Homography: return 4.0;
    }
    throw UsageError("unknown model kind");
}

Instance generate(const InstanceConfig& cfg) {
    if (cfg.n < 1) throw UsageError("instance needs at least one point");
    if (cfg.inlier_count < 0 || cfg.inlier_count > cfg.n)
        throw UsageError("inlier count must lie in [0, N]");
    if (cfg.outlier_spread <= 0.0) throw UsageError("outlier spread must be positive");

    SplitMix64 rng(cfg.seed);
    Instance inst;
    switch (cfg.kind) {
        case ModelKind::Line2D: inst = generate_line(cfg, rng); break;
        case ModelKind::Homography: inst = generate_homography(cfg, rng); break;
        case ModelKind::Triangulation: inst = generate_triangulation(cfg, rng); break;
    }
    inst.eps = cfg.eps > 0.0 ? cfg.eps : default_eps(cfg.kind);
    if (inst.truth) {
        inst.truth->inlier_labels.assign(static_cast<std::size_t>(cfg.n), 0);
        for (int i = 0; i < cfg.inlier_count; ++i)
            inst.truth->inlier_labels[static_cast<std::size_t>(i)] = 1;
    }
    inst.generation =
        GenerationParams{cfg.seed, cfg.noise_sigma, cfg.outlier_spread, cfg.inlier_count};
    return inst;
}

int consensus(const Dataset& data, const ParamVector& x, double eps) {
    int count = 0;
    for (const auto& form : data.forms()) {
        const double den = form.c.dot(x) + form.d0;
        if (den <= 0.0) continue;  // outside the region counts as disagreement
        count += (form.A * x + form.b).norm() / den <= eps;
    }
    return count;
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "exact") return EstimatorKind::Exact;
    if (name == "classical") return EstimatorKind::Classical;
    if (name == "quantum") return EstimatorKind::Quantum;
    throw UsageError("unknown estimator '" + name + "' (expected exact|classical|quantum)");
}

const char* estimator_name(EstimatorKind method) {
    switch (method) {
        case EstimatorKind::Exact: return "exact";
        case EstimatorKind::Classical: return "classical";
        case EstimatorKind::Quantum: return "quantum";
    }
    return "unknown";
}

FitReport robust_fit(const Instance& instance, const FitOptions& opt) {
    if (opt.gamma <= 0.0 || opt.gamma > 1.0) throw UsageError("gamma must lie in (0, 1]");
    const auto start = std::chrono::steady_clock::now();

    const Dataset data = instance.dataset();
    FitReport report;
    report.method = opt.method;
    report.m_iters = opt.m_iters;
    report.seed = opt.seed;
    report.gamma = opt.gamma;

    switch (opt.method) {
        case EstimatorKind::Exact: {
            const OracleTable table = build_oracle_table(data, instance.eps, opt.n_cap);
            report.table_solver_calls = table.solver_calls;
            report.influence = exact_influence_full(table);
            break;
        }
        case EstimatorKind::Classical: {
            auto [vec, trace] = sample_influence_classical(
                data, instance.eps, combinatorial_dim(instance.kind), opt.m_iters, opt.seed);
            report.influence = std::move(vec);
            report.classical_queries = trace.oracle_queries;
            break;
        }
        case EstimatorKind::Quantum: {
            const OracleTable table = build_oracle_table(data, instance.eps, opt.n_cap);
            report.table_solver_calls = table.solver_calls;
            const FourierSpectrum spectrum = fwht_spectrum(table);
            auto [vec, record] = bv_sample(spectrum, opt.m_iters, opt.seed);
            report.influence = std::move(vec);
            report.quantum_queries = record.oracle_queries;
            break;
        }
    }

    report.influence_norm = normalize(report.influence);
    report.inlier_mask.assign(static_cast<std::size_t>(data.size()), 0);
    SubsetMask mask(data.size());
    int retained = 0;
    for (int i = 0; i < data.size(); ++i) {
        if (report.influence_norm.alphas[static_cast<std::size_t>(i)] <= opt.gamma) {
            report.inlier_mask[static_cast<std::size_t>(i)] = 1;
            mask.set(i);
            ++retained;
        }
    }
    if (retained == 0)
        throw NumericalError("no points survive the influence threshold; increase gamma");
    if (retained < min_fit_points(instance.kind))
        throw NumericalError("only " + std::to_string(retained) +
                             " points survive the influence threshold; increase gamma");

    report.refit = least_squares_fit(instance.kind, instance.points, mask);
    report.consensus_at_refit = consensus(data, report.refit, instance.eps);
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Instance JSON I/O
// ---------------------------------------------------------------------------

Instance ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open instance file");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    if (!j.is_object()) schema_fail(path, "top level must be an object");
    if (!j.contains("kind") || !j["kind"].is_string())
        schema_fail(path, "missing required string field 'kind'");

    Instance inst;
    inst.kind = kind_from_name(j["kind"].get<std::string>());
    inst.eps = require_number(j, "eps", path);
    if (inst.eps <= 0.0) schema_fail(path + ".eps", "must be positive");

    if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
        schema_fail(path, "missing nonempty array field 'points'");
    const auto& points = j["points"];

    if (inst.kind == ModelKind::Triangulation) {
        if (!j.contains("cameras") || !j["cameras"].is_array())
            schema_fail(path, "kind 'triangulation' requires array field 'cameras'");
        if (j["cameras"].size() != points.size())
            schema_fail(path + ".cameras",
                        "must list one 3x4 camera per observation (got " +
                            std::to_string(j["cameras"].size()) + " for " +
                            std::to_string(points.size()) + " points)");
    }

    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::string ctx = path + ".points[" + std::to_string(i) + "]";
        const auto& p = points[i];
        if (!p.is_array()) schema_fail(ctx, "expected an array of numbers");
        switch (inst.kind) {
            case ModelKind::Line2D: {
                if (p.size() != 2) schema_fail(ctx, "expected 2 numbers (a, b)");
                inst.points.emplace_back(LinePoint{p[0].get<double>(), p[1].get<double>()});
                break;
            }
            case ModelKind::Homography: {
                if (p.size() != 4) schema_fail(ctx, "expected 4 numbers (u1, u2, v1, v2)");
                inst.points.emplace_back(
                    HomogCorr{Eigen::Vector2d(p[0].get<double>(), p[1].get<double>()),
                              Eigen::Vector2d(p[2].get<double>(), p[3].get<double>())});
                break;
            }
            case ModelKind::Triangulation: {
                if (p.size() != 2) schema_fail(ctx, "expected 2 numbers (u, v)");
                const auto& cam = j["cameras"][i];
                const std::string cam_ctx = path + ".cameras[" + std::to_string(i) + "]";
                if (!cam.is_array() || cam.size() != 12)
                    schema_fail(cam_ctx, "expected 12 numbers (row-major 3x4 camera)");
                TriangObs obs;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 4; ++c)
                        obs.camera(r, c) = cam[static_cast<std::size_t>(4 * r + c)].get<double>();
                obs.pixel = Eigen::Vector2d(p[0].get<double>(), p[1].get<double>());
                inst.points.emplace_back(obs);
                break;
            }
        }
    }

    if (j.contains("truth")) {
        const auto& t = j["truth"];
        if (!t.is_object()) schema_fail(path + ".truth", "expected an object");
        if (!t.contains("x") || !t["x"].is_array())
            schema_fail(path + ".truth", "missing array field 'x'");
        GroundTruth truth;
        truth.x = Vec(static_cast<Eigen::Index>(t["x"].size()));
        for (std::size_t i = 0; i < t["x"].size(); ++i)
            truth.x(static_cast<Eigen::Index>(i)) = t["x"][i].get<double>();
        if (truth.x.size() != param_dim(inst.kind))
            schema_fail(path + ".truth.x", "expected " + std::to_string(param_dim(inst.kind)) +
                                               " parameters for kind '" + kind_name(inst.kind) +
                                               "'");
        if (t.contains("labels")) {
            if (!t["labels"].is_array() || t["labels"].size() != inst.points.size())
                schema_fail(path + ".truth.labels", "expected one 0/1 label per point");
            for (const auto& l : t["labels"]) truth.inlier_labels.push_back(l.get<int>());
        }
        inst.truth = truth;
    }

    if (j.contains("generation")) {
        const auto& g = j["generation"];
        GenerationParams gp;
        gp.seed = g.value("seed", std::uint64_t{0});
        gp.noise_sigma = g.value("sigma", 0.0);
        gp.outlier_spread = g.value("spread", 0.0);
        gp.inlier_count = g.value("inliers", 0);
        inst.generation = gp;
    }

    inst.source_path = path;
    return inst;
}

void emit_instance(const Instance& instance, const std::string& path) {
    ordered_json j;
    j["kind"] = kind_name(instance.kind);
    j["eps"] = instance.eps;
    ordered_json points = ordered_json::array();
    ordered_json cameras = ordered_json::array();
    for (const auto& p : instance.points) {
        if (const auto* lp = std::get_if<LinePoint>(&p)) {
            points.push_back({lp->a, lp->b});
        } else if (const auto* hc = std::get_if<HomogCorr>(&p)) {
            points.push_back({hc->u.x(), hc->u.y(), hc->v.x(), hc->v.y()});
        } else if (const auto* ob = std::get_if<TriangObs>(&p)) {
            points.push_back({ob->pixel.x(), ob->pixel.y()});
            ordered_json cam = ordered_json::array();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 4; ++c) cam.push_back(ob->camera(r, c));
            cameras.push_back(cam);
        }
    }
    j["points"] = points;
    if (instance.kind == ModelKind::Triangulation) j["cameras"] = cameras;
    if (instance.truth) {
        ordered_json t;
        t["x"] = std::vector<double>(instance.truth->x.data(),
                                     instance.truth->x.data() + instance.truth->x.size());
        if (!instance.truth->inlier_labels.empty()) t["labels"] = instance.truth->inlier_labels;
        j["truth"] = t;
    }
    if (instance.generation) {
        j["seed"] = instance.generation->seed;
        ordered_json g;
        g["seed"] = instance.generation->seed;
        g["sigma"] = instance.generation->noise_sigma;
        g["spread"] = instance.generation->outlier_spread;
        g["inliers"] = instance.generation->inlier_count;
        j["generation"] = g;
    }

    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

void emit_report(const FitReport& report, const Instance& instance, const std::string& path) {
    ordered_json j;
    j["kind"] = kind_name(instance.kind);
    j["n"] = instance.size();
    j["eps"] = instance.eps;
    j["method"] = estimator_name(report.method);
    j["m"] = report.m_iters;
    j["seed"] = report.seed;
    j["gamma"] = report.gamma;
    j["alpha"] = report.influence.alphas;
    j["alpha_norm"] = report.influence_norm.alphas;
    j["inlier_mask"] = report.inlier_mask;
    j["refit_x"] = std::vector<double>(report.refit.data(),
                                       report.refit.data() + report.refit.size());
    j["consensus"] = report.consensus_at_refit;
    ordered_json q;
    q["classical_total"] = report.classical_queries;
    q["quantum_total"] = report.quantum_queries;
    q["table_solver_calls"] = report.table_solver_calls;
    j["queries"] = q;
    if (instance.truth && !instance.truth->inlier_labels.empty()) {
        int agree = 0;
        for (std::size_t i = 0; i < report.inlier_mask.size(); ++i)
            agree += report.inlier_mask[i] == instance.truth->inlier_labels[i];
        j["label_accuracy"] = static_cast<double>(agree) /
                              static_cast<double>(report.inlier_mask.size());
    }
    // timing deliberately omitted: reruns with the same seed must be byte-identical

    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

void write_influence_csv(const Instance& instance, const InfluenceVector& raw,
                         const InfluenceVector& norm, double gamma, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    const bool with_truth = instance.truth && !instance.truth->inlier_labels.empty();
    out << "index,alpha,alpha_norm,label_pred" << (with_truth ? ",label_true" : "") << "\n";
    for (int i = 0; i < raw.size(); ++i) {
        const double a = raw.alphas[static_cast<std::size_t>(i)];
        const double an = norm.alphas[static_cast<std::size_t>(i)];
        out << i << ',' << format_double(a) << ',' << format_double(an) << ','
            << (an <= gamma ? 1 : 0);
        if (with_truth) out << ',' << instance.truth->inlier_labels[static_cast<std::size_t>(i)];
        out << "\n";
    }
}

void write_plot_files(const InfluenceVector& norm, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<double> sorted = norm.alphas;
    std::sort(sorted.begin(), sorted.end());

    const std::string csv_path = out_dir + "/influence_sorted.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw NumericalError("cannot open '" + csv_path + "' for writing");
    csv << "rank,alpha_norm\n";
    for (std::size_t i = 0; i < sorted.size(); ++i)
        csv << i << ',' << format_double(sorted[i]) << "\n";

    const std::string gp_path = out_dir + "/influence_sorted.gp";
    std::ofstream gp(gp_path);
    if (!gp) throw NumericalError("cannot open '" + gp_path + "' for writing");
    gp << "set datafile separator ','\n"
          "set terminal pngcairo size 900,540\n"
          "set output 'influence_sorted.png'\n"
          "set xlabel 'point (sorted)'\n"
          "set ylabel 'normalised influence'\n"
          "set yrange [-0.05:1.05]\n"
          "plot 'influence_sorted.csv' using 1:2 every ::1 with points pt 7 notitle\n";
}

}  // namespace rfit
