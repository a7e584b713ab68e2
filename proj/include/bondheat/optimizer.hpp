#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bondheat/errors.hpp"

// Newton-Raphson least squares with parameter sub-set identification.
//
// The fit minimises R(p) = sum_i (T_i - B_i(p))^2 over fusing events. Each
// Newton system H dp = -J^T is regularised in two stages before it is
// solved:
//   1. the Hessian is SVD-truncated, keeping singular values within a
//      relative threshold of the largest;
//   2. a column-pivoted QR of the leading right-singular-vector rows splits
//      the parameters into a well-conditioned subset (the first r pivots)
//      and an ill-conditioned rest, which is frozen for the iteration.
// The reduced system is solved in the well-conditioned subspace only, the
// frozen components get a zero step, and a backtracking line search plus a
// box projection keeps iterates feasible and the residual nonincreasing.
//
// Everything here is model-agnostic: a Problem carries the prediction
// callable, targets, box bounds, and parameter names. Parameters are
// expected pre-scaled (nominal = 1) so steps and thresholds compare across
// components. Predictions may return NaN entries for events whose solver
// failed; those events are masked out of the residual and its derivatives
// rather than aborting the fit.

namespace bondheat::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Problem {
    std::function<VectorXd(const VectorXd&)> predict;  // NaN entry = masked event
    VectorXd targets;
    VectorXd lower, upper;  // box bounds, +-inf entries allowed
    std::vector<std::string> names;

    int dim() const { return static_cast<int>(lower.size()); }
    int events() const { return static_cast<int>(targets.size()); }

    void validate() const {
        if (!predict) throw ValidationError("Problem: predict callable missing");
        if (lower.size() != upper.size() || static_cast<int>(names.size()) != dim())
            throw ValidationError("Problem: bounds/names dimension mismatch");
        for (int i = 0; i < dim(); ++i)
            if (!(lower[i] <= upper[i]))
                throw ValidationError("Problem: lower > upper for '" + names[i] + "'");
    }
};

struct ResidualValue {
    double value = 0.0;
    int masked = 0;  // events excluded because the model returned NaN
};

inline ResidualValue residual_value(const VectorXd& predictions, const VectorXd& targets) {
    if (predictions.size() != targets.size())
        throw ValidationError("residual_value: prediction/target size mismatch");
    ResidualValue r;
    for (int i = 0; i < targets.size(); ++i) {
        if (std::isnan(predictions[i])) {
            ++r.masked;
            continue;
        }
        const double d = targets[i] - predictions[i];
        r.value += d * d;
    }
    return r;
}

inline ResidualValue residual(const Problem& problem, const VectorXd& p) {
    if (problem.targets.size() == 0) return {};  // empty dataset: zero, caller warns
    return residual_value(problem.predict(p), problem.targets);
}

namespace detail {

// Per-parameter probe steps for finite differences: relative to the
// parameter scale with an absolute floor, shrunk where a box bound is
// closer. Returns {backward, forward}; a zero entry disables that side.
inline std::pair<double, double> fd_steps(const Problem& problem, const VectorXd& p, int j,
                                          double rel_step) {
    double h = std::max(rel_step * std::abs(p[j]), 1e-10);
    double fwd = h, bwd = h;
    if (std::isfinite(problem.upper[j])) fwd = std::min(fwd, problem.upper[j] - p[j]);
    if (std::isfinite(problem.lower[j])) bwd = std::min(bwd, p[j] - problem.lower[j]);
    return {std::max(bwd, 0.0), std::max(fwd, 0.0)};
}

}  // namespace detail

// Jacobian of the prediction vector by central differences (one-sided at a
// box bound). An event whose probe evaluation fails contributes a zero
// derivative for that parameter; fully failed events are masked upstream.
inline MatrixXd model_jacobian(const Problem& problem, const VectorXd& p,
                               double rel_step = 1e-4) {
    problem.validate();
    const int np = problem.dim(), nd = problem.events();
    MatrixXd jac = MatrixXd::Zero(nd, np);
    const VectorXd base = problem.predict(p);
    for (int j = 0; j < np; ++j) {
        auto [bwd, fwd] = detail::fd_steps(problem, p, j, rel_step);
        if (bwd == 0.0 && fwd == 0.0) continue;  // pinned by degenerate bounds
        VectorXd hi = base, lo = base;
        if (fwd > 0.0) {
            VectorXd q = p;
            q[j] += fwd;
            hi = problem.predict(q);
        }
        if (bwd > 0.0) {
            VectorXd q = p;
            q[j] -= bwd;
            lo = problem.predict(q);
        }
        const double span = fwd + bwd;
        for (int i = 0; i < nd; ++i) {
            const double d = hi[i] - lo[i];
            jac(i, j) = std::isnan(d) ? 0.0 : d / span;
        }
    }
    return jac;
}

// Per-event Hessians of the prediction by second differences; only needed
// for the full Newton mode and priced accordingly (O(N_p^2) model runs).
inline std::vector<MatrixXd> fd_event_hessians(const Problem& problem, const VectorXd& p,
                                               double rel_step = 1e-4) {
    const int np = problem.dim(), nd = problem.events();
    const VectorXd base = problem.predict(p);
    std::vector<MatrixXd> hess(static_cast<std::size_t>(nd), MatrixXd::Zero(np, np));
    auto at = [&](int j, double hj, int k, double hk) {
        VectorXd q = p;
        q[j] += hj;
        if (k >= 0) q[k] += hk;
        return problem.predict(q);
    };
    for (int j = 0; j < np; ++j) {
        const double h = std::max(rel_step * std::abs(p[j]), 1e-10);
        const VectorXd fp = at(j, h, -1, 0.0), fm = at(j, -h, -1, 0.0);
        for (int i = 0; i < nd; ++i) {
            const double d2 = (fp[i] - 2.0 * base[i] + fm[i]) / (h * h);
            hess[static_cast<std::size_t>(i)](j, j) = std::isnan(d2) ? 0.0 : d2;
        }
        for (int k = j + 1; k < np; ++k) {
            const double g = std::max(rel_step * std::abs(p[k]), 1e-10);
            const VectorXd fpp = at(j, h, k, g), fpm = at(j, h, k, -g);
            const VectorXd fmp = at(j, -h, k, g), fmm = at(j, -h, k, -g);
            for (int i = 0; i < nd; ++i) {
                const double d2 = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / (4.0 * h * g);
                const double v = std::isnan(d2) ? 0.0 : d2;
                hess[static_cast<std::size_t>(i)](j, k) = v;
                hess[static_cast<std::size_t>(i)](k, j) = v;
            }
        }
    }
    return hess;
}

enum class HessianMode { gauss_newton, full };

struct Derivatives {
    VectorXd gradient;  // J_R^T, length N_p
    MatrixXd hessian;   // H_R, N_p x N_p
};

// Gradient and Hessian of the scalar residual from the prediction jacobian:
//   J_R = 2 (B - T)^T J_B
//   H_R = 2 J_B^T J_B + 2 sum_i (B_i - T_i) H_B,i
// Gauss-Newton drops the curvature sum (and is PSD by construction); the
// full mode needs the per-event Hessians passed in. Masked events drop out
// of both terms.
inline Derivatives residual_derivatives(const VectorXd& predictions, const VectorXd& targets,
                                        const MatrixXd& jacobian,
                                        HessianMode mode = HessianMode::gauss_newton,
                                        const std::vector<MatrixXd>* event_hessians = nullptr) {
    if (predictions.size() != targets.size() || jacobian.rows() != targets.size())
        throw ValidationError("residual_derivatives: size mismatch");
    const int np = static_cast<int>(jacobian.cols());
    Derivatives d{VectorXd::Zero(np), MatrixXd::Zero(np, np)};
    for (int i = 0; i < targets.size(); ++i) {
        if (std::isnan(predictions[i])) continue;
        const double r = predictions[i] - targets[i];
        d.gradient += 2.0 * r * jacobian.row(i).transpose();
        d.hessian += 2.0 * jacobian.row(i).transpose() * jacobian.row(i);
        if (mode == HessianMode::full) {
            if (!event_hessians || static_cast<int>(event_hessians->size()) != targets.size())
                throw ValidationError("residual_derivatives: full mode needs event hessians");
            d.hessian += 2.0 * r * (*event_hessians)[static_cast<std::size_t>(i)];
        }
    }
    return d;
}

struct TruncatedSvd {
    VectorXd sigma;      // full spectrum, descending
    MatrixXd u, v;       // full factors
    int rank = 0;        // retained count r
    MatrixXd truncated;  // H-tilde = U_r S_r V_r^T
    // Eckart-Young: |H - H_tilde|_2 equals sigma[r] (0 when nothing dropped)
    double spectral_error = 0.0;
};

inline TruncatedSvd svd_truncate(const MatrixXd& h, double threshold_ratio = 1e-6) {
    if (h.rows() != h.cols()) throw ValidationError("svd_truncate: matrix must be square");
    if (!(threshold_ratio > 0.0 && threshold_ratio < 1.0))
        throw ValidationError("svd_truncate: threshold_ratio must be in (0, 1)");
    Eigen::JacobiSVD<MatrixXd> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    TruncatedSvd out;
    out.sigma = svd.singularValues();
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    const double top = out.sigma.size() > 0 ? out.sigma[0] : 0.0;
    if (!(top > 0.0) || !std::isfinite(top))
        throw DegenerateHessian("svd_truncate: leading singular value is " +
                                std::to_string(top));
    const double cut = threshold_ratio * top;
    int r = 0;
    while (r < out.sigma.size() && out.sigma[r] >= cut) ++r;
    out.rank = r;
    out.truncated = out.u.leftCols(r) * out.sigma.head(r).asDiagonal() * out.v.leftCols(r).transpose();
    out.spectral_error = r < out.sigma.size() ? out.sigma[r] : 0.0;
    return out;
}

struct SubsetSelection {
    std::vector<int> selected;  // well-conditioned parameter indices, pivot order
    std::vector<int> frozen;    // the rest, ascending
};

// Column-pivoted QR of the r x N_p matrix of leading right-singular-vector
// rows, V_u1^T. The first r pivoted columns name the parameters that span
// the retained subspace best; the rest are frozen for this iteration.
inline SubsetSelection qr_subset_select(const MatrixXd& v_leading) {
    const int np = static_cast<int>(v_leading.rows());
    const int r = static_cast<int>(v_leading.cols());
    if (r < 1 || r > np) throw ValidationError("qr_subset_select: rank out of range");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(v_leading.transpose());
    const auto& idx = qr.colsPermutation().indices();
    SubsetSelection sel;
    sel.selected.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) sel.selected.push_back(idx(k));
    sel.frozen.reserve(static_cast<std::size_t>(np - r));
    for (int k = r; k < np; ++k) sel.frozen.push_back(idx(k));
    std::sort(sel.frozen.begin(), sel.frozen.end());
    return sel;
}

struct StepOutcome {
    VectorXd p;            // accepted iterate (equals input when rejected)
    VectorXd dp;           // proposed full-space Newton direction
    VectorXd predictions;  // model output at the accepted iterate
    double residual = 0.0;
    int halvings = 0;
    bool accepted = false;
};

// Reduced Newton solve in the selected subspace, zero step elsewhere, then a
// backtracking line search with projection onto the box.
inline StepOutcome newton_step(const Problem& problem, const VectorXd& p, double residual_now,
                               const VectorXd& base_predictions, const TruncatedSvd& svd,
                               const SubsetSelection& subset, const VectorXd& gradient,
                               int max_halvings = 20) {
    const int r = svd.rank;
    if (static_cast<int>(subset.selected.size()) != r)
        throw ValidationError("newton_step: subset size must equal the SVD rank");

    // H-tilde_uu = V_uu S_uu V_uu^T with V_uu the selected rows of V_u1
    MatrixXd v_uu(r, r);
    VectorXd j_u(r);
    for (int i = 0; i < r; ++i) {
        v_uu.row(i) = svd.v.row(subset.selected[static_cast<std::size_t>(i)]).head(r);
        j_u[i] = gradient[subset.selected[static_cast<std::size_t>(i)]];
    }
    const MatrixXd h_uu = v_uu * svd.sigma.head(r).asDiagonal() * v_uu.transpose();
    Eigen::FullPivLU<MatrixXd> lu(h_uu);
    if (!lu.isInvertible())
        throw SingularReducedSystem("newton_step: reduced system rank " +
                                    std::to_string(lu.rank()) + " of " + std::to_string(r));
    const VectorXd dp_u = lu.solve(-j_u);

    StepOutcome out;
    out.dp = VectorXd::Zero(p.size());
    for (int i = 0; i < r; ++i) out.dp[subset.selected[static_cast<std::size_t>(i)]] = dp_u[i];

    double t = 1.0;
    for (int h = 0; h <= max_halvings; ++h, t *= 0.5) {
        VectorXd cand = p + t * out.dp;
        for (int i = 0; i < cand.size(); ++i)
            cand[i] = std::clamp(cand[i], problem.lower[i], problem.upper[i]);
        VectorXd pred = problem.predict(cand);
        const double rv = residual_value(pred, problem.targets).value;
        if (rv <= residual_now) {
            out.p = std::move(cand);
            out.predictions = std::move(pred);
            out.residual = rv;
            out.halvings = h;
            out.accepted = true;
            return out;
        }
    }
    out.p = p;
    out.predictions = base_predictions;
    out.residual = residual_now;
    out.halvings = max_halvings;
    return out;
}

struct OptimizeOptions {
    HessianMode hessian = HessianMode::gauss_newton;
    double svd_threshold = 1e-6;
    int max_iterations = 50;
    double step_tolerance = 1e-5;       // on |dp| / max(1, |p|)
    double residual_tolerance = 1e-8;   // on the residual change
    double fd_relative_step = 1e-4;
    int max_halvings = 20;
};

struct IterationRecord {
    int iteration = 0;
    double residual = 0.0;   // after the (possibly rejected) step
    double step_norm = 0.0;  // relative, post line search
    int halvings = 0;
    bool accepted = false;
    double hessian_min_eigenvalue = 0.0;
    std::vector<double> singular_values;
    std::vector<int> selected;
};

struct OptimizeResult {
    VectorXd p;
    double residual = 0.0;
    bool converged = false;
    std::string stop_reason;
    int masked_events = 0;
    std::vector<IterationRecord> iterations;
    std::vector<std::string> warnings;
};

struct NotConverged : ConvergenceFailure {
    OptimizeResult best;
    NotConverged(const std::string& msg, OptimizeResult b)
        : ConvergenceFailure(msg), best(std::move(b)) {}
};

inline OptimizeResult optimize(const Problem& problem, const VectorXd& p0,
                               const OptimizeOptions& opts = {}) {
    problem.validate();
    for (int i = 0; i < p0.size(); ++i)
        if (!(p0[i] >= problem.lower[i] && p0[i] <= problem.upper[i]))
            throw ValidationError("optimize: p0 outside bounds for '" +
                                  problem.names[static_cast<std::size_t>(i)] + "'");

    OptimizeResult res;
    res.p = p0;
    if (problem.events() == 0) {
        res.converged = true;
        res.stop_reason = "empty dataset";
        res.warnings.push_back("optimize: empty dataset, nothing to fit");
        return res;
    }
    if (problem.events() < problem.dim())
        res.warnings.push_back("optimize: fewer events (" + std::to_string(problem.events()) +
                               ") than parameters (" + std::to_string(problem.dim()) +
                               "); the fit relies entirely on subset selection");

    VectorXd predictions = problem.predict(res.p);
    ResidualValue rv = residual_value(predictions, problem.targets);
    res.residual = rv.value;
    res.masked_events = rv.masked;
    if (rv.masked > 0)
        res.warnings.push_back("optimize: " + std::to_string(rv.masked) +
                               " event(s) masked by solver failures at the start");

    for (int it = 1; it <= opts.max_iterations; ++it) {
        const MatrixXd jac = model_jacobian(problem, res.p, opts.fd_relative_step);
        std::vector<MatrixXd> event_h;
        const std::vector<MatrixXd>* hess_ptr = nullptr;
        if (opts.hessian == HessianMode::full) {
            event_h = fd_event_hessians(problem, res.p, opts.fd_relative_step);
            hess_ptr = &event_h;
        }
        const Derivatives der = residual_derivatives(predictions, problem.targets, jac,
                                                     opts.hessian, hess_ptr);
        const TruncatedSvd svd = svd_truncate(der.hessian, opts.svd_threshold);
        const SubsetSelection subset = qr_subset_select(svd.v.leftCols(svd.rank));
        StepOutcome step = newton_step(problem, res.p, res.residual, predictions, svd, subset,
                                       der.gradient, opts.max_halvings);

        IterationRecord rec;
        rec.iteration = it;
        rec.residual = step.residual;
        rec.halvings = step.halvings;
        rec.accepted = step.accepted;
        rec.step_norm = (step.p - res.p).norm() / std::max(1.0, res.p.norm());
        rec.hessian_min_eigenvalue =
            Eigen::SelfAdjointEigenSolver<MatrixXd>(der.hessian).eigenvalues().minCoeff();
        rec.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
        rec.selected = subset.selected;
        res.iterations.push_back(rec);

        const double r_prev = res.residual;
        if (step.accepted) {
            res.p = step.p;
            predictions = step.predictions;
            rv = residual_value(predictions, problem.targets);
            res.residual = rv.value;
            if (rv.masked != res.masked_events) {
                res.masked_events = rv.masked;
                res.warnings.push_back("optimize: masked event count changed to " +
                                       std::to_string(rv.masked) + " at iteration " +
                                       std::to_string(it));
            }
        }

        if (rec.step_norm < opts.step_tolerance) {
            res.converged = true;
            res.stop_reason = "step tolerance";
            return res;
        }
        if (step.accepted && std::abs(r_prev - res.residual) < opts.residual_tolerance) {
            res.converged = true;
            res.stop_reason = "residual tolerance";
            return res;
        }
        if (!step.accepted) {
            res.stop_reason = "line search stall";
            throw NotConverged("optimize: line search could not reduce the residual at "
                               "iteration " + std::to_string(it), res);
        }
    }
    res.stop_reason = "iteration limit";
    throw NotConverged("optimize: iteration limit " + std::to_string(opts.max_iterations) +
                       " reached", res);
}

}  // namespace bondheat::opt
