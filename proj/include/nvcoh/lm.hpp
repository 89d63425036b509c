#pragma once

// Levenberg-Marquardt least squares in trust-region form.
//
// Parameters may be free, positive (log transform) or bounded (logistic
// transform); the solver iterates on the unconstrained internal coordinates.
// The Jacobian is taken by central differences.  Each iteration solves
//   min ||r + J s||  subject to  ||D s|| <= Delta
// with D the running column-norm scaling of J; the Gauss-Newton step is used
// whenever it fits inside the region.

#include "nvcoh/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nvcoh {

enum class ParamKind { free, positive, bounded };

struct ParamSpec {
    std::string name;
    double init = 0.0;
    ParamKind kind = ParamKind::free;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool fixed = false;
};

/// f(x, params) with params in the order of the ParamSpec list (fixed ones included).
using ModelFunction = std::function<double(double, std::span<const double>)>;

struct FitOptions {
    double xtol = 1e-10;   // relative step
    double gtol = 1e-12;   // scaled gradient (cosine between r and the columns of J)
    double ftol = 1e-15;   // relative cost reduction floor once steps are rejected
    int maxIterations = 500;
};

struct FitResult {
    std::vector<std::string> names;     // all parameters, fixed included
    std::vector<bool> fixed;
    Eigen::VectorXd estimates;
    Eigen::VectorXd errors;             // zero for fixed parameters
    Eigen::MatrixXd covariance;         // over all parameters, zero rows/cols for fixed ones
    double residualNorm = 0.0;          // weighted ||r||
    double rSquared = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string status;
    std::vector<double> costHistory;    // 0.5 ||r||^2 after each accepted LM step, starting point first

    [[nodiscard]] std::size_t index(const std::string& name) const
    {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("FitResult: no parameter '" + name + "'");
    }
    [[nodiscard]] double value(const std::string& name) const { return estimates(static_cast<Eigen::Index>(index(name))); }
    [[nodiscard]] double error(const std::string& name) const { return errors(static_cast<Eigen::Index>(index(name))); }
};

namespace detail {

inline double to_external(const ParamSpec& p, double u)
{
    switch (p.kind) {
    case ParamKind::free:
        return u;
    case ParamKind::positive:
        return std::exp(u);
    case ParamKind::bounded:
        return p.lower + (p.upper - p.lower) / (1.0 + std::exp(-u));
    }
    return u;
}

/// d(external)/d(internal)
inline double external_slope(const ParamSpec& p, double u)
{
    switch (p.kind) {
    case ParamKind::free:
        return 1.0;
    case ParamKind::positive:
        return std::exp(u);
    case ParamKind::bounded: {
        const double s = 1.0 / (1.0 + std::exp(-u));
        return (p.upper - p.lower) * s * (1.0 - s);
    }
    }
    return 1.0;
}

inline double to_internal(const ParamSpec& p, double x)
{
    switch (p.kind) {
    case ParamKind::free:
        return x;
    case ParamKind::positive:
        if (!(x > 0.0)) {
            throw FitError("initial value of positive parameter '" + p.name + "' must be > 0");
        }
        return std::log(x);
    case ParamKind::bounded: {
        if (!(x > p.lower && x < p.upper)) {
            throw FitError("initial value of '" + p.name + "' outside its bounds");
        }
        const double s = (x - p.lower) / (p.upper - p.lower);
        return std::log(s / (1.0 - s));
    }
    }
    return x;
}

class LeastSquaresProblem {
public:
    LeastSquaresProblem(const ModelFunction& model, std::span<const double> x, std::span<const double> y,
                        std::span<const double> sigma, const std::vector<ParamSpec>& params)
        : model_(model), x_(x), y_(y), params_(params)
    {
        weights_.assign(x.size(), 1.0);
        if (!sigma.empty()) {
            for (std::size_t i = 0; i < sigma.size(); ++i) {
                if (!(sigma[i] > 0.0)) {
                    throw FitError("sigma must be positive where supplied");
                }
                weights_[i] = 1.0 / sigma[i];
            }
        }
        for (std::size_t j = 0; j < params.size(); ++j) {
            if (!params[j].fixed) {
                freeIdx_.push_back(j);
            }
        }
    }

    [[nodiscard]] std::size_t n_free() const { return freeIdx_.size(); }
    [[nodiscard]] std::size_t n_data() const { return x_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& free_indices() const { return freeIdx_; }

    [[nodiscard]] std::vector<double> external(const Eigen::VectorXd& u) const
    {
        std::vector<double> p(params_.size());
        for (std::size_t j = 0; j < params_.size(); ++j) {
            p[j] = params_[j].init;
        }
        for (std::size_t k = 0; k < freeIdx_.size(); ++k) {
            const std::size_t j = freeIdx_[k];
            p[j] = to_external(params_[j], u(static_cast<Eigen::Index>(k)));
        }
        return p;
    }

    [[nodiscard]] Eigen::VectorXd residuals(const Eigen::VectorXd& u) const
    {
        const auto p = external(u);
        Eigen::VectorXd r(static_cast<Eigen::Index>(x_.size()));
        for (std::size_t i = 0; i < x_.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = weights_[i] * (model_(x_[i], p) - y_[i]);
        }
        return r;
    }

    [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const
    {
        const auto n = static_cast<Eigen::Index>(x_.size());
        const auto k = static_cast<Eigen::Index>(freeIdx_.size());
        Eigen::MatrixXd J(n, k);
        const double eps = std::cbrt(std::numeric_limits<double>::epsilon());
        for (Eigen::Index j = 0; j < k; ++j) {
            Eigen::VectorXd up = u;
            Eigen::VectorXd dn = u;
            const double h = eps * std::max(std::abs(u(j)), 1.0);
            up(j) += h;
            dn(j) -= h;
            J.col(j) = (residuals(up) - residuals(dn)) / (up(j) - dn(j));
        }
        return J;
    }

    [[nodiscard]] double unweighted_r2(const Eigen::VectorXd& u) const
    {
        const auto p = external(u);
        double mean = 0.0;
        for (double v : y_) {
            mean += v;
        }
        mean /= static_cast<double>(y_.size());
        double ssRes = 0.0;
        double ssTot = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            const double d = model_(x_[i], p) - y_[i];
            ssRes += d * d;
            ssTot += (y_[i] - mean) * (y_[i] - mean);
        }
        return ssTot > 0.0 ? 1.0 - ssRes / ssTot : (ssRes == 0.0 ? 1.0 : 0.0);
    }

    [[nodiscard]] const std::vector<ParamSpec>& params() const { return params_; }

private:
    const ModelFunction& model_;
    std::span<const double> x_;
    std::span<const double> y_;
    std::vector<double> weights_;
    const std::vector<ParamSpec>& params_;
    std::vector<std::size_t> freeIdx_;
};

/// Step minimizing ||r + J s|| with ||D s|| <= delta.  Returns the step and the multiplier used.
inline std::pair<Eigen::VectorXd, double> trust_region_step(const Eigen::MatrixXd& JtJ, const Eigen::VectorXd& Jtr,
                                                            const Eigen::VectorXd& diag, double delta)
{
    const auto solve = [&](double lambda) -> std::optional<Eigen::VectorXd> {
        Eigen::MatrixXd A = JtJ;
        A.diagonal() += lambda * diag.array().square().matrix();
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            return std::nullopt;
        }
        Eigen::VectorXd s = ldlt.solve(-Jtr);
        if (!s.allFinite()) {
            return std::nullopt;
        }
        // reject numerically singular solves
        if (lambda == 0.0 && (ldlt.vectorD().array().abs().minCoeff() <=
                              1e-14 * ldlt.vectorD().array().abs().maxCoeff())) {
            return std::nullopt;
        }
        return s;
    };
    const auto scaledNorm = [&](const Eigen::VectorXd& s) { return (diag.array() * s.array()).matrix().norm(); };

    if (auto gn = solve(0.0); gn && scaledNorm(*gn) <= delta) {
        return {*gn, 0.0};
    }
    // ||D s(lambda)|| decreases monotonically in lambda; bracket then bisect in log space.
    double lo = 0.0;
    double hi = std::max(1e-12, Jtr.norm() / delta);
    Eigen::VectorXd best;
    for (int i = 0; i < 200; ++i) {
        auto s = solve(hi);
        if (s && scaledNorm(*s) <= delta) {
            best = *s;
            break;
        }
        lo = hi;
        hi *= 10.0;
    }
    if (best.size() == 0) {
        throw FitError("trust-region subproblem failed: normal matrix singular under damping");
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = lo == 0.0 ? hi * 1e-3 : std::sqrt(lo * hi);
        auto s = solve(mid);
        if (s && scaledNorm(*s) <= delta) {
            hi = mid;
            best = *s;
            if (scaledNorm(*s) >= 0.9 * delta) {
                break;
            }
        } else {
            lo = mid;
        }
        if (lo > 0.0 && hi / lo < 1.0 + 1e-6) {
            break;
        }
    }
    return {best, hi};
}

}  // namespace detail

/// Nonlinear least-squares fit of model(x, p) to (x, y), weighted by 1/sigma when sigma is non-empty.
///
/// The covariance is (J^T W J)^-1 scaled by the residual variance, with J the
/// Jacobian in the external parameters at the solution.
inline FitResult lm_fit(const ModelFunction& model, std::span<const double> x, std::span<const double> y,
                        std::span<const double> sigma, const std::vector<ParamSpec>& params,
                        const FitOptions& opts = {})
{
    if (x.size() != y.size() || (!sigma.empty() && sigma.size() != y.size())) {
        throw FitError("lm_fit: data columns differ in length");
    }
    const detail::LeastSquaresProblem problem(model, x, y, sigma, params);
    const std::size_t k = problem.n_free();
    if (k == 0) {
        throw FitError("lm_fit: no free parameters");
    }
    if (x.size() < k + 1) {
        throw FitError("lm_fit: need at least " + std::to_string(k + 1) + " points for " + std::to_string(k) +
                       " free parameters");
    }

    Eigen::VectorXd u(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& p = params[problem.free_indices()[i]];
        if (!std::isfinite(p.init)) {
            throw FitError("lm_fit: non-finite initial value for '" + p.name + "'");
        }
        u(static_cast<Eigen::Index>(i)) = detail::to_internal(p, p.init);
    }

    FitResult res;
    Eigen::VectorXd r = problem.residuals(u);
    if (!r.allFinite()) {
        throw FitError("lm_fit: model is not finite at the initial guess");
    }
    double cost = 0.5 * r.squaredNorm();
    res.costHistory.push_back(cost);

    Eigen::MatrixXd J = problem.jacobian(u);
    Eigen::VectorXd diag = J.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < diag.size(); ++j) {
        if (diag(j) == 0.0) {
            diag(j) = 1.0;
        }
    }
    double delta = 100.0 * (diag.array() * u.array()).matrix().norm();
    if (delta == 0.0) {
        delta = 100.0;
    }

    const auto gradient_measure = [](const Eigen::MatrixXd& Jm, const Eigen::VectorXd& rv) {
        const double rn = rv.norm();
        if (rn == 0.0) {
            return 0.0;
        }
        const Eigen::VectorXd g = Jm.transpose() * rv;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            const double cn = Jm.col(j).norm();
            if (cn > 0.0) {
                worst = std::max(worst, std::abs(g(j)) / (cn * rn));
            }
        }
        return worst;
    };
    const auto gradient_small = [&](const Eigen::MatrixXd& Jm, const Eigen::VectorXd& rv) {
        return gradient_measure(Jm, rv) <= opts.gtol;
    };

    res.status = "maximum iterations reached";
    bool done = gradient_small(J, r);
    if (done) {
        res.converged = true;
        res.status = "gradient below tolerance at start";
    }
    int attempts = 0;
    while (!done && res.iterations < opts.maxIterations && attempts < 50 * opts.maxIterations) {
        ++attempts;
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd Jtr = J.transpose() * r;
        auto [s, lambda] = detail::trust_region_step(JtJ, Jtr, diag, delta);
        const double stepScaled = (diag.array() * s.array()).matrix().norm();
        const Eigen::VectorXd uNew = u + s;
        const Eigen::VectorXd rNew = problem.residuals(uNew);
        const double costNew = rNew.allFinite() ? 0.5 * rNew.squaredNorm() : std::numeric_limits<double>::infinity();
        const double predicted = cost - 0.5 * (r + J * s).squaredNorm();
        const double actual = cost - costNew;
        const double ratio = predicted > 0.0 ? actual / predicted : (actual > 0.0 ? 1.0 : -1.0);

        if (ratio < 0.25) {
            delta = 0.25 * std::min(delta, stepScaled);
        } else if (ratio > 0.75 || lambda == 0.0) {
            delta = std::max(delta, 2.0 * stepScaled);
        }

        if (ratio > 1e-4 && actual > 0.0) {
            u = uNew;
            r = rNew;
                        cost = costNew;
            ++res.iterations;
            res.costHistory.push_back(cost);
            J = problem.jacobian(u);
            diag = diag.cwiseMax(J.colwise().norm().transpose());

            if (cost == 0.0 || gradient_small(J, r)) {
                res.converged = true;
                res.status = cost == 0.0 ? "zero residual" : "gradient below tolerance";
                break;
            }
            if (s.norm() <= opts.xtol * (u.norm() + opts.xtol)) {
                res.converged = true;
                res.status = "relative step below tolerance";
                break;
            }
        } else {
            // rejected step: a vanishing trust region means no further progress is possible
            if (delta <= opts.xtol * (diag.array() * u.array()).matrix().norm() || delta < 1e-300) {
                res.converged = true;
                res.status = "trust region below step tolerance";
                break;
            }
            if (predicted <= opts.ftol * cost && std::abs(actual) <= opts.ftol * cost) {
                res.converged = true;
                res.status = "no further reduction possible";
                break;
            }
        }
    }

    // Cost comparisons resolve the minimum only to ~sqrt(eps); finish with plain
    // Gauss-Newton steps judged by the gradient instead.
    if (res.converged && cost > 0.0) {
        double gm = gradient_measure(J, r);
        for (int polish = 0; polish < 5 && gm > 0.0; ++polish) {
            const Eigen::VectorXd s = (J.transpose() * J).ldlt().solve(-(J.transpose() * r));
            if (!s.allFinite()) {
                break;
            }
            const Eigen::VectorXd uNew = u + s;
            const Eigen::VectorXd rNew = problem.residuals(uNew);
            if (!rNew.allFinite()) {
                break;
            }
            const double costNew = 0.5 * rNew.squaredNorm();
            const Eigen::MatrixXd JNew = problem.jacobian(uNew);
            const double gmNew = gradient_measure(JNew, rNew);
            if (costNew > cost * (1.0 + 1e-12) || gmNew >= gm) {
                break;
            }
            u = uNew;
            r = rNew;
            J = JNew;
            gm = gmNew;
        }
    }

    const auto external = problem.external(u);
    const auto nAll = static_cast<Eigen::Index>(params.size());
    res.names.reserve(params.size());
    for (const auto& p : params) {
        res.names.push_back(p.name);
        res.fixed.push_back(p.fixed);
    }
    res.estimates = Eigen::Map<const Eigen::VectorXd>(external.data(), nAll);
    res.residualNorm = r.norm();
    res.rSquared = problem.unweighted_r2(u);

    // Jacobian in external coordinates via the chain rule.
    Eigen::MatrixXd Jext = J;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& p = params[problem.free_indices()[i]];
        const double slope = detail::external_slope(p, u(static_cast<Eigen::Index>(i)));
        Jext.col(static_cast<Eigen::Index>(i)) /= slope;
    }
    const double dof = static_cast<double>(problem.n_data() - k);
    const double variance = r.squaredNorm() / dof;
    Eigen::MatrixXd covFree = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k),
                                                        std::numeric_limits<double>::infinity());
    // Equilibrate the columns first: parameters in Hz and in seconds differ by
    // ~1e12 and would otherwise defeat the rank test.
    Eigen::VectorXd colScale = Jext.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < colScale.size(); ++i) {
        colScale(i) = colScale(i) > 0.0 ? 1.0 / colScale(i) : 1.0;
    }
    const Eigen::MatrixXd Js = Jext * colScale.asDiagonal();
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(Js.transpose() * Js);
    if (lu.isInvertible() && Jext.allFinite()) {
        covFree = colScale.asDiagonal() * lu.inverse() * colScale.asDiagonal() * variance;
    } else {
        res.status += "; covariance singular";
    }

    res.covariance = Eigen::MatrixXd::Zero(nAll, nAll);
    res.errors = Eigen::VectorXd::Zero(nAll);
    for (std::size_t a = 0; a < k; ++a) {
        const auto ia = static_cast<Eigen::Index>(problem.free_indices()[a]);
        for (std::size_t b = 0; b < k; ++b) {
            const auto ib = static_cast<Eigen::Index>(problem.free_indices()[b]);
            res.covariance(ia, ib) = covFree(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
        res.errors(ia) = std::sqrt(std::abs(res.covariance(ia, ia)));
    }
    return res;
}

}  // namespace nvcoh
