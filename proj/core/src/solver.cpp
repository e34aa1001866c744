#include <farmselect/error.hpp>
#include <farmselect/solver.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace farmselect {

PenaltyMask PenaltyMask::farm_select(Index num_covariates, Index num_factors)
{
    PenaltyMask mask;
    mask.nuisance = num_factors;
    mask.penalized.assign(static_cast<std::size_t>(1 + num_covariates + num_factors), false);
    for (Index j = 1; j <= num_covariates; ++j) mask.penalized[static_cast<std::size_t>(j)] = true;
    return mask;
}

Vector PenalizedFit::coefficients() const
{
    Vector theta(1 + beta.size() + gamma.size());
    theta[0] = intercept;
    theta.segment(1, beta.size()) = beta;
    theta.tail(gamma.size()) = gamma;
    return theta;
}

double soft_threshold(double x, double t) noexcept
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_problem(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask)
{
    if (W.rows() < 2) fail(ErrorKind::BadDimension, "need at least two observations");
    if (W.cols() != mask.size()) {
        fail(ErrorKind::BadDimension, "design has " + std::to_string(W.cols()) + " columns, mask covers " +
                                          std::to_string(mask.size()));
    }
    if (y.size() != W.rows()) {
        fail(ErrorKind::BadDimension,
             "response length " + std::to_string(y.size()) + " != rows " + std::to_string(W.rows()));
    }
    if (mask.size() < 1 || mask.penalized[0]) {
        fail(ErrorKind::BadDimension, "intercept position must be present and unpenalized");
    }
    if ((W.col(0).array() != 1.0).any()) {
        fail(ErrorKind::BadDimension, "first design column must be all ones");
    }
    require_finite(W, "design");
    require_finite(y, "response");
    validate_response(family, y);
}

/// Column-major working copy of the problem plus the coordinate-descent machinery.
class Problem
{
public:
    Problem(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
            const std::vector<Index>* rows = nullptr)
        : family_(family), pen_(mask.penalized), nuisance_(mask.nuisance)
    {
        if (rows) {
            X_.resize(static_cast<Index>(rows->size()), W.cols());
            y_.resize(static_cast<Index>(rows->size()));
            for (std::size_t i = 0; i < rows->size(); ++i) {
                X_.row(static_cast<Index>(i)) = W.row((*rows)[i]);
                y_[static_cast<Index>(i)] = y[(*rows)[i]];
            }
        } else {
            X_ = W;
            y_ = y;
        }
        n_ = X_.rows();
        q_ = X_.cols();
        inv_n_ = 1.0 / static_cast<double>(n_);
        colsq_ = X_.colwise().squaredNorm().transpose() * inv_n_;
        for (Index j = 0; j < q_; ++j) {
            if (!pen_[static_cast<std::size_t>(j)]) unpenalized_.push_back(j);
        }
    }

    Index n() const noexcept { return n_; }
    Index q() const noexcept { return q_; }

    Vector predictor(const Vector& theta) const
    {
        Vector z = Vector::Zero(n_);
        for (Index j = 0; j < q_; ++j) {
            if (theta[j] != 0.0) z.noalias() += theta[j] * X_.col(j);
        }
        return z;
    }

    Vector predictor_rows(const DenseMatrix& W, const std::vector<Index>& rows, const Vector& theta) const
    {
        Vector z(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) z[static_cast<Index>(i)] = W.row(rows[i]).dot(theta);
        return z;
    }

    double loss(const Vector& z) const
    {
        double total = 0.0;
        for (Index t = 0; t < n_; ++t) total += -y_[t] * z[t] + family_.cumulant(z[t]);
        return total * inv_n_;
    }

    double penalty(const Vector& theta) const
    {
        double total = 0.0;
        for (Index j = 0; j < q_; ++j) {
            if (pen_[static_cast<std::size_t>(j)]) total += std::abs(theta[j]);
        }
        return total;
    }

    double objective(const Vector& theta, double lambda) const
    {
        const double pen = penalty(theta);
        return loss(predictor(theta)) + (pen == 0.0 ? 0.0 : lambda * pen);
    }

    Vector score_from_predictor(const Vector& z) const
    {
        Vector r(n_);
        for (Index t = 0; t < n_; ++t) r[t] = family_.mean(z[t]) - y_[t];
        return X_.transpose() * r * inv_n_;
    }

    double kkt(const Vector& theta, const Vector& g, double lambda) const
    {
        double worst = 0.0;
        for (Index j = 0; j < q_; ++j) {
            double v;
            if (!pen_[static_cast<std::size_t>(j)]) {
                v = std::abs(g[j]);
            } else if (theta[j] != 0.0) {
                v = std::abs(g[j] + lambda * (theta[j] > 0.0 ? 1.0 : -1.0));
            } else {
                v = std::max(std::abs(g[j]) - lambda, 0.0);
            }
            worst = std::max(worst, v);
        }
        return worst;
    }

    PenalizedFit package(const Vector& theta, double lambda, Index sweeps, bool converged) const
    {
        PenalizedFit fit;
        const Index b = q_ - 1 - nuisance_;
        fit.intercept = theta[0];
        fit.beta = theta.segment(1, b);
        fit.gamma = theta.tail(nuisance_);
        fit.lambda = lambda;
        for (Index j = 0; j < b; ++j) {
            if (fit.beta[j] != 0.0) fit.active_set.push_back(j);
        }
        const Vector z = predictor(theta);
        const double pen = penalty(theta);
        fit.objective = loss(z) + (pen == 0.0 ? 0.0 : lambda * pen);
        if (!std::isfinite(fit.objective)) {
            fail(ErrorKind::NonFiniteObjective, "objective is not finite; the design may be degenerate");
        }
        fit.kkt_max_violation = kkt(theta, score_from_predictor(z), lambda);
        fit.iterations = sweeps;
        fit.converged = converged;
        return fit;
    }

    /// Unpenalized coordinates only.
    PenalizedFit solve_null(const SolverOptions& opts) const
    {
        Vector theta = Vector::Zero(q_);
        Index sweeps = 0;
        const bool ok = run(theta, 0.0, unpenalized_, opts, sweeps);
        if (opts.polish) polish(theta, 0.0, opts, -1.0);
        return package(theta, 0.0, sweeps, ok);
    }

    double lambda_max(const PenalizedFit& null_fit) const
    {
        const Vector g = score_from_predictor(predictor(null_fit.coefficients()));
        double best = 0.0;
        for (Index j = 0; j < q_; ++j) {
            if (pen_[static_cast<std::size_t>(j)]) best = std::max(best, std::abs(g[j]));
        }
        return best;
    }

    double degeneracy_scale() const
    {
        return (1.0 + y_.cwiseAbs().maxCoeff()) * std::sqrt(colsq_.maxCoeff());
    }

    PenalizedFit solve(double lambda, Vector theta, double prev_lambda, const SolverOptions& opts) const
    {
        std::vector<char> in_work(static_cast<std::size_t>(q_), 1);
        if (std::isfinite(prev_lambda) && prev_lambda >= lambda) {
            const Vector g = score_from_predictor(predictor(theta));
            const double cut = 2.0 * lambda - prev_lambda;
            for (Index j = 0; j < q_; ++j) {
                if (pen_[static_cast<std::size_t>(j)] && theta[j] == 0.0 && std::abs(g[j]) < cut) {
                    in_work[static_cast<std::size_t>(j)] = 0;
                }
            }
        }

        // Coordinate descent runs in sweep budgets that double; after each budget
        // the exact active-set solve is tried and ends the fit once it certifies
        // optimality. Otherwise descent continues to its own tolerance.
        const Vector warm = theta;
        Index sweeps = 0;
        bool ok = false;
        const double target = 1e-9 * std::max(1.0, lambda);
        SolverOptions budget = opts;
        Index gap = kFirstBudget;
        for (;;) {
            budget.max_sweeps = opts.polish ? std::min(opts.max_sweeps, sweeps + gap) : opts.max_sweeps;
            const bool done = expand_and_run(theta, lambda, in_work, budget, sweeps);
            if (opts.polish) {
                Vector candidate = theta;
                bool replaced = polish(candidate, lambda, opts, done ? -1.0 : target);
                if (!replaced && !done && family_.kind == Family::Linear) {
                    // The descent iterate can carry more nonzeros than rows; the warm start is the fallback.
                    replaced = feature_sign(candidate, lambda, opts, target);
                    if (!replaced && gap == kFirstBudget) {
                        candidate = warm;
                        replaced = feature_sign(candidate, lambda, opts, target);
                    }
                }
                if (replaced) {
                    theta = candidate;
                    ok = true;
                    break;
                }
            }
            if (done) {
                ok = true;
                break;
            }
            if (sweeps >= opts.max_sweeps) break;
            gap *= 2;
        }
        return package(theta, lambda, sweeps, ok);
    }

private:
    static constexpr Index kFirstBudget = 3;

    /// Runs the solver on the working set, admitting outside coordinates that violate KKT.
    bool expand_and_run(Vector& theta, double lambda, std::vector<char>& in_work, const SolverOptions& opts,
                        Index& sweeps) const
    {
        for (;;) {
            std::vector<Index> working;
            for (Index j = 0; j < q_; ++j) {
                if (in_work[static_cast<std::size_t>(j)]) working.push_back(j);
            }
            if (!run(theta, lambda, working, opts, sweeps)) return false;

            const Vector g = score_from_predictor(predictor(theta));
            bool grew = false;
            for (Index j = 0; j < q_; ++j) {
                if (!in_work[static_cast<std::size_t>(j)] && colsq_[j] > 0.0 && std::abs(g[j]) > lambda) {
                    in_work[static_cast<std::size_t>(j)] = 1;
                    grew = true;
                }
            }
            if (!grew) return true;
        }
    }

    double sweep(const Vector* w, const Vector& d, Vector& theta, Vector& resid, double lambda,
                 const std::vector<Index>& coords) const
    {
        double biggest = 0.0;
        for (const Index j : coords) {
            if (!(d[j] > 0.0)) continue;
            const auto xj = X_.col(j);
            const double g = (w ? (xj.array() * w->array() * resid.array()).sum() : xj.dot(resid)) * inv_n_;
            const double u = g + d[j] * theta[j];
            const double next = pen_[static_cast<std::size_t>(j)] ? soft_threshold(u, lambda) / d[j] : u / d[j];
            const double delta = next - theta[j];
            if (delta != 0.0) {
                theta[j] = next;
                resid.noalias() -= delta * xj;
                biggest = std::max(biggest, std::abs(delta));
            }
        }
        return biggest;
    }

    /// Coordinate descent on (1/2n) sum w_t resid_t^2 + lambda |theta|_pen over `working`.
    bool descend(const Vector* w, const Vector& d, Vector& theta, Vector& resid, double lambda,
                 const std::vector<Index>& working, const SolverOptions& opts, Index& sweeps) const
    {
        auto report = [&] {
            if (!w && opts.trace) {
                const double pen = penalty(theta);
                opts.trace(0.5 * inv_n_ * (resid.squaredNorm() - y_.squaredNorm()) +
                           (pen == 0.0 ? 0.0 : lambda * pen));
            }
        };
        std::vector<Index> active;
        for (;;) {
            const double change = sweep(w, d, theta, resid, lambda, working);
            ++sweeps;
            report();
            if (change < opts.tol) return true;
            if (sweeps >= opts.max_sweeps) return false;

            active.clear();
            for (const Index j : working) {
                if (theta[j] != 0.0 || !pen_[static_cast<std::size_t>(j)]) active.push_back(j);
            }
            for (;;) {
                const double inner = sweep(w, d, theta, resid, lambda, active);
                ++sweeps;
                report();
                if (inner < opts.tol) break;
                if (sweeps >= opts.max_sweeps) return false;
            }
        }
    }

    bool run(Vector& theta, double lambda, const std::vector<Index>& working, const SolverOptions& opts,
             Index& sweeps) const
    {
        if (family_.kind == Family::Linear) {
            Vector resid = y_ - predictor(theta);
            return descend(nullptr, colsq_, theta, resid, lambda, working, opts, sweeps);
        }
        return irls(theta, lambda, working, opts, sweeps);
    }

    bool irls(Vector& theta, double lambda, const std::vector<Index>& working, const SolverOptions& opts,
              Index& sweeps) const
    {
        double current = objective(theta, lambda);
        Vector w(n_), zeta(n_), d = Vector::Zero(q_);
        for (Index it = 0; it < opts.max_irls; ++it) {
            const Vector z = predictor(theta);
            for (Index t = 0; t < n_; ++t) {
                const double mu = family_.mean(z[t]);
                w[t] = std::max(family_.variance(z[t]), opts.weight_floor);
                zeta[t] = std::clamp(z[t] + (y_[t] - mu) / w[t], -opts.working_clip, opts.working_clip);
            }
            for (const Index j : working) d[j] = X_.col(j).cwiseAbs2().dot(w) * inv_n_;

            Vector candidate = theta;
            Vector resid = zeta - z;
            const bool inner_ok = descend(&w, d, candidate, resid, lambda, working, opts, sweeps);

            double next = objective(candidate, lambda);
            if (next > current + 1e-12 * (1.0 + std::abs(current))) {
                const Vector direction = candidate - theta;
                double step = 1.0;
                for (int halving = 0; halving < 40 && next > current; ++halving) {
                    step *= 0.5;
                    candidate = theta + step * direction;
                    next = objective(candidate, lambda);
                }
                if (next > current) {
                    candidate = theta;
                    next = current;
                }
            }
            const double change = (candidate - theta).cwiseAbs().maxCoeff();
            theta = candidate;
            current = next;
            if (opts.trace) opts.trace(current);
            if (!std::isfinite(current)) {
                fail(ErrorKind::NonFiniteObjective, "objective became non-finite during IRLS");
            }
            if (change < opts.tol) return inner_ok;
            if (sweeps >= opts.max_sweeps) return false;
        }
        return false;
    }

    /**
     * Solves the stationarity equations restricted to the current support
     * (unpenalized coordinates plus nonzero penalized ones, signs held fixed).
     * The refined point replaces theta only if it keeps every sign and its KKT
     * residual is at most accept_below, or at most the current residual when
     * accept_below is negative. Returns whether theta was replaced.
     */
    bool polish(Vector& theta, double lambda, const SolverOptions& opts, double accept_below) const
    {
        std::vector<Index> support;
        for (Index j = 0; j < q_; ++j) {
            if (colsq_[j] > 0.0 && (!pen_[static_cast<std::size_t>(j)] || theta[j] != 0.0)) support.push_back(j);
        }
        const Index m = static_cast<Index>(support.size());
        if (m == 0 || m > n_) return false;

        Eigen::MatrixXd XA(n_, m);
        Vector sign = Vector::Zero(m);
        Vector start(m);
        for (Index k = 0; k < m; ++k) {
            const Index j = support[static_cast<std::size_t>(k)];
            XA.col(k) = X_.col(j);
            start[k] = theta[j];
            if (pen_[static_cast<std::size_t>(j)]) sign[k] = theta[j] > 0.0 ? 1.0 : -1.0;
        }

        Vector refined;
        if (family_.kind == Family::Linear) {
            const Eigen::MatrixXd gram = XA.transpose() * XA * inv_n_;
            const Vector rhs = XA.transpose() * y_ * inv_n_ - lambda * sign;
            Eigen::LLT<Eigen::MatrixXd> llt(gram);
            if (llt.info() != Eigen::Success) return false;
            const double floor = 1e-12 * gram.trace() / static_cast<double>(m);
            if ((llt.matrixLLT().diagonal().array().square() <= floor).any()) return false;
            refined = llt.solve(rhs);
        } else {
            refined = start;
            auto restricted = [&](const Vector& b) {
                const Vector z = XA * b;
                return loss(z) + lambda * sign.dot(b);
            };
            double value = restricted(refined);
            bool done = false;
            for (int it = 0; it < 50 && !done; ++it) {
                const Vector z = XA * refined;
                Vector r(n_), w(n_);
                for (Index t = 0; t < n_; ++t) {
                    r[t] = family_.mean(z[t]) - y_[t];
                    w[t] = family_.variance(z[t]);
                }
                const Vector grad = XA.transpose() * r * inv_n_ + lambda * sign;
                const Eigen::MatrixXd scaled = XA.array().colwise() * (w * inv_n_).cwiseSqrt().array();
                Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
                hess.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
                Eigen::LLT<Eigen::MatrixXd> llt(hess);
                if (llt.info() != Eigen::Success) return false;
                const double floor = 1e-12 * hess.trace() / static_cast<double>(m);
                if ((llt.matrixLLT().diagonal().array().square() <= floor).any()) return false;
                const Vector step = llt.solve(grad);
                double t = 1.0;
                Vector trial = refined - step;
                double trial_value = restricted(trial);
                while (trial_value > value && t > 1e-10) {
                    t *= 0.5;
                    trial = refined - t * step;
                    trial_value = restricted(trial);
                }
                if (trial_value > value) break;
                done = (t * step).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + refined.cwiseAbs().maxCoeff());
                refined = trial;
                value = trial_value;
            }
        }
        if (!refined.allFinite()) return false;
        for (Index k = 0; k < m; ++k) {
            if (sign[k] != 0.0 && !(refined[k] * sign[k] > 0.0)) return false;
        }

        Vector candidate = theta;
        for (Index k = 0; k < m; ++k) candidate[support[static_cast<std::size_t>(k)]] = refined[k];
        const double before = kkt(theta, score_from_predictor(predictor(theta)), lambda);
        const double after = kkt(candidate, score_from_predictor(predictor(candidate)), lambda);
        if (after > (accept_below >= 0.0 ? accept_below : before)) return false;
        theta = candidate;
        if (opts.trace) opts.trace(objective(theta, lambda));
        return true;
    }

    /**
     * Feature-sign search for the linear family: exact solves on a signed active
     * set, a line search that stops at sign changes, and admission of the worst
     * KKT violator. Replaces theta when the final KKT residual is at most
     * accept_below. Returns whether theta was replaced.
     */
    bool feature_sign(Vector& theta, double lambda, const SolverOptions& opts, double accept_below) const
    {
        std::vector<Index> active;
        Vector sign_of = Vector::Zero(q_);
        for (Index j = 0; j < q_; ++j) {
            if (colsq_[j] > 0.0 && (!pen_[static_cast<std::size_t>(j)] || theta[j] != 0.0)) {
                active.push_back(j);
                if (pen_[static_cast<std::size_t>(j)]) sign_of[j] = theta[j] > 0.0 ? 1.0 : -1.0;
            }
        }
        Vector current = theta;
        for (Index j = 0; j < q_; ++j) {
            if (colsq_[j] == 0.0) current[j] = 0.0;
        }

        const Index limit = 4 * q_ + 50;
        for (Index it = 0; it < limit; ++it) {
            const Index m = static_cast<Index>(active.size());
            if (m == 0 || m > n_) return false;
            Eigen::MatrixXd XA(n_, m);
            Vector start(m), s(m);
            for (Index k = 0; k < m; ++k) {
                const Index j = active[static_cast<std::size_t>(k)];
                XA.col(k) = X_.col(j);
                start[k] = current[j];
                s[k] = sign_of[j];
            }
            const Eigen::MatrixXd gram = XA.transpose() * XA * inv_n_;
            const Vector b = XA.transpose() * y_ * inv_n_;
            Eigen::LLT<Eigen::MatrixXd> llt(gram);
            if (llt.info() != Eigen::Success) return false;
            const double floor = 1e-12 * gram.trace() / static_cast<double>(m);
            if ((llt.matrixLLT().diagonal().array().square() <= floor).any()) return false;
            const Vector target = llt.solve(b - lambda * s);
            if (!target.allFinite()) return false;

            bool consistent = true;
            for (Index k = 0; k < m; ++k) {
                if (s[k] != 0.0 && !(target[k] * s[k] > 0.0)) consistent = false;
            }
            if (consistent) {
                for (Index k = 0; k < m; ++k) current[active[static_cast<std::size_t>(k)]] = target[k];
            } else {
                // Restricted objective along start -> target, evaluated at t = 1 and at every zero crossing.
                auto value = [&](const Vector& v) {
                    return 0.5 * v.dot(gram * v) - b.dot(v) + lambda * (s.array() != 0.0).select(v.cwiseAbs(), 0.0).sum();
                };
                const Vector dir = target - start;
                double best_t = 1.0;
                double best = value(target);
                for (Index k = 0; k < m; ++k) {
                    if (s[k] == 0.0 || start[k] == 0.0 || start[k] * target[k] > 0.0) continue;
                    const double t = start[k] / (start[k] - target[k]);
                    if (!(t > 0.0 && t < 1.0)) continue;
                    Vector v = start + t * dir;
                    v[k] = 0.0;
                    const double f = value(v);
                    if (f < best) {
                        best = f;
                        best_t = t;
                    }
                }
                if (!(best < value(start))) return false;
                Vector next = start + best_t * dir;
                std::vector<Index> kept;
                for (Index k = 0; k < m; ++k) {
                    const Index j = active[static_cast<std::size_t>(k)];
                    const bool crossed = s[k] != 0.0 && (next[k] * s[k] <= 0.0 ||
                                                         std::abs(next[k]) <= 1e-15 * std::abs(dir[k]));
                    if (crossed) {
                        current[j] = 0.0;
                        sign_of[j] = 0.0;
                    } else {
                        current[j] = next[k];
                        kept.push_back(j);
                    }
                }
                active.swap(kept);
                continue;
            }

            const Vector g = score_from_predictor(predictor(current));
            Index worst = -1;
            double excess = 0.0;
            for (Index j = 0; j < q_; ++j) {
                if (!pen_[static_cast<std::size_t>(j)] || current[j] != 0.0 || colsq_[j] == 0.0) continue;
                const double v = std::abs(g[j]) - lambda;
                if (v > excess) {
                    excess = v;
                    worst = j;
                }
            }
            if (worst < 0 || excess <= 0.25 * accept_below) {
                if (kkt(current, g, lambda) > accept_below) return false;
                theta = current;
                if (opts.trace) opts.trace(objective(theta, lambda));
                return true;
            }
            sign_of[worst] = g[worst] > 0.0 ? -1.0 : 1.0;
            active.push_back(worst);
        }
        return false;
    }

    Eigen::MatrixXd X_;
    Vector y_;
    GlmFamily family_;
    std::vector<bool> pen_;
    Index nuisance_ = 0;
    Index n_ = 0;
    Index q_ = 0;
    double inv_n_ = 0.0;
    Vector colsq_;
    std::vector<Index> unpenalized_;
};

void check_lambdas(const std::vector<double>& lambdas)
{
    if (lambdas.empty()) fail(ErrorKind::BadDimension, "empty lambda sequence");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > 0.0) || !std::isfinite(lambdas[k])) {
            fail(ErrorKind::BadDimension, "lambda values must be positive and finite");
        }
        if (k > 0 && !(lambdas[k] < lambdas[k - 1])) {
            fail(ErrorKind::BadDimension, "lambda sequence must be strictly decreasing");
        }
    }
}

LambdaPath path_on(const Problem& problem, const std::vector<double>& lambdas, const SolverOptions& options)
{
    LambdaPath path;
    path.lambdas = lambdas;
    path.fits.reserve(lambdas.size());
    PenalizedFit null_fit = problem.solve_null(options);
    const double top = problem.lambda_max(null_fit);
    const Vector theta_null = null_fit.coefficients();
    Vector theta = theta_null;
    double prev = std::max(top, lambdas.front());
    for (const double lambda : lambdas) {
        if (lambda >= top) {
            path.fits.push_back(problem.package(theta_null, lambda, null_fit.iterations, null_fit.converged));
        } else {
            path.fits.push_back(problem.solve(lambda, theta, prev, options));
        }
        theta = path.fits.back().coefficients();
        prev = lambda;
    }
    return path;
}

} // namespace

double penalized_objective(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                           const Vector& theta, double lambda)
{
    if (theta.size() != W.cols() || mask.size() != W.cols()) {
        fail(ErrorKind::BadDimension, "coefficient length does not match the design");
    }
    double pen = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        if (mask.penalized[static_cast<std::size_t>(j)]) pen += std::abs(theta[j]);
    }
    const Vector z = W * theta;
    return neg_loglik(family, y, z) + (pen == 0.0 ? 0.0 : lambda * pen);
}

PenalizedFit fit_penalized(const DenseMatrix& W, const Vector& y, const GlmFamily& family, double lambda,
                           const PenaltyMask& mask, const PenalizedFit* warm, const SolverOptions& options)
{
    validate_problem(W, y, family, mask);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        fail(ErrorKind::BadDimension, "lambda must be a finite non-negative number");
    }
    const Problem problem(W, y, family, mask);
    if (warm) {
        const Vector theta = warm->coefficients();
        if (theta.size() != problem.q()) fail(ErrorKind::BadDimension, "warm start has the wrong length");
        return problem.solve(lambda, theta, warm->lambda, options);
    }
    const PenalizedFit null_fit = problem.solve_null(options);
    if (lambda > 0.0 && lambda >= problem.lambda_max(null_fit)) {
        return problem.package(null_fit.coefficients(), lambda, null_fit.iterations, null_fit.converged);
    }
    return problem.solve(lambda, null_fit.coefficients(), kInf, options);
}

PenalizedFit fit_null(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                      const SolverOptions& options)
{
    validate_problem(W, y, family, mask);
    return Problem(W, y, family, mask).solve_null(options);
}

std::vector<double> lambda_path_grid(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                     const PenaltyMask& mask, Index n_lambdas, double ratio,
                                     const SolverOptions& options)
{
    validate_problem(W, y, family, mask);
    if (n_lambdas < 2) fail(ErrorKind::BadDimension, "need at least two lambda values");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::BadDimension, "lambda ratio must lie in (0, 1)");

    const Problem problem(W, y, family, mask);
    const double top = problem.lambda_max(problem.solve_null(options));
    if (!(top > 1e-12 * problem.degeneracy_scale())) {
        fail(ErrorKind::DegenerateInput, "lambda_max vanishes: the unpenalized block explains the response");
    }
    std::vector<double> grid(static_cast<std::size_t>(n_lambdas));
    const double log_top = std::log(top);
    const double log_step = std::log(ratio) / static_cast<double>(n_lambdas - 1);
    grid.front() = top;
    for (Index k = 1; k + 1 < n_lambdas; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(log_top + log_step * static_cast<double>(k));
    }
    grid.back() = ratio * top;
    return grid;
}

LambdaPath fit_path(const DenseMatrix& W, const Vector& y, const GlmFamily& family, const PenaltyMask& mask,
                    const std::vector<double>& lambdas, const SolverOptions& options)
{
    validate_problem(W, y, family, mask);
    check_lambdas(lambdas);
    return path_on(Problem(W, y, family, mask), lambdas, options);
}

std::vector<Index> assign_folds(Index n, Index n_folds, std::uint64_t seed, FoldScheme scheme)
{
    if (n_folds < 2 || n < n_folds) {
        fail(ErrorKind::BadDimension,
             "need 2 <= folds <= n, got folds=" + std::to_string(n_folds) + " n=" + std::to_string(n));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (scheme == FoldScheme::RandomPermutation) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<Index> fold_of(static_cast<std::size_t>(n));
    const Index base = n / n_folds;
    const Index extra = n % n_folds;
    Index pos = 0;
    for (Index f = 0; f < n_folds; ++f) {
        const Index size = base + (f < extra ? 1 : 0);
        for (Index i = 0; i < size; ++i) fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = f;
    }
    return fold_of;
}

CrossValidation cross_validate_with_folds(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                                          const PenaltyMask& mask, const std::vector<double>& lambdas,
                                          const std::vector<Index>& fold_of, const SolverOptions& options,
                                          CvLoss loss)
{
    validate_problem(W, y, family, mask);
    if (loss == CvLoss::Misclassification && family.kind != Family::Logistic) {
        fail(ErrorKind::BadLabel, "misclassification loss needs the logistic family");
    }
    check_lambdas(lambdas);
    if (static_cast<Index>(fold_of.size()) != W.rows()) {
        fail(ErrorKind::BadDimension, "fold assignment length differs from the number of rows");
    }
    const Index n_folds = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    if (n_folds < 2) fail(ErrorKind::BadDimension, "need at least two folds");

    const std::size_t L = lambdas.size();
    std::vector<std::vector<double>> scores(L);
    std::vector<std::vector<double>> excess(L);
    for (Index f = 0; f < n_folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < W.rows(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        if (test.empty()) continue;
        if (train.size() < 2) fail(ErrorKind::BadDimension, "a training fold has fewer than two rows");

        const Problem problem(W, y, family, mask, &train);
        const LambdaPath path = path_on(problem, lambdas, options);
        const Vector y_test = take_rows(y, test);
        // Binary responses have a saturated neg_loglik of zero; Gaussian ones of -mean(y^2)/2.
        const double saturated =
            family.kind == Family::Linear && loss == CvLoss::NegLogLik ? neg_loglik(family, y_test, y_test) : 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            const Vector z = problem.predictor_rows(W, test, path.fits[k].coefficients());
            double value = 0.0;
            if (loss == CvLoss::NegLogLik) {
                value = neg_loglik(family, y_test, z);
            } else {
                for (Index t = 0; t < z.size(); ++t) value += (z[t] > 0.0) != (y_test[t] > 0.5) ? 1.0 : 0.0;
                value /= static_cast<double>(z.size());
            }
            scores[k].push_back(value);
            excess[k].push_back(value - saturated);
        }
    }

    CrossValidation cv;
    cv.fold_of = fold_of;
    cv.mean_scores.resize(L);
    cv.standard_errors.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        const auto& s = scores[k];
        const auto& e = excess[k];
        const double folds = static_cast<double>(s.size());
        cv.mean_scores[k] = std::accumulate(s.begin(), s.end(), 0.0) / folds;
        // The spread is taken on the excess loss so that the per-fold response
        // offset of the Gaussian neg_loglik does not inflate it.
        const double m = std::accumulate(e.begin(), e.end(), 0.0) / folds;
        double ss = 0.0;
        for (const double v : e) ss += (v - m) * (v - m);
        cv.standard_errors[k] = s.size() > 1 ? std::sqrt(ss / (folds - 1.0) / folds) : 0.0;
    }
    // lambdas decrease, so the first minimizer is the largest lambda among ties
    std::size_t best = 0;
    for (std::size_t k = 1; k < L; ++k) {
        if (cv.mean_scores[k] < cv.mean_scores[best]) best = k;
    }
    cv.best_index = static_cast<Index>(best);
    cv.best_lambda = lambdas[best];
    std::size_t one_se = best;
    for (std::size_t k = 0; k < best; ++k) {
        if (cv.mean_scores[k] <= cv.mean_scores[best] + cv.standard_errors[best]) {
            one_se = k;
            break;
        }
    }
    cv.one_se_index = static_cast<Index>(one_se);
    cv.one_se_lambda = lambdas[one_se];
    return cv;
}

CrossValidation cross_validate(const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                               const PenaltyMask& mask, const std::vector<double>& lambdas, Index n_folds,
                               std::uint64_t seed, const SolverOptions& options, FoldScheme scheme, CvLoss loss)
{
    return cross_validate_with_folds(W, y, family, mask, lambdas, assign_folds(W.rows(), n_folds, seed, scheme),
                                     options, loss);
}

double kkt_check(const PenalizedFit& fit, const DenseMatrix& W, const Vector& y, const GlmFamily& family,
                 const PenaltyMask& mask)
{
    const Vector theta = fit.coefficients();
    if (theta.size() != W.cols() || mask.size() != W.cols() || y.size() != W.rows()) {
        fail(ErrorKind::BadDimension, "fit, design and mask shapes disagree");
    }
    const Vector z = W * theta;
    const Vector g = W.transpose() * gradient_residuals(family, y, z) / static_cast<double>(W.rows());
    double worst = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        double v;
        if (!mask.penalized[static_cast<std::size_t>(j)]) {
            v = std::abs(g[j]);
        } else if (theta[j] != 0.0) {
            v = std::abs(g[j] + fit.lambda * (theta[j] > 0.0 ? 1.0 : -1.0));
        } else {
            v = std::max(std::abs(g[j]) - fit.lambda, 0.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace farmselect
