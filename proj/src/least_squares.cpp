#include "least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ericson/error.hpp"

namespace ericson::detail {

namespace {

struct Evaluation {
    Eigen::VectorXd residual; // y - model
    Eigen::MatrixXd jacobian; // d model / d p
    double cost = std::numeric_limits<double>::infinity();
    bool valid = false;
};

Evaluation evaluate(const LeastSquaresProblem& pr, const std::vector<double>& p) {
    const auto n = static_cast<Eigen::Index>(pr.x.size());
    const auto k = static_cast<Eigen::Index>(p.size());
    Evaluation ev;
    ev.residual.resize(n);
    ev.jacobian.resize(n, k);
    std::vector<double> grad(p.size());
    double cost = 0.0;
    try {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = pr.model(pr.x[i], p, grad);
            const double r = pr.y[i] - m;
            if (!std::isfinite(r)) return ev;
            ev.residual(i) = r;
            for (Eigen::Index j = 0; j < k; ++j) ev.jacobian(i, j) = grad[j];
            const double w = pr.weights.empty() ? 1.0 : pr.weights[i];
            cost += w * r * r;
        }
    } catch (const DomainError&) {
        return ev;
    }
    ev.cost = cost;
    ev.valid = true;
    return ev;
}

} // namespace

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& pr, std::vector<double> p,
                                       int max_iterations, double relative_step) {
    const auto n = static_cast<Eigen::Index>(pr.x.size());
    const auto k = static_cast<Eigen::Index>(p.size());
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    if (!pr.weights.empty())
        for (Eigen::Index i = 0; i < n; ++i) w(i) = pr.weights[i];

    auto clamp = [&](std::vector<double>& q) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (!pr.lower.empty()) q[j] = std::max(q[j], pr.lower[j]);
            if (!pr.upper.empty()) q[j] = std::min(q[j], pr.upper[j]);
        }
    };
    clamp(p);

    Evaluation cur = evaluate(pr, p);
    if (!cur.valid) throw DomainError("model undefined at the initial parameters");

    LeastSquaresResult out;
    double lambda = 1e-3;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const Eigen::MatrixXd jw = cur.jacobian.transpose() * w.asDiagonal();
        const Eigen::MatrixXd normal = jw * cur.jacobian;
        const Eigen::VectorXd gradient = jw * cur.residual;

        bool accepted = false;
        bool tiny = false;
        while (lambda < 1e20) {
            Eigen::MatrixXd damped = normal;
            for (Eigen::Index j = 0; j < k; ++j)
                damped(j, j) += lambda * std::max(normal(j, j), 1e-12);
            const Eigen::VectorXd delta = damped.ldlt().solve(gradient);

            std::vector<double> trial = p;
            for (Eigen::Index j = 0; j < k; ++j) trial[j] += delta(j);
            clamp(trial);

            double step = 0.0, scale = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) {
                step += (trial[j] - p[j]) * (trial[j] - p[j]);
                scale += p[j] * p[j];
            }
            tiny = std::sqrt(step) <= relative_step * (std::sqrt(scale) + relative_step);

            Evaluation next = evaluate(pr, trial);
            if (next.valid && next.cost <= cur.cost) {
                p = std::move(trial);
                cur = std::move(next);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                break;
            }
            if (tiny) break;
            lambda *= 10.0;
        }
        if (tiny) {
            out.converged = true;
            ++iter;
            break;
        }
        if (!accepted) break;
    }

    out.params = p;
    out.iterations = iter;
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sq += cur.residual(i) * cur.residual(i);
    out.rms = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;

    const Eigen::MatrixXd normal = cur.jacobian.transpose() * w.asDiagonal() * cur.jacobian;
    const double dof = static_cast<double>(std::max<Eigen::Index>(n - k, 1));
    const double reduced = cur.cost / dof;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    out.stderr_.assign(p.size(), std::numeric_limits<double>::quiet_NaN());
    if (lu.isInvertible()) {
        const Eigen::MatrixXd cov = lu.inverse() * reduced;
        for (Eigen::Index j = 0; j < k; ++j) out.stderr_[j] = std::sqrt(std::max(cov(j, j), 0.0));
    }
    return out;
}

} // namespace ericson::detail
