#include <Eigen/Dense>
#include <cmath>

#include "sictf/errors.hpp"
#include "sictf/factorization.hpp"
#include "sictf/log.hpp"

namespace sictf {

namespace {

double objective_uncon(const TripleTensor& X, const FactorModel& model,
                       const FactorizationConfig& cfg) {
    const Mat G = model.A.transpose() * model.A;
    double obj = cfg.lambda_a * model.A.squaredNorm();
    for (int k = 0; k < X.m; ++k) {
        const Mat& R = model.R[k];
        double x_sq = X.slices[k].squaredNorm();
        double cross = 0.0;
        for (int outer = 0; outer < X.slices[k].outerSize(); ++outer)
            for (SparseMat::InnerIterator it(X.slices[k], outer); it; ++it)
                cross += it.value() *
                         model.A.row(it.row()).dot(R * model.A.row(it.col()).transpose());
        obj += x_sq - 2.0 * cross + (G * R * G).cwiseProduct(R).sum();
        obj += cfg.lambda_r * R.squaredNorm();
    }
    return obj;
}

}  // namespace

FactorModel fit_unconstrained(const TripleTensor& X, const FactorizationConfig& cfg) {
    cfg.validate();
    if (cfg.lambda_np != 0 || cfg.lambda_rel != 0)
        throw UsageError("fit_unconstrained does not support side information; "
                         "set lambda_np = lambda_rel = 0");

    FactorModel model = init_factors(X.n, X.m, 0, cfg);
    model.config.nonneg = false;
    const int c = cfg.rank;

    double prev = objective_uncon(X, model, cfg);
    model.fit_trace.push_back(prev);

    Mat prev_A;
    std::vector<Mat> prev_R;
    for (int t = 1; t <= cfg.max_iters; ++t) {
        Mat sweep_A = model.A;
        std::vector<Mat> sweep_R = model.R;
        // A half-sweep: least squares against the current A on the opposite side
        {
            const Mat G = model.A.transpose() * model.A;
            Mat num = Mat::Zero(X.n, c);
            Mat den = cfg.lambda_a * Mat::Identity(c, c);
            for (int k = 0; k < X.m; ++k) {
                const Mat& R = model.R[k];
                num += X.slices[k] * (model.A * R.transpose()) +
                       X.slices[k].transpose() * (model.A * R);
                den += R * G * R.transpose() + R.transpose() * G * R;
            }
            Eigen::FullPivLU<Mat> lu(den);
            if (!lu.isInvertible()) {
                if (cfg.lambda_a == 0 && cfg.lambda_r == 0)
                    throw NumericalError(
                        "singular normal equations; set lambda_a or lambda_r > 0");
                throw NumericalError("singular normal equations in A update at iteration " +
                                     std::to_string(t));
            }
            model.A = lu.solve(num.transpose()).transpose();
        }
        model.half_sweep_trace.push_back(objective_uncon(X, model, cfg));

        // R half-sweep: exact ridge minimizer per slice via the
        // eigendecomposition of A^T A
        {
            const Mat G = model.A.transpose() * model.A;
            Eigen::SelfAdjointEigenSolver<Mat> eig(G);
            const Mat& Q = eig.eigenvectors();
            const Eigen::VectorXd& lam = eig.eigenvalues();
            for (int k = 0; k < X.m; ++k) {
                Mat M = model.A.transpose() * (X.slices[k] * model.A);
                Mat Mt = Q.transpose() * M * Q;
                for (int i = 0; i < c; ++i)
                    for (int j = 0; j < c; ++j) {
                        double d = lam(i) * lam(j) + cfg.lambda_r;
                        if (d == 0.0)
                            throw NumericalError(
                                "singular normal equations; set lambda_a or lambda_r > 0");
                        Mt(i, j) /= d;
                    }
                model.R[k] = Q * Mt * Q.transpose();
            }
        }
        double obj = objective_uncon(X, model, cfg);

        // Momentum over sweep iterates: extrapolate along the last sweep
        // direction and keep the best strictly improving candidate. Sweep 1
        // has no direction yet; acceptance keeps both traces non-increasing.
        if (t >= 2 && std::isfinite(obj)) {
            FactorModel cand = model;
            for (double beta : {16.0, 8.0, 4.0, 2.0, 1.0, 0.5}) {
                cand.A = model.A + beta * (model.A - prev_A);
                for (int k = 0; k < X.m; ++k)
                    cand.R[k] = model.R[k] + beta * (model.R[k] - prev_R[k]);
                double cand_obj = objective_uncon(X, cand, cfg);
                if (std::isfinite(cand_obj) && cand_obj < obj) {
                    model.A = cand.A;
                    model.R = cand.R;
                    obj = cand_obj;
                    break;
                }
            }
        }
        prev_A = std::move(sweep_A);
        prev_R = std::move(sweep_R);
        model.half_sweep_trace.push_back(obj);

        if (!std::isfinite(obj))
            throw NumericalError("non-finite objective at iteration " + std::to_string(t));
        model.fit_trace.push_back(obj);
        log::debug("fit_unconstrained", "sweep ", t, " objective ", obj);
        if (prev == 0.0) break;
        if (std::abs(obj - prev) / prev < cfg.tol) break;
        prev = obj;
    }
    return model;
}

}  // namespace sictf
