#include "sictf/factorization.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sictf/errors.hpp"
#include "sictf/log.hpp"

namespace sictf {

void FactorizationConfig::validate() const {
    if (rank < 1) throw UsageError("rank must be >= 1");
    if (lambda_r < 0 || lambda_np < 0 || lambda_a < 0 || lambda_v < 0 || lambda_rel < 0)
        throw UsageError("lambda values must be non-negative");
    if (alpha != 1.0) throw UsageError("update exponent alpha is fixed at 1");
    if (max_iters < 1) throw UsageError("max_iters must be >= 1");
    if (!(tol > 0)) throw UsageError("tol must be > 0");
    if (!(eps_guard > 0)) throw UsageError("eps_guard must be > 0");
    if (threads < 1) throw UsageError("threads must be >= 1");
}

FactorModel init_factors(int n, int m, int h, const FactorizationConfig& cfg) {
    if (n < 1 || m < 1) throw DataError("init_factors: dimensions must be >= 1");
    FactorModel model;
    model.config = cfg;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.1, 1.1);
    auto fill = [&](Mat& mat, int rows, int cols) {
        mat.resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) mat(i, j) = unif(rng);
    };
    fill(model.A, n, cfg.rank);
    model.R.resize(m);
    for (int k = 0; k < m; ++k) fill(model.R[k], cfg.rank, cfg.rank);
    fill(model.V, cfg.rank, std::max(h, 0));
    return model;
}

namespace {

// |X - A R A^T|_F^2 without forming the dense n x n reconstruction:
// |X|^2 - 2 <X, A R A^T> + tr(G R G R^T), G = A^T A.
double slice_residual_sq(const SparseMat& X, const Mat& A, const Mat& R, const Mat& G) {
    double x_sq = X.squaredNorm();
    double cross = 0.0;
    for (int outer = 0; outer < X.outerSize(); ++outer)
        for (SparseMat::InnerIterator it(X, outer); it; ++it)
            cross += it.value() * A.row(it.row()).dot(R * A.row(it.col()).transpose());
    double recon_sq = (G * R * G).cwiseProduct(R).sum();
    double val = x_sq - 2.0 * cross + recon_sq;
    return std::max(val, 0.0);
}

double coupling_residual_sq(const SparseMat& W, const Mat& A, const Mat& V) {
    double w_sq = W.squaredNorm();
    double cross = 0.0;
    for (int outer = 0; outer < W.outerSize(); ++outer)
        for (SparseMat::InnerIterator it(W, outer); it; ++it)
            cross += it.value() * A.row(it.row()).dot(V.col(it.col()));
    Mat G = A.transpose() * A;
    double recon_sq = (V.transpose() * G * V).trace();
    return std::max(w_sq - 2.0 * cross + recon_sq, 0.0);
}

void check_dims(const TripleTensor& X, const NpHypernymMatrix& W,
                const RelSimilarityMatrix& S, const FactorModel& model) {
    if (model.A.rows() != X.n) throw DataError("A rows do not match tensor n");
    if (static_cast<int>(model.R.size()) != X.m)
        throw DataError("core slice count does not match tensor m");
    if (W.n != X.n) throw DataError("W rows do not match tensor n");
    if (S.m != X.m) throw DataError("S size does not match tensor m");
    if (model.V.cols() != W.h()) throw DataError("V columns do not match hypernym count");
}

// Runs fn(k) for k in [0, m) across cfg.threads workers.
void parallel_slices(int m, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || m <= 1) {
        for (int k = 0; k < m; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    int workers = std::min(threads, m);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int k = next.fetch_add(1); k < m; k = next.fetch_add(1)) fn(k);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

double objective(const TripleTensor& X, const NpHypernymMatrix& W,
                 const RelSimilarityMatrix& S, const FactorModel& model,
                 const FactorizationConfig& cfg) {
    check_dims(X, W, S, model);
    const Mat G = model.A.transpose() * model.A;

    double obj = 0.0;
    for (int k = 0; k < X.m; ++k) {
        obj += slice_residual_sq(X.slices[k], model.A, model.R[k], G);
        obj += cfg.lambda_r * model.R[k].squaredNorm();
    }
    if (W.h() > 0)
        obj += cfg.lambda_np * coupling_residual_sq(W.W, model.A, model.V);
    obj += cfg.lambda_a * model.A.squaredNorm();
    obj += cfg.lambda_v * model.V.squaredNorm();
    if (cfg.lambda_rel > 0) {
        // full double sum; each unordered pair appears twice
        double rel = 0.0;
        for (auto [i, j] : S.pairs) rel += (model.R[i] - model.R[j]).squaredNorm();
        obj += cfg.lambda_rel * 2.0 * rel;
    }
    return obj;
}

namespace {

// The A-dependent part of the objective, used by the descent safeguard in
// update_A.
double partial_objective_A(const TripleTensor& X, const NpHypernymMatrix& W,
                           const FactorModel& model, const FactorizationConfig& cfg,
                           const Mat& A) {
    const Mat G = A.transpose() * A;
    double obj = 0.0;
    for (int k = 0; k < X.m; ++k) obj += slice_residual_sq(X.slices[k], A, model.R[k], G);
    if (cfg.lambda_np > 0 && W.h() > 0)
        obj += cfg.lambda_np * coupling_residual_sq(W.W, A, model.V);
    obj += cfg.lambda_a * A.squaredNorm();
    return obj;
}

}  // namespace

Mat update_A(const TripleTensor& X, const NpHypernymMatrix& W, const FactorModel& model,
             const FactorizationConfig& cfg) {
    const Mat& A = model.A;
    const int c = static_cast<int>(A.cols());
    const Mat G = A.transpose() * A;

    std::vector<Mat> num_k(X.m), bt_k(X.m);
    parallel_slices(X.m, cfg.threads, [&](int k) {
        const Mat& Rk = model.R[k];
        num_k[k] = X.slices[k] * (A * Rk.transpose()) + X.slices[k].transpose() * (A * Rk);
        bt_k[k] = Rk * G * Rk.transpose() + Rk.transpose() * G * Rk;
    });
    // fixed-order reduction keeps results bitwise reproducible
    Mat num = Mat::Zero(X.n, c);
    Mat Bt = Mat::Zero(c, c);
    for (int k = 0; k < X.m; ++k) {
        num += num_k[k];
        Bt += bt_k[k];
    }
    if (cfg.lambda_np > 0 && W.h() > 0) num += cfg.lambda_np * (W.W * model.V.transpose());

    Mat inner = Bt + cfg.lambda_a * Mat::Identity(c, c);
    if (cfg.lambda_np > 0 && W.h() > 0)
        inner += cfg.lambda_np * (model.V * model.V.transpose());
    Mat den = (A * inner).array() + cfg.eps_guard;
    Mat cand = A.cwiseProduct(num).cwiseQuotient(den);

    // Descent safeguard: the multiplicative rule has no monotonicity
    // guarantee for the quartic A R A^T term and can overshoot badly.
    // When the candidate raises the A-part of the objective, halve the
    // step toward the current iterate; the raw rule is kept whenever it
    // already descends. Zero entries, fixed points and non-negativity
    // are all preserved by the interpolation.
    const double base = partial_objective_A(X, W, model, cfg, A);
    for (int tries = 0; tries < 64; ++tries) {
        if (partial_objective_A(X, W, model, cfg, cand) <= base) return cand;
        cand = 0.5 * (cand + A);
    }
    return A;
}

Mat update_R(const TripleTensor& X, const RelSimilarityMatrix& S, const FactorModel& model,
             const FactorizationConfig& cfg, int k) {
    const Mat& A = model.A;
    const Mat& Rk = model.R[k];
    const Mat G = A.transpose() * A;

    Mat num = A.transpose() * (X.slices[k] * A);
    double degree = 0.0;
    if (cfg.lambda_rel > 0) {
        for (int j = 0; j < S.m; ++j) {
            if (j != k && S.contains(k, j)) {
                num += 2.0 * cfg.lambda_rel * model.R[j];
                degree += 1.0;
            }
        }
    }
    Mat den = (G * Rk * G + (2.0 * cfg.lambda_rel * degree + cfg.lambda_r) * Rk).array() +
              cfg.eps_guard;
    return Rk.cwiseProduct(num).cwiseQuotient(den);
}

Mat update_V(const NpHypernymMatrix& W, const FactorModel& model,
             const FactorizationConfig& cfg) {
    const Mat& A = model.A;
    const Mat& V = model.V;
    Mat num = cfg.lambda_np * (A.transpose() * W.W);
    Mat den = (cfg.lambda_np * (A.transpose() * A) * V + cfg.lambda_v * V).array() +
              cfg.eps_guard;
    return V.cwiseProduct(num).cwiseQuotient(den);
}

namespace {

// One pass of ridge-regularized alternating least squares projected onto
// the non-negative orthant. Solves the A subproblem with the incoming A
// inside the quartic term, then each R_k exactly (a Stein equation solved
// in the eigenbasis of A^T A; coupled slices take a Jacobi pass against
// the incoming R), then V. Used only as a descent-checked acceleration
// candidate inside fit(); the multiplicative sweep stays the reference
// update.
FactorModel als_refine(const TripleTensor& X, const NpHypernymMatrix& W,
                       const RelSimilarityMatrix& S, const FactorModel& in,
                       const FactorizationConfig& cfg) {
    FactorModel out = in;
    const int c = static_cast<int>(in.A.cols());
    const bool couple = cfg.lambda_np > 0 && W.h() > 0;

    Mat G = in.A.transpose() * in.A;
    Mat N = Mat::Zero(X.n, c);
    Mat M = cfg.lambda_a * Mat::Identity(c, c);
    for (int k = 0; k < X.m; ++k) {
        N += X.slices[k] * (in.A * in.R[k].transpose()) +
             X.slices[k].transpose() * (in.A * in.R[k]);
        M += in.R[k] * G * in.R[k].transpose() + in.R[k].transpose() * G * in.R[k];
    }
    if (couple) {
        N += cfg.lambda_np * (W.W * in.V.transpose());
        M += cfg.lambda_np * (in.V * in.V.transpose());
    }
    Eigen::LDLT<Mat> solver(M);
    if (solver.info() != Eigen::Success) return out;
    out.A = solver.solve(N.transpose()).transpose().cwiseMax(0.0);

    Mat G2 = out.A.transpose() * out.A;
    Eigen::SelfAdjointEigenSolver<Mat> es(G2);
    if (es.info() != Eigen::Success) return out;
    const Mat& Q = es.eigenvectors();
    const Eigen::VectorXd& lam = es.eigenvalues();
    for (int k = 0; k < X.m; ++k) {
        Mat rhs = out.A.transpose() * (X.slices[k] * out.A);
        double degree = 0.0;
        if (cfg.lambda_rel > 0) {
            for (int j = 0; j < S.m; ++j) {
                if (j != k && S.contains(k, j)) {
                    rhs += 2.0 * cfg.lambda_rel * in.R[j];
                    degree += 1.0;
                }
            }
        }
        const double mu = cfg.lambda_r + 2.0 * cfg.lambda_rel * degree;
        Mat T = Q.transpose() * rhs * Q;
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < c; ++i) T(i, j) /= lam(i) * lam(j) + mu;
        out.R[k] = (Q * T * Q.transpose()).cwiseMax(0.0);
    }

    if (couple) {
        Eigen::LDLT<Mat> vs(cfg.lambda_np * G2 + cfg.lambda_v * Mat::Identity(c, c));
        if (vs.info() == Eigen::Success)
            out.V = vs.solve(cfg.lambda_np * (out.A.transpose() * W.W)).cwiseMax(0.0);
    }
    return out;
}

// Ridge rebalancing along the residual-invariant rescaling A -> A D,
// R_k -> D^-1 R_k D^-1, V -> D^-1 V with positive diagonal D. The
// reconstruction terms are unchanged, so only the regularizers move;
// without this step they keep creeping along the scaling manifold and the
// relative-change stopping rule never fires. The optimal t_j = d_j^2
// minimizes phi(t) = a t + b / t + g / t^2 per column (coordinate-wise
// Newton, a few passes).
FactorModel rebalance(const FactorModel& in, const FactorizationConfig& cfg,
                      const RelSimilarityMatrix& S) {
    const int c = static_cast<int>(in.A.cols());
    const int m = static_cast<int>(in.R.size());

    Mat P = Mat::Zero(c, c);  // P(a,b): quadratic weight on 1/(t_a t_b)
    for (int k = 0; k < m; ++k) P += cfg.lambda_r * in.R[k].cwiseAbs2();
    if (cfg.lambda_rel > 0)
        for (auto [i, j] : S.pairs)
            P += 2.0 * cfg.lambda_rel * (in.R[i] - in.R[j]).cwiseAbs2();

    Eigen::VectorXd tv = Eigen::VectorXd::Ones(c);
    for (int pass = 0; pass < 8; ++pass) {
        for (int j = 0; j < c; ++j) {
            const double a = cfg.lambda_a * in.A.col(j).squaredNorm();
            double b = cfg.lambda_v * in.V.row(j).squaredNorm();
            for (int i = 0; i < c; ++i)
                if (i != j) b += (P(i, j) + P(j, i)) / tv(i);
            const double g = P(j, j);
            if (a <= 0.0 || b + g <= 0.0) continue;
            double t = tv(j);
            for (int it = 0; it < 30; ++it) {
                const double f = a - b / (t * t) - 2.0 * g / (t * t * t);
                const double fp = 2.0 * b / (t * t * t) + 6.0 * g / (t * t * t * t);
                double nt = t - f / fp;
                if (!(nt > 0.0)) nt = 0.5 * t;
                const bool done = std::abs(nt - t) <= 1e-12 * t;
                t = nt;
                if (done) break;
            }
            tv(j) = t;
        }
    }

    FactorModel out = in;
    Eigen::VectorXd d = tv.cwiseSqrt();
    for (int j = 0; j < c; ++j) out.A.col(j) *= d(j);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < c; ++i) out.R[k](i, j) = in.R[k](i, j) / (d(i) * d(j));
    for (int j = 0; j < c; ++j) out.V.row(j) /= d(j);
    return out;
}

}  // namespace

FactorModel fit(const TripleTensor& X, const NpHypernymMatrix& W,
                const RelSimilarityMatrix& S, const FactorizationConfig& cfg) {
    cfg.validate();
    FactorModel model = init_factors(X.n, X.m, W.h(), cfg);
    check_dims(X, W, S, model);

    const bool update_v = cfg.lambda_np > 0 && W.h() > 0;
    double prev = objective(X, W, S, model, cfg);
    model.fit_trace.push_back(prev);

    for (int t = 1; t <= cfg.max_iters; ++t) {
        FactorModel before = model;  // iterate entering this sweep
        model.A = update_A(X, W, model, cfg);
        std::vector<Mat> new_r(X.m);
        parallel_slices(X.m, cfg.threads,
                        [&](int k) { new_r[k] = update_R(X, S, model, cfg, k); });
        model.R = std::move(new_r);
        if (update_v) model.V = update_V(W, model, cfg);

        double obj = objective(X, W, S, model, cfg);

        // Acceleration: the multiplicative sweep alone crawls, so from
        // sweep 2 onward a short walk of projected ALS passes and a
        // ridge-rebalancing step are offered as candidates and kept only
        // when the objective strictly drops. Sweep 1 is left untouched so
        // a single-sweep run is the bare multiplicative sweep.
        if (t >= 2 && std::isfinite(obj)) {
            // Momentum along the sweep direction, repeated while it keeps
            // paying off: helps trajectories that crawl along a nearly
            // straight path where the ALS walk alone advances slowly.
            auto momentum_pass = [&](const FactorModel& start_anchor) {
                FactorModel anchor = start_anchor;
                for (int round = 0; round < 10; ++round) {
                    bool accepted = false;
                    for (double beta : {16.0, 8.0, 4.0, 2.0, 1.0, 0.5}) {
                        FactorModel cand = model;
                        cand.A = (model.A + beta * (model.A - anchor.A)).cwiseMax(0.0);
                        for (int k = 0; k < X.m; ++k)
                            cand.R[k] =
                                (model.R[k] + beta * (model.R[k] - anchor.R[k])).cwiseMax(0.0);
                        if (update_v)
                            cand.V = (model.V + beta * (model.V - anchor.V)).cwiseMax(0.0);
                        double cand_obj = objective(X, W, S, cand, cfg);
                        if (std::isfinite(cand_obj) && cand_obj < obj) {
                            anchor = std::move(model);
                            model = std::move(cand);
                            obj = cand_obj;
                            accepted = true;
                            break;
                        }
                    }
                    if (!accepted) break;
                }
            };
            momentum_pass(before);

            FactorModel walk = als_refine(X, W, S, model, cfg);
            double walk_obj = objective(X, W, S, walk, cfg);
            FactorModel best;
            double best_obj = obj;
            bool improved = false;
            if (std::isfinite(walk_obj) && walk_obj < best_obj) {
                best = walk;
                best_obj = walk_obj;
                improved = true;
            }
            for (int it = 1; it < 100 && std::isfinite(walk_obj); ++it) {
                FactorModel next = als_refine(X, W, S, walk, cfg);
                double next_obj = objective(X, W, S, next, cfg);
                if (!std::isfinite(next_obj)) break;
                const double rel_change =
                    std::abs(next_obj - walk_obj) / std::max(std::abs(walk_obj), 1e-300);
                walk = std::move(next);
                walk_obj = next_obj;
                if (walk_obj < best_obj) {
                    best = walk;
                    best_obj = walk_obj;
                    improved = true;
                }
                if (rel_change <= 1e-9) break;
            }
            if (improved) {
                model = std::move(best);
                obj = best_obj;
            }

            FactorModel balanced = rebalance(model, cfg, S);
            double balanced_obj = objective(X, W, S, balanced, cfg);
            if (std::isfinite(balanced_obj) && balanced_obj < obj) {
                model = std::move(balanced);
                obj = balanced_obj;
            }

            momentum_pass(before);
        }

        // Sweep-level descent safeguard: the per-update guard in update_A
        // covers the quartic term, but a multiplicative R or V step taken
        // from an accelerated iterate can still overshoot. Pull the whole
        // sweep back toward the previous iterate until the objective is
        // non-increasing; interpolation preserves non-negativity, zeros
        // and fixed points.
        for (int tries = 0; std::isfinite(prev) && obj > prev && tries < 64; ++tries) {
            model.A = 0.5 * (model.A + before.A);
            for (int k = 0; k < X.m; ++k) model.R[k] = 0.5 * (model.R[k] + before.R[k]);
            model.V = 0.5 * (model.V + before.V);
            obj = objective(X, W, S, model, cfg);
        }
        if (std::isfinite(prev) && obj > prev) {
            model = std::move(before);
            obj = prev;
        }

        if (!std::isfinite(obj))
            throw NumericalError("non-finite objective at iteration " + std::to_string(t));
        model.fit_trace.push_back(obj);
        log::debug("fit", "sweep ", t, " objective ", obj);
        if (prev == 0.0) break;
        if (std::abs(obj - prev) / prev < cfg.tol) break;
        prev = obj;
    }
    return model;
}

void save_model(const std::filesystem::path& dir, const FactorModel& model) {
    std::filesystem::create_directories(dir);
    const auto& cfg = model.config;
    nlohmann::json j;
    j["rank"] = cfg.rank;
    j["lambda_r"] = cfg.lambda_r;
    j["lambda_np"] = cfg.lambda_np;
    j["lambda_a"] = cfg.lambda_a;
    j["lambda_v"] = cfg.lambda_v;
    j["lambda_rel"] = cfg.lambda_rel;
    j["alpha"] = cfg.alpha;
    j["max_iters"] = cfg.max_iters;
    j["tol"] = cfg.tol;
    j["seed"] = cfg.seed;
    j["eps_guard"] = cfg.eps_guard;
    j["nonneg"] = cfg.nonneg;
    j["n"] = model.A.rows();
    j["m"] = model.R.size();
    j["h"] = model.V.cols();
    std::ofstream cf(dir / "config.json");
    cf << j.dump(2) << '\n';

    auto write_mat = [&](const std::filesystem::path& path, const Mat& mat) {
        std::ofstream out(path);
        out.precision(17);
        for (int i = 0; i < mat.rows(); ++i) {
            for (int jx = 0; jx < mat.cols(); ++jx) {
                if (jx) out << '\t';
                out << mat(i, jx);
            }
            out << '\n';
        }
    };
    write_mat(dir / "A.tsv", model.A);
    write_mat(dir / "V.tsv", model.V);
    for (size_t k = 0; k < model.R.size(); ++k)
        write_mat(dir / ("R_" + std::to_string(k) + ".tsv"), model.R[k]);

    std::ofstream tf(dir / "trace.tsv");
    tf.precision(17);
    for (size_t i = 0; i < model.fit_trace.size(); ++i)
        tf << i << '\t' << model.fit_trace[i] << '\n';
    if (!model.half_sweep_trace.empty()) {
        std::ofstream hf(dir / "half_trace.tsv");
        hf.precision(17);
        for (size_t i = 0; i < model.half_sweep_trace.size(); ++i)
            hf << i << '\t' << model.half_sweep_trace[i] << '\n';
    }
}

namespace {

Mat read_mat(const std::filesystem::path& path, int rows, int cols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Mat mat(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(in >> mat(i, j))) throw DataError("truncated matrix file " + path.string());
    return mat;
}

}  // namespace

FactorModel load_model(const std::filesystem::path& dir) {
    std::ifstream cf(dir / "config.json");
    if (!cf) throw DataError("cannot open model config: " + (dir / "config.json").string());
    nlohmann::json j = nlohmann::json::parse(cf);

    FactorModel model;
    auto& cfg = model.config;
    cfg.rank = j.at("rank").get<int>();
    cfg.lambda_r = j.at("lambda_r").get<double>();
    cfg.lambda_np = j.at("lambda_np").get<double>();
    cfg.lambda_a = j.at("lambda_a").get<double>();
    cfg.lambda_v = j.at("lambda_v").get<double>();
    cfg.lambda_rel = j.at("lambda_rel").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.max_iters = j.at("max_iters").get<int>();
    cfg.tol = j.at("tol").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.eps_guard = j.at("eps_guard").get<double>();
    cfg.nonneg = j.at("nonneg").get<bool>();

    int n = j.at("n").get<int>();
    int m = j.at("m").get<int>();
    int h = j.at("h").get<int>();
    model.A = read_mat(dir / "A.tsv", n, cfg.rank);
    model.V = read_mat(dir / "V.tsv", cfg.rank, h);
    for (int k = 0; k < m; ++k)
        model.R.push_back(read_mat(dir / ("R_" + std::to_string(k) + ".tsv"), cfg.rank, cfg.rank));

    std::ifstream tf(dir / "trace.tsv");
    if (tf) {
        int idx;
        double val;
        while (tf >> idx >> val) model.fit_trace.push_back(val);
    }
    return model;
}

}  // namespace sictf
