#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <random>

#include "sictf/errors.hpp"
#include "sictf/factorization.hpp"
#include "sictf/schema.hpp"

using namespace sictf;

namespace {

SparseMat to_sparse(const Mat& dense) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < dense.rows(); ++i)
        for (int j = 0; j < dense.cols(); ++j)
            if (dense(i, j) != 0.0) trips.emplace_back(i, j, dense(i, j));
    SparseMat out(dense.rows(), dense.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

NpHypernymMatrix empty_W(int n) {
    NpHypernymMatrix W;
    W.n = n;
    W.W.resize(n, 0);
    return W;
}

RelSimilarityMatrix empty_S(int m) {
    RelSimilarityMatrix S;
    S.m = m;
    return S;
}

// X_k = A* R*_k A*^T from strictly positive planted factors.
struct Planted {
    Mat A;
    std::vector<Mat> R;
    TripleTensor X;
};

Planted plant(int n, int c, int m, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(0.1, 1.1);
    Planted p;
    p.A = Mat::NullaryExpr(n, c, [&] { return unif(rng); });
    p.X.n = n;
    p.X.m = m;
    for (int k = 0; k < m; ++k) {
        p.R.push_back(Mat::NullaryExpr(c, c, [&] { return unif(rng); }));
        p.X.slices.push_back(to_sparse(p.A * p.R[k] * p.A.transpose()));
    }
    return p;
}

FactorizationConfig small_cfg(int c) {
    FactorizationConfig cfg;
    cfg.rank = c;
    cfg.lambda_r = 0;
    cfg.lambda_np = 0;
    cfg.lambda_a = 0;
    cfg.lambda_v = 0;
    cfg.lambda_rel = 0;
    cfg.tol = 1e-12;
    return cfg;
}

}  // namespace

TEST_CASE("init_factors: determinism, positivity, shapes") {
    FactorizationConfig cfg = small_cfg(2);
    cfg.seed = 123;
    auto a = init_factors(3, 1, 2, cfg);
    auto b = init_factors(3, 1, 2, cfg);
    CHECK(a.A == b.A);
    CHECK(a.R[0] == b.R[0]);
    CHECK(a.V == b.V);
    CHECK(a.A.rows() == 3);
    CHECK(a.A.cols() == 2);
    CHECK(a.R[0].rows() == 2);
    CHECK(a.V.rows() == 2);
    CHECK(a.V.cols() == 2);
    CHECK(a.A.minCoeff() > 0);
    CHECK(a.R[0].minCoeff() > 0);
    CHECK(a.V.minCoeff() > 0);

    cfg.seed = 124;
    CHECK(init_factors(3, 1, 2, cfg).A != a.A);
}

TEST_CASE("objective: zero case") {
    FactorizationConfig cfg = small_cfg(1);
    FactorModel model;
    model.config = cfg;
    model.A = Mat::Zero(2, 1);
    model.R = {Mat::Zero(1, 1)};
    model.V = Mat(1, 0);
    TripleTensor X = build_tensor({}, 2, 1);
    CHECK(objective(X, empty_W(2), empty_S(1), model, cfg) == 0.0);
}

TEST_CASE("objective: exact rank-1 factorization") {
    FactorizationConfig cfg = small_cfg(1);
    FactorModel model;
    model.config = cfg;
    model.A = Mat(2, 1);
    model.A << 1, 0;
    model.R = {Mat::Constant(1, 1, 1.0)};
    model.V = Mat(1, 0);
    TripleTensor X = build_tensor({{0, 0, 0, 1.0}}, 2, 1);  // X_0 = [[1,0],[0,0]]
    CHECK(objective(X, empty_W(2), empty_S(1), model, cfg) == doctest::Approx(0.0));

    // residual [[0,-1],[-1,-1]] -> Frobenius^2 = 3
    model.A << 1, 1;
    CHECK(objective(X, empty_W(2), empty_S(1), model, cfg) == doctest::Approx(3.0));
}

TEST_CASE("objective: regularizer and coupling terms") {
    FactorizationConfig cfg = small_cfg(1);
    cfg.lambda_r = 2.0;
    cfg.lambda_a = 3.0;
    cfg.lambda_rel = 0.5;
    FactorModel model;
    model.config = cfg;
    model.A = Mat::Zero(1, 1);
    model.R = {Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 5.0)};
    model.V = Mat(1, 0);
    TripleTensor X = build_tensor({}, 1, 2);
    RelSimilarityMatrix S = empty_S(2);
    S.pairs = {{0, 1}};
    // 2*(4 + 25) ridge + 0.5 * 2 * (2-5)^2 coupling (double sum counts both orders)
    CHECK(objective(X, empty_W(1), S, model, cfg) == doctest::Approx(58.0 + 9.0));
}

TEST_CASE("update_A: hand matrix-product oracle") {
    FactorizationConfig cfg = small_cfg(1);
    FactorModel model;
    model.config = cfg;
    model.A = Mat(2, 1);
    model.A << 1, 1;
    model.R = {Mat::Constant(1, 1, 1.0)};
    model.V = Mat(1, 0);
    TripleTensor X = build_tensor({{0, 0, 1, 1.0}}, 2, 1);  // X_0 = [[0,1],[0,0]]
    // numerator = [1,1]^T, denominator = [4,4]^T
    Mat A1 = update_A(X, empty_W(2), model, cfg);
    CHECK(A1(0, 0) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(A1(1, 0) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("update_R: scalar oracle") {
    FactorizationConfig cfg = small_cfg(1);
    FactorModel model;
    model.config = cfg;
    model.A = Mat(2, 1);
    model.A << 1, 1;
    model.R = {Mat::Constant(1, 1, 2.0)};
    model.V = Mat(1, 0);
    TripleTensor X = build_tensor({{0, 0, 1, 1.0}}, 2, 1);
    // numerator A^T X_0 A = 1, denominator (A^T A) R (A^T A) = 8
    Mat R1 = update_R(X, empty_S(1), model, cfg, 0);
    CHECK(R1(0, 0) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("update_V: scalar oracle") {
    FactorizationConfig cfg = small_cfg(1);
    cfg.lambda_np = 1.0;
    FactorModel model;
    model.config = cfg;
    model.A = Mat(2, 1);
    model.A << 1, 1;
    model.R = {Mat::Constant(1, 1, 1.0)};
    model.V = Mat::Constant(1, 1, 1.0);
    NpHypernymMatrix W;
    W.n = 2;
    W.hypernyms.get_or_add("h");
    Mat wd(2, 1);
    wd << 1, 0;
    W.W = to_sparse(wd);
    // numerator A^T W = 1, denominator A^T A V = 2
    Mat V1 = update_V(W, model, cfg);
    CHECK(V1(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("updates: zero entries are absorbing") {
    FactorizationConfig cfg = small_cfg(2);
    auto p = plant(4, 2, 2, 5);
    FactorModel model = init_factors(4, 2, 0, cfg);
    model.A(1, 0) = 0.0;
    model.R[0](0, 1) = 0.0;
    Mat A1 = update_A(p.X, empty_W(4), model, cfg);
    CHECK(A1(1, 0) == 0.0);
    Mat R1 = update_R(p.X, empty_S(2), model, cfg, 0);
    CHECK(R1(0, 1) == 0.0);
}

TEST_CASE("updates: exact factorization is a fixed point") {
    FactorizationConfig cfg = small_cfg(3);
    auto p = plant(6, 3, 2, 9);
    FactorModel model;
    model.config = cfg;
    model.A = p.A;
    model.R = p.R;
    // W = A V for an exact coupling fixed point
    cfg.lambda_np = 1.0;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> unif(0.1, 1.1);
    model.V = Mat::NullaryExpr(3, 4, [&] { return unif(rng); });
    NpHypernymMatrix W;
    W.n = 6;
    for (int j = 0; j < 4; ++j) W.hypernyms.get_or_add("h" + std::to_string(j));
    W.W = to_sparse(p.A * model.V);

    Mat A1 = update_A(p.X, W, model, cfg);
    CHECK((A1 - model.A).cwiseAbs().maxCoeff() <= 10 * cfg.eps_guard);
    model.A = A1;
    for (int k = 0; k < 2; ++k) {
        Mat R1 = update_R(p.X, empty_S(2), model, cfg, k);
        CHECK((R1 - model.R[k]).cwiseAbs().maxCoeff() <= 10 * cfg.eps_guard);
    }
    Mat V1 = update_V(W, model, cfg);
    CHECK((V1 - model.V).cwiseAbs().maxCoeff() <= 10 * cfg.eps_guard);
}

TEST_CASE("update_R: equal coupled slices stay equal under strong coupling") {
    FactorizationConfig cfg = small_cfg(2);
    cfg.lambda_rel = 1000.0;
    auto p = plant(5, 2, 2, 21);
    FactorModel model = init_factors(5, 2, 0, cfg);
    model.R[1] = model.R[0];
    // same data in both slices
    TripleTensor X = p.X;
    X.slices[1] = X.slices[0];
    RelSimilarityMatrix S = empty_S(2);
    S.pairs = {{0, 1}};
    Mat R0 = update_R(X, S, model, cfg, 0);
    Mat R1 = update_R(X, S, model, cfg, 1);
    CHECK((R0 - R1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit: single sweep with huge tol, objective does not increase") {
    auto p = plant(8, 2, 2, 17);
    FactorizationConfig cfg = small_cfg(2);
    cfg.tol = 1e100;
    cfg.max_iters = 50;
    auto model = fit(p.X, empty_W(8), empty_S(2), cfg);
    REQUIRE(model.fit_trace.size() == 2);  // initial objective + one sweep
    CHECK(model.fit_trace[1] <= model.fit_trace[0]);
}

TEST_CASE("fit: planted-factor recovery") {
    auto p = plant(20, 4, 3, 31);
    FactorizationConfig cfg = small_cfg(4);
    cfg.lambda_r = 1e-4;
    cfg.lambda_a = 1e-4;
    cfg.max_iters = 200;
    auto model = fit(p.X, empty_W(20), empty_S(3), cfg);
    auto scores = relation_reconstruction_scores(p.X, model);
    double mean = 0;
    for (auto& [k, s] : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    CHECK(mean < 1e-2);
    // monotone trace
    for (size_t t = 1; t < model.fit_trace.size(); ++t)
        CHECK(model.fit_trace[t] <= model.fit_trace[t - 1] * (1 + 1e-9));
}

TEST_CASE("fit: all-zero data with ridge decays to zero objective") {
    TripleTensor X = build_tensor({}, 5, 2);
    FactorizationConfig cfg = small_cfg(2);
    cfg.lambda_a = 0.5;
    cfg.lambda_r = 0.5;
    cfg.lambda_v = 0.5;
    cfg.max_iters = 200;
    auto model = fit(X, empty_W(5), empty_S(2), cfg);
    CHECK(model.fit_trace.back() < 1e-6);
    CHECK(model.A.maxCoeff() < 1e-3);
}

TEST_CASE("fit: deterministic trace for fixed seed") {
    auto p = plant(10, 3, 2, 77);
    FactorizationConfig cfg = small_cfg(3);
    cfg.max_iters = 20;
    cfg.seed = 99;
    auto a = fit(p.X, empty_W(10), empty_S(2), cfg);
    auto b = fit(p.X, empty_W(10), empty_S(2), cfg);
    CHECK(a.fit_trace == b.fit_trace);
    CHECK(a.A == b.A);
}

TEST_CASE("fit: multithreaded sweep matches single-threaded bitwise") {
    auto p = plant(12, 3, 4, 41);
    FactorizationConfig cfg = small_cfg(3);
    cfg.max_iters = 10;
    RelSimilarityMatrix S = empty_S(4);
    S.pairs = {{0, 1}, {2, 3}};
    cfg.lambda_rel = 0.5;
    auto single = fit(p.X, empty_W(12), S, cfg);
    cfg.threads = 4;
    auto multi = fit(p.X, empty_W(12), S, cfg);
    CHECK(single.A == multi.A);
    CHECK(single.fit_trace == multi.fit_trace);
}

TEST_CASE("fit: dimension mismatch rejected") {
    auto p = plant(6, 2, 2, 1);
    FactorizationConfig cfg = small_cfg(2);
    CHECK_THROWS_AS(fit(p.X, empty_W(7), empty_S(2), cfg), DataError);
    CHECK_THROWS_AS(fit(p.X, empty_W(6), empty_S(3), cfg), DataError);
}

TEST_CASE("fit: overflow surfaces as a numerical error naming the iteration") {
    TripleTensor X = build_tensor({{0, 0, 1, 1e200}}, 2, 1);
    FactorizationConfig cfg = small_cfg(1);
    CHECK_THROWS_WITH_AS(fit(X, empty_W(2), empty_S(1), cfg),
                         doctest::Contains("iteration"), NumericalError);
}

TEST_CASE("fit: config validation") {
    FactorizationConfig cfg = small_cfg(2);
    cfg.tol = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = small_cfg(0);
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = small_cfg(2);
    cfg.lambda_np = -1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = small_cfg(2);
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("fit_unconstrained: planted recovery and half-sweep descent") {
    // signed planted factors
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> unif(-1, 1);
    int n = 20, c = 4, m = 3;
    Mat A = Mat::NullaryExpr(n, c, [&] { return unif(rng); });
    TripleTensor X;
    X.n = n;
    X.m = m;
    for (int k = 0; k < m; ++k) {
        Mat R = Mat::NullaryExpr(c, c, [&] { return unif(rng); });
        X.slices.push_back(to_sparse(A * R * A.transpose()));
    }
    FactorizationConfig cfg = small_cfg(c);
    cfg.lambda_a = 1e-8;
    cfg.lambda_r = 1e-8;
    cfg.max_iters = 100;
    cfg.nonneg = false;
    auto model = fit_unconstrained(X, cfg);
    auto scores = relation_reconstruction_scores(X, model);
    for (auto& [k, s] : scores) CHECK(s < 1e-4);
    for (size_t t = 1; t < model.half_sweep_trace.size(); ++t)
        CHECK(model.half_sweep_trace[t] <=
              model.half_sweep_trace[t - 1] * (1 + 1e-9) + 1e-12);
}

TEST_CASE("fit_unconstrained: full rank reconstructs any tensor") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> unif(-2, 2);
    int n = 5;
    TripleTensor X;
    X.n = n;
    X.m = 1;
    X.slices.push_back(to_sparse(Mat::NullaryExpr(n, n, [&] { return unif(rng); })));
    FactorizationConfig cfg = small_cfg(n);
    cfg.lambda_a = 1e-10;  // keeps the A normal equations invertible
    cfg.lambda_r = 0;      // exact core solve: no ridge bias on R
    cfg.max_iters = 50;
    auto model = fit_unconstrained(X, cfg);
    auto scores = relation_reconstruction_scores(X, model);
    CHECK(scores[0].second < 1e-6);
}

TEST_CASE("fit_unconstrained: side information rejected") {
    auto p = plant(5, 2, 1, 2);
    FactorizationConfig cfg = small_cfg(2);
    cfg.lambda_np = 1.0;
    CHECK_THROWS_AS(fit_unconstrained(p.X, cfg), UsageError);
}

TEST_CASE("fit_unconstrained: singular system without regularization errors out") {
    // rank > n makes A^T A singular
    auto p = plant(3, 2, 1, 3);
    FactorizationConfig cfg = small_cfg(5);
    cfg.lambda_a = 0;
    cfg.lambda_r = 0;
    CHECK_THROWS_AS(fit_unconstrained(p.X, cfg), NumericalError);
}

TEST_CASE("model persistence round-trip") {
    auto p = plant(6, 2, 2, 55);
    FactorizationConfig cfg = small_cfg(2);
    cfg.max_iters = 5;
    auto model = fit(p.X, empty_W(6), empty_S(2), cfg);

    auto dir = std::filesystem::temp_directory_path() / "sictf_model_test";
    std::filesystem::remove_all(dir);
    save_model(dir, model);
    auto loaded = load_model(dir);
    CHECK(loaded.A == model.A);
    CHECK(loaded.V == model.V);
    CHECK(loaded.R[0] == model.R[0]);
    CHECK(loaded.R[1] == model.R[1]);
    CHECK(loaded.fit_trace == model.fit_trace);
    CHECK(loaded.config.rank == cfg.rank);
    std::filesystem::remove_all(dir);
}
