#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sictf/corpus.hpp"
#include "sictf/side_info.hpp"

namespace sictf {

using Mat = Eigen::MatrixXd;

struct FactorizationConfig {
    int rank = 50;               // c, induced-category count
    double lambda_r = 0.01;      // ridge on each core slice R_k
    double lambda_np = 0.05;     // weight of the W coupling term
    double lambda_a = 0.01;      // ridge on A
    double lambda_v = 0.01;      // ridge on V
    double lambda_rel = 0.001;   // weight of the S coupling term
    double alpha = 1.0;          // multiplicative-update exponent, fixed 1
    int max_iters = 50;
    double tol = 1e-4;           // relative objective-change stop threshold
    std::uint64_t seed = 42;
    double eps_guard = 1e-12;    // denominator guard
    bool nonneg = true;
    int threads = 1;

    void validate() const;  // throws UsageError on out-of-range fields
};

struct FactorModel {
    Mat A;                // n x c
    std::vector<Mat> R;   // m slices, c x c
    Mat V;                // c x h
    std::vector<double> fit_trace;        // objective before iteration 0, then after each sweep
    std::vector<double> half_sweep_trace; // ALS only: objective after each half-sweep
    FactorizationConfig config;
};

// Factors i.i.d. uniform on [0.1, 1.1]; deterministic given config.seed.
FactorModel init_factors(int n, int m, int h, const FactorizationConfig& cfg);

// Full coupled objective:
//   sum_k(|X_k - A R_k A^T|_F^2 + lambda_r |R_k|_F^2)
//   + lambda_np |W - A V|_F^2 + lambda_a |A|_F^2 + lambda_v |V|_F^2
//   + lambda_rel sum_i sum_j S_ij |R_i - R_j|_F^2
double objective(const TripleTensor& X, const NpHypernymMatrix& W,
                 const RelSimilarityMatrix& S, const FactorModel& model,
                 const FactorizationConfig& cfg);

// One multiplicative update per factor. Each returns the new value and
// leaves the model untouched; zero entries are absorbing.
Mat update_A(const TripleTensor& X, const NpHypernymMatrix& W,
             const FactorModel& model, const FactorizationConfig& cfg);
Mat update_R(const TripleTensor& X, const RelSimilarityMatrix& S,
             const FactorModel& model, const FactorizationConfig& cfg, int k);
Mat update_V(const NpHypernymMatrix& W, const FactorModel& model,
             const FactorizationConfig& cfg);

// Multiplicative-update solver. Sweep order: A, then all R_k against
// pre-sweep R (Jacobi across slices), then V (skipped when lambda_np = 0
// or h = 0). Stops when the relative objective change drops below tol or
// after max_iters sweeps. Throws NumericalError if the objective goes
// non-finite, naming the iteration.
FactorModel fit(const TripleTensor& X, const NpHypernymMatrix& W,
                const RelSimilarityMatrix& S, const FactorizationConfig& cfg);

// RESCAL-style alternating least squares without non-negativity; side
// information unsupported (lambda_np = lambda_rel = 0). Throws
// NumericalError when the normal equations are singular and
// lambda_a = lambda_r = 0.
FactorModel fit_unconstrained(const TripleTensor& X, const FactorizationConfig& cfg);

// Model persistence: config.json, A.tsv, V.tsv, R_<k>.tsv (row-major,
// tab-separated) and trace.tsv.
void save_model(const std::filesystem::path& dir, const FactorModel& model);
FactorModel load_model(const std::filesystem::path& dir);

}  // namespace sictf
