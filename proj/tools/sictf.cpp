// sictf: relation schema induction from OpenIE triples via coupled
// non-negative tensor factorization.
//
// Subcommands: ingest, sideinfo, fit, extract, grid, eval.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sictf/corpus.hpp"
#include "sictf/errors.hpp"
#include "sictf/factorization.hpp"
#include "sictf/log.hpp"
#include "sictf/schema.hpp"
#include "sictf/side_info.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PipelineConfig {
    std::string triples, pairs, text, embeddings;
    std::string tensor_dir, sideinfo_dir, model_dir, out_dir;
    sictf::FactorizationConfig fac;
    double gamma = 0.7;
    int top_relations = 10;
    int cells_per_relation = 1;
    int nps_per_category = 3;
    std::string profile;
    std::string ablation = "none";
    bool log1p = false;
    bool filter_hypernyms = false;
    bool no_singularize = false;
};

// Profile presets fill in only fields the user did not pass explicitly.
void apply_profile(PipelineConfig& cfg, CLI::App* cmd) {
    if (cfg.profile.empty()) return;
    double np, rel;
    if (cfg.profile == "medline") {
        np = 0.05;
        rel = 0.001;
    } else if (cfg.profile == "stackoverflow") {
        np = 100;
        rel = 100;
    } else {
        throw sictf::UsageError("unknown profile: " + cfg.profile +
                                " (expected medline or stackoverflow)");
    }
    auto unset = [&](const std::string& flag) {
        return cmd == nullptr || cmd->count(flag) == 0;
    };
    if (unset("--lambda-np")) cfg.fac.lambda_np = np;
    if (unset("--lambda-rel")) cfg.fac.lambda_rel = rel;
    if (unset("--rank")) cfg.fac.rank = 50;
}

void apply_ablation(PipelineConfig& cfg) {
    if (cfg.ablation == "none") return;
    if (cfg.ablation == "no-rel") {
        cfg.fac.lambda_rel = 0;
    } else if (cfg.ablation == "no-np") {
        cfg.fac.lambda_np = 0;
    } else if (cfg.ablation == "no-side" || cfg.ablation == "unconstrained") {
        cfg.fac.lambda_np = 0;
        cfg.fac.lambda_rel = 0;
        if (cfg.ablation == "unconstrained") cfg.fac.nonneg = false;
    } else {
        throw sictf::UsageError("unknown ablation: " + cfg.ablation);
    }
}

void load_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sictf::DataError("cannot open config file: " + path);
    json j = json::parse(in);
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("triples", cfg.triples);
    get("pairs", cfg.pairs);
    get("text", cfg.text);
    get("embeddings", cfg.embeddings);
    get("tensor", cfg.tensor_dir);
    get("sideinfo", cfg.sideinfo_dir);
    get("model", cfg.model_dir);
    get("out", cfg.out_dir);
    get("rank", cfg.fac.rank);
    get("lambda-np", cfg.fac.lambda_np);
    get("lambda-rel", cfg.fac.lambda_rel);
    get("lambda-a", cfg.fac.lambda_a);
    get("lambda-v", cfg.fac.lambda_v);
    get("lambda-r", cfg.fac.lambda_r);
    get("gamma", cfg.gamma);
    get("max-iters", cfg.fac.max_iters);
    get("tol", cfg.fac.tol);
    get("seed", cfg.fac.seed);
    get("threads", cfg.fac.threads);
    get("profile", cfg.profile);
    get("ablation", cfg.ablation);
    get("top-relations", cfg.top_relations);
    get("cells-per-relation", cfg.cells_per_relation);
    get("nps-per-category", cfg.nps_per_category);
    get("log1p", cfg.log1p);
    get("filter-hypernyms", cfg.filter_hypernyms);
}

void require_path(const std::string& path, const char* what) {
    if (path.empty()) throw sictf::UsageError(std::string("missing required ") + what);
    if (!fs::exists(path))
        throw sictf::DataError(std::string(what) + " not found: " + path);
}

void add_fit_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--rank,-c", cfg.fac.rank, "induced-category count");
    cmd->add_option("--lambda-np", cfg.fac.lambda_np, "NP side-information weight");
    cmd->add_option("--lambda-rel", cfg.fac.lambda_rel, "relation side-information weight");
    cmd->add_option("--lambda-a", cfg.fac.lambda_a, "ridge on A");
    cmd->add_option("--lambda-v", cfg.fac.lambda_v, "ridge on V");
    cmd->add_option("--lambda-r", cfg.fac.lambda_r, "ridge on core slices");
    cmd->add_option("--max-iters", cfg.fac.max_iters, "maximum sweeps");
    cmd->add_option("--tol", cfg.fac.tol, "relative objective-change stop threshold");
    cmd->add_option("--seed", cfg.fac.seed, "RNG seed");
    cmd->add_option("--threads", cfg.fac.threads, "worker threads (1 = reproducible default)");
    cmd->add_option("--profile", cfg.profile, "dataset profile: medline | stackoverflow");
    cmd->add_option("--ablation", cfg.ablation,
                    "none | no-rel | no-np | no-side | unconstrained");
}

int cmd_ingest(const PipelineConfig& cfg) {
    require_path(cfg.triples, "--triples file");
    if (cfg.out_dir.empty()) throw sictf::UsageError("missing --out directory");

    sictf::IngestOptions opts;
    opts.log1p = cfg.log1p;
    auto corpus = sictf::load_triples_file(cfg.triples, opts);
    sictf::log::info("ingest", "read ", corpus.lines_read, " triples (",
                     corpus.triples.size(), " unique s-r-o), n=", corpus.nps.size(),
                     " m=", corpus.relations.size());

    auto triples = corpus.triples;
    if (cfg.filter_hypernyms) {
        require_path(cfg.pairs, "--pairs file (needed by --filter-hypernyms)");
        auto W = sictf::load_np_hypernyms_file(cfg.pairs, corpus.nps, !cfg.no_singularize);
        std::vector<char> has(corpus.nps.size(), 0);
        for (int outer = 0; outer < W.W.outerSize(); ++outer)
            for (sictf::SparseMat::InnerIterator it(W.W, outer); it; ++it)
                has[it.row()] = 1;
        size_t before = triples.size();
        triples = sictf::filter_by_hypernym(triples, has);
        sictf::log::info("ingest", "hypernym filter kept ", triples.size(), " of ", before,
                         " triples");
    }

    auto X = sictf::build_tensor(triples, corpus.nps.size(), corpus.relations.size());
    sictf::save_tensor(cfg.out_dir, X, corpus.nps, corpus.relations);
    sictf::log::info("ingest", "tensor written to ", cfg.out_dir);
    return 0;
}

int cmd_sideinfo(const PipelineConfig& cfg) {
    require_path(cfg.tensor_dir, "--tensor directory");
    if (cfg.out_dir.empty()) throw sictf::UsageError("missing --out directory");
    auto loaded = sictf::load_tensor(cfg.tensor_dir);

    sictf::NpHypernymMatrix W;
    if (!cfg.pairs.empty()) {
        require_path(cfg.pairs, "--pairs file");
        W = sictf::load_np_hypernyms_file(cfg.pairs, loaded.nps, !cfg.no_singularize);
    } else if (!cfg.text.empty()) {
        require_path(cfg.text, "--text file");
        std::ifstream in(cfg.text);
        auto extracted = sictf::extract_hearst_stream(in);
        sictf::log::info("sideinfo", "hearst extraction found ", extracted.size(), " pairs");
        std::ostringstream pairs_stream;
        for (const auto& [np, hyp] : extracted) pairs_stream << np << '\t' << hyp << '\n';
        std::istringstream ps(pairs_stream.str());
        W = sictf::load_np_hypernyms(ps, loaded.nps, !cfg.no_singularize);
    } else {
        throw sictf::UsageError("sideinfo needs --pairs or --text");
    }
    sictf::log::info("sideinfo", "stored ", W.stored_pairs, " NP-hypernym pairs (h=", W.h(),
                     ", skipped ", W.skipped_unknown_nps, " unknown NPs)");

    sictf::RelSimilarityMatrix S;
    S.m = loaded.relations.size();
    if (!cfg.embeddings.empty()) {
        require_path(cfg.embeddings, "--embeddings file");
        auto table = sictf::load_embeddings_file(cfg.embeddings);
        S = sictf::build_relation_similarity(table, loaded.relations, cfg.gamma);
        if (S.pair_count() == 0)
            sictf::log::warn("sideinfo", "no similar relation pairs at gamma=", cfg.gamma);
    }
    sictf::log::info("sideinfo", "stored ", S.pair_count(), " similar relation pairs of ",
                     S.m, " relations");
    sictf::save_side_info(cfg.out_dir, W, S);
    sictf::log::info("sideinfo", "side information written to ", cfg.out_dir);
    return 0;
}

// Loads W/S when present; otherwise empty side information of matching shape.
sictf::LoadedSideInfo side_info_or_empty(const PipelineConfig& cfg, int n, int m) {
    if (!cfg.sideinfo_dir.empty()) {
        require_path(cfg.sideinfo_dir, "--sideinfo directory");
        return sictf::load_side_info(cfg.sideinfo_dir, n, m);
    }
    sictf::LoadedSideInfo empty;
    empty.W.n = n;
    empty.W.W.resize(n, 0);
    empty.S.m = m;
    return empty;
}

int cmd_fit(PipelineConfig& cfg) {
    require_path(cfg.tensor_dir, "--tensor directory");
    if (cfg.out_dir.empty()) throw sictf::UsageError("missing --out directory");
    auto loaded = sictf::load_tensor(cfg.tensor_dir);
    auto side = side_info_or_empty(cfg, loaded.X.n, loaded.X.m);

    sictf::FactorModel model;
    if (cfg.ablation == "unconstrained") {
        model = sictf::fit_unconstrained(loaded.X, cfg.fac);
    } else {
        model = sictf::fit(loaded.X, side.W, side.S, cfg.fac);
    }
    sictf::log::info("fit", "converged after ", model.fit_trace.size() - 1,
                     " sweeps, objective ", model.fit_trace.back());
    sictf::save_model(cfg.out_dir, model);
    sictf::log::info("fit", "model written to ", cfg.out_dir);
    return 0;
}

int cmd_extract(const PipelineConfig& cfg) {
    require_path(cfg.tensor_dir, "--tensor directory");
    require_path(cfg.model_dir, "--model directory");
    if (cfg.out_dir.empty()) throw sictf::UsageError("missing --out directory");

    auto loaded = sictf::load_tensor(cfg.tensor_dir);
    auto model = sictf::load_model(cfg.model_dir);
    auto schemas = sictf::extract_schemas(loaded.X, model, loaded.nps, loaded.relations,
                                          cfg.top_relations, cfg.cells_per_relation,
                                          cfg.nps_per_category);
    sictf::log::info("extract", "induced ", schemas.size(), " schema candidates");

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "schemas.jsonl");
        sictf::write_schemas_jsonl(out, schemas);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "annotation_sheet.tsv");
        out << sictf::make_annotation_sheet(schemas);
    }
    sictf::log::info("extract", "schemas written to ", cfg.out_dir);
    return 0;
}

std::vector<double> parse_grid_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

int cmd_grid(PipelineConfig& cfg, const std::string& grid_np, const std::string& grid_rel) {
    require_path(cfg.tensor_dir, "--tensor directory");
    if (cfg.out_dir.empty()) throw sictf::UsageError("missing --out directory");
    auto loaded = sictf::load_tensor(cfg.tensor_dir);
    auto side = side_info_or_empty(cfg, loaded.X.n, loaded.X.m);

    std::vector<double> np_vals =
        grid_np.empty() ? std::vector<double>{cfg.fac.lambda_np} : parse_grid_values(grid_np);
    std::vector<double> rel_vals =
        grid_rel.empty() ? std::vector<double>{cfg.fac.lambda_rel} : parse_grid_values(grid_rel);
    if (np_vals.empty() || rel_vals.empty()) throw sictf::UsageError("empty grid");

    // score = relative Frobenius reconstruction error of X plus that of W
    auto score_model = [&](const sictf::FactorModel& model) {
        double num_sq = 0, den_sq = 0;
        auto scores = sictf::relation_reconstruction_scores(loaded.X, model);
        for (const auto& [k, rel_err] : scores) {
            double xn = loaded.X.slices[k].squaredNorm();
            num_sq += rel_err * rel_err * xn;
            den_sq += xn;
        }
        double err_x = den_sq > 0 ? std::sqrt(num_sq / den_sq) : 0.0;
        double err_w = 0.0;
        if (side.W.h() > 0) {
            double wn = side.W.W.norm();
            if (wn > 0) {
                sictf::Mat dense_w(side.W.W);
                err_w = (dense_w - model.A * model.V).norm() / wn;
            }
        }
        return err_x + err_w;
    };

    json report;
    report["points"] = json::array();
    double best_score = std::numeric_limits<double>::infinity();
    sictf::FactorModel best_model;
    double best_np = np_vals[0], best_rel = rel_vals[0];
    for (double lnp : np_vals) {
        for (double lrel : rel_vals) {
            auto fac = cfg.fac;
            fac.lambda_np = lnp;
            fac.lambda_rel = lrel;
            auto model = sictf::fit(loaded.X, side.W, side.S, fac);
            double score = score_model(model);
            sictf::log::info("grid", "lambda_np=", lnp, " lambda_rel=", lrel,
                             " score=", score);
            report["points"].push_back(
                {{"lambda_np", lnp}, {"lambda_rel", lrel}, {"score", score}});
            if (score < best_score) {  // strict: ties keep the earlier grid point
                best_score = score;
                best_model = std::move(model);
                best_np = lnp;
                best_rel = lrel;
            }
        }
    }
    report["best"] = {{"lambda_np", best_np}, {"lambda_rel", best_rel}, {"score", best_score}};

    fs::create_directories(cfg.out_dir);
    std::ofstream rf(fs::path(cfg.out_dir) / "grid_report.json");
    rf << report.dump(2) << '\n';
    sictf::save_model(fs::path(cfg.out_dir) / "best_model", best_model);
    sictf::log::info("grid", "best lambda_np=", best_np, " lambda_rel=", best_rel,
                     " score=", best_score);
    std::cout << report["best"].dump() << '\n';
    return 0;
}

int cmd_eval(const std::vector<std::string>& sheets) {
    if (sheets.empty()) throw sictf::UsageError("eval needs at least one --sheet");
    std::vector<std::vector<sictf::AnnotationRecord>> per_sheet;
    for (const auto& path : sheets) {
        require_path(path, "annotation sheet");
        std::ifstream in(path);
        per_sheet.push_back(
            sictf::parse_annotation_sheet(in, fs::path(path).stem().string()));
    }
    auto merged = sictf::merge_annotations(per_sheet);
    auto summary = sictf::aggregate_judgments(merged);

    json j;
    j["per_annotator"] = json::object();
    for (const auto& [a, acc] : summary.per_annotator) j["per_annotator"][a] = acc;
    j["average_accuracy"] = summary.average;
    j["inter_annotator_agreement"] = summary.agreement;
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    PipelineConfig cfg;

    // --config is applied before flag parsing so flags override it
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(cfg, argv[i + 1]);
            } catch (const sictf::DataError& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
        }
    }

    CLI::App app{"SICTF: relation schema induction via coupled tensor factorization"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file")
        ->expected(1);

    auto* ingest = app.add_subcommand("ingest", "build the triple tensor from a triple file");
    ingest->add_option("--triples", cfg.triples, "tab-separated triple file");
    ingest->add_option("--pairs", cfg.pairs, "NP-hypernym pairs (for --filter-hypernyms)");
    ingest->add_option("--out", cfg.out_dir, "output tensor directory");
    ingest->add_flag("--log1p", cfg.log1p, "store log(1+count) instead of raw counts");
    ingest->add_flag("--filter-hypernyms", cfg.filter_hypernyms,
                     "drop triples where neither argument has hypernym info");

    auto* sideinfo = app.add_subcommand("sideinfo", "build W and S side-information matrices");
    sideinfo->add_option("--tensor", cfg.tensor_dir, "tensor directory from ingest");
    sideinfo->add_option("--pairs", cfg.pairs, "precomputed NP-hypernym pairs");
    sideinfo->add_option("--text", cfg.text, "raw text for Hearst-pattern extraction");
    sideinfo->add_option("--embeddings", cfg.embeddings, "word2vec text-format embeddings");
    sideinfo->add_option("--gamma", cfg.gamma, "cosine similarity threshold");
    sideinfo->add_option("--out", cfg.out_dir, "output side-info directory");
    sideinfo->add_flag("--no-singularize", cfg.no_singularize,
                       "keep hypernym strings as written");

    auto* fit = app.add_subcommand("fit", "run the coupled factorization");
    fit->add_option("--tensor", cfg.tensor_dir, "tensor directory");
    fit->add_option("--sideinfo", cfg.sideinfo_dir, "side-info directory");
    fit->add_option("--out", cfg.out_dir, "output model directory");
    add_fit_flags(fit, cfg);

    auto* extract = app.add_subcommand("extract", "turn a fitted model into ranked schemas");
    extract->add_option("--tensor", cfg.tensor_dir, "tensor directory");
    extract->add_option("--model", cfg.model_dir, "fitted model directory");
    extract->add_option("--out", cfg.out_dir, "output directory");
    extract->add_option("--top-relations", cfg.top_relations,
                        "how many best-reconstructed relations to keep");
    extract->add_option("--cells-per-relation", cfg.cells_per_relation,
                        "top cells of R_k per relation");
    extract->add_option("--nps-per-category", cfg.nps_per_category,
                        "top NPs listed per argument category");

    auto* grid = app.add_subcommand("grid", "grid search over coupling weights");
    std::string grid_np, grid_rel;
    grid->add_option("--tensor", cfg.tensor_dir, "tensor directory");
    grid->add_option("--sideinfo", cfg.sideinfo_dir, "side-info directory");
    grid->add_option("--out", cfg.out_dir, "output directory");
    grid->add_option("--grid-lambda-np", grid_np, "comma-separated lambda_np values");
    grid->add_option("--grid-lambda-rel", grid_rel, "comma-separated lambda_rel values");
    add_fit_flags(grid, cfg);

    auto* eval = app.add_subcommand("eval", "aggregate filled annotation sheets");
    std::vector<std::string> sheets;
    eval->add_option("--sheets", sheets, "filled annotation sheets, one per annotator");

    // accepted after a subcommand too; the file itself is read in the
    // pre-scan above so explicit flags win regardless of position
    for (auto* sub : {ingest, sideinfo, fit, extract, grid, eval})
        sub->add_option("--config", config_path, "JSON configuration file")->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        CLI::App* fit_like = fit->parsed() ? fit : (grid->parsed() ? grid : nullptr);
        apply_profile(cfg, fit_like);
        apply_ablation(cfg);
        cfg.fac.validate();
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (sideinfo->parsed()) return cmd_sideinfo(cfg);
        if (fit->parsed()) return cmd_fit(cfg);
        if (extract->parsed()) return cmd_extract(cfg);
        if (grid->parsed()) return cmd_grid(cfg, grid_np, grid_rel);
        if (eval->parsed()) return cmd_eval(sheets);
    } catch (const sictf::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const sictf::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const sictf::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
