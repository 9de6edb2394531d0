#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <sstream>

#include "sictf/errors.hpp"
#include "sictf/side_info.hpp"

using namespace sictf;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> vals) {
    VectorXd v(static_cast<long>(vals.size()));
    int i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

Vocabulary make_vocab(std::initializer_list<const char*> items) {
    Vocabulary v;
    for (const char* s : items) v.get_or_add(s);
    return v;
}

}  // namespace

TEST_CASE("load_np_hypernyms: basic pair") {
    auto vocab = make_vocab({"hypertension", "aspirin"});
    std::istringstream in("hypertension\tdisease\n");
    auto W = load_np_hypernyms(in, vocab);
    CHECK(W.n == 2);
    CHECK(W.h() == 1);
    CHECK(W.hypernyms.item(0) == "disease");
    CHECK(W.W.coeff(0, 0) == 1.0);
    CHECK(W.stored_pairs == 1);
}

TEST_CASE("load_np_hypernyms: duplicates collapse, matrix stays binary") {
    auto vocab = make_vocab({"perl"});
    std::istringstream in("perl\tlanguage\nperl\tlanguage\nperl\tlanguages\n");
    auto W = load_np_hypernyms(in, vocab);
    CHECK(W.stored_pairs == 1);  // "languages" singularizes into "language"
    CHECK(W.W.coeff(0, 0) == 1.0);
}

TEST_CASE("load_np_hypernyms: unknown NPs skipped with a counter") {
    auto vocab = make_vocab({"perl"});
    std::istringstream in("perl\tlanguage\nunknown_np\tthing\n");
    auto W = load_np_hypernyms(in, vocab);
    CHECK(W.stored_pairs == 1);
    CHECK(W.skipped_unknown_nps == 1);
}

TEST_CASE("load_np_hypernyms: malformed line has line number") {
    auto vocab = make_vocab({"perl"});
    std::istringstream in("perl\tlanguage\nonly_one_field\n");
    CHECK_THROWS_WITH_AS(load_np_hypernyms(in, vocab), doctest::Contains("line 2"),
                         DataError);
}

TEST_CASE("singularize: trailing-s rule") {
    CHECK(singularize("diseases") == "disease");
    CHECK(singularize("languages") == "language");
    CHECK(singularize("class") == "class");  // double-s untouched
    CHECK(singularize("as") == "as");        // too short
}

TEST_CASE("cosine: basic values") {
    CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
    CHECK(cosine(vec({1, 1}), vec({2, 2})) == doctest::Approx(1.0));
    // hand oracle: 24 / (5 * 5)
    CHECK(cosine(vec({3, 4}), vec({4, 3})) == doctest::Approx(0.96));
}

TEST_CASE("cosine: error cases") {
    CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), DataError);
    CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), DataError);
}

TEST_CASE("cosine: scale invariance property") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unif(-1, 1);
    std::uniform_real_distribution<double> scale(0.01, 50);
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd u(5), v(5);
        for (int i = 0; i < 5; ++i) {
            u(i) = unif(rng);
            v(i) = unif(rng);
        }
        if (u.norm() == 0 || v.norm() == 0) continue;
        double base = cosine(u, v);
        CHECK(cosine(scale(rng) * u, scale(rng) * v) == doctest::Approx(base));
        CHECK(base >= -1.0 - 1e-12);
        CHECK(base <= 1.0 + 1e-12);
    }
}

TEST_CASE("build_relation_similarity: identical vectors pair up") {
    auto rels = make_vocab({"provides", "offers"});
    EmbeddingTable table;
    table.dim = 3;
    table.vectors["provides"] = vec({1, 2, 3});
    table.vectors["offers"] = vec({1, 2, 3});
    auto S = build_relation_similarity(table, rels, 0.7);
    CHECK(S.pair_count() == 1);
    CHECK(S.contains(0, 1));
    CHECK(S.contains(1, 0));  // symmetric
    CHECK_FALSE(S.contains(0, 0));
}

TEST_CASE("build_relation_similarity: orthogonal vectors give empty S") {
    auto rels = make_vocab({"a", "b", "c"});
    EmbeddingTable table;
    table.dim = 3;
    table.vectors["a"] = vec({1, 0, 0});
    table.vectors["b"] = vec({0, 1, 0});
    table.vectors["c"] = vec({0, 0, 1});
    auto S = build_relation_similarity(table, rels, 0.1);
    CHECK(S.pair_count() == 0);
}

TEST_CASE("build_relation_similarity: pairwise cosines {0.95, 0.6, 0.71} at gamma 0.7") {
    // vectors from the Cholesky factor of the target Gram matrix
    // G = [[1,.95,.6],[.95,1,.71],[.6,.71,1]]
    auto rels = make_vocab({"r0", "r1", "r2"});
    double l22 = std::sqrt(1 - 0.95 * 0.95);
    double l32 = (0.71 - 0.95 * 0.6) / l22;
    double l33 = std::sqrt(1 - 0.6 * 0.6 - l32 * l32);
    EmbeddingTable table;
    table.dim = 3;
    table.vectors["r0"] = vec({1, 0, 0});
    table.vectors["r1"] = vec({0.95, l22, 0});
    table.vectors["r2"] = vec({0.6, l32, l33});
    // brute-force oracle over all C(3,2) pairs
    REQUIRE(cosine(table.vectors["r0"], table.vectors["r1"]) == doctest::Approx(0.95));
    REQUIRE(cosine(table.vectors["r0"], table.vectors["r2"]) == doctest::Approx(0.6));
    REQUIRE(cosine(table.vectors["r1"], table.vectors["r2"]) == doctest::Approx(0.71));

    auto S = build_relation_similarity(table, rels, 0.7);
    CHECK(S.pair_count() == 2);
    CHECK(S.contains(0, 1));
    CHECK(S.contains(1, 2));
    CHECK_FALSE(S.contains(0, 2));
}

TEST_CASE("build_relation_similarity: >= comparison at the boundary") {
    auto rels = make_vocab({"x", "y"});
    EmbeddingTable table;
    table.dim = 2;
    table.vectors["x"] = vec({1, 0});
    table.vectors["y"] = vec({1, 0});
    CHECK(build_relation_similarity(table, rels, 1.0).pair_count() == 1);  // cos = 1 >= 1
}

TEST_CASE("build_relation_similarity: multi-word phrases use mean word vector") {
    auto rels = make_vocab({"suffer from", "experience"});
    EmbeddingTable table;
    table.dim = 2;
    table.vectors["suffer"] = vec({1, 0});
    table.vectors["from"] = vec({0, 1});
    table.vectors["experience"] = vec({1, 1});  // parallel to mean (0.5, 0.5)
    auto S = build_relation_similarity(table, rels, 0.99);
    CHECK(S.pair_count() == 1);
}

TEST_CASE("build_relation_similarity: no embeddings at all -> empty S") {
    auto rels = make_vocab({"a", "b"});
    EmbeddingTable table;
    auto S = build_relation_similarity(table, rels, 0.7);
    CHECK(S.pair_count() == 0);
    CHECK(S.relations_without_embedding == 2);
}

TEST_CASE("build_relation_similarity: gamma out of range rejected") {
    auto rels = make_vocab({"a"});
    EmbeddingTable table;
    CHECK_THROWS_AS(build_relation_similarity(table, rels, 0.0), UsageError);
    CHECK_THROWS_AS(build_relation_similarity(table, rels, 1.5), UsageError);
}

TEST_CASE("load_embeddings: word2vec header and body") {
    std::istringstream in("2 3\nfoo 1 2 3\nbar 4 5 6\n");
    auto table = load_embeddings(in);
    CHECK(table.dim == 3);
    CHECK(table.vectors.size() == 2);
    CHECK(table.vectors.at("foo")(2) == 3.0);
}

TEST_CASE("load_embeddings: headerless file and ragged dimension error") {
    std::istringstream ok("foo 1 2\nbar 3 4\n");
    CHECK(load_embeddings(ok).dim == 2);
    std::istringstream bad("foo 1 2\nbar 3 4 5\n");
    CHECK_THROWS_AS(load_embeddings(bad), DataError);
}

TEST_CASE("side info persistence round-trips W and S") {
    auto vocab = make_vocab({"a", "b", "c"});
    std::istringstream in("a\tdisease\nc\tdrug\n");
    auto W = load_np_hypernyms(in, vocab);
    RelSimilarityMatrix S;
    S.m = 4;
    S.pairs = {{0, 2}, {1, 3}};

    auto dir = std::filesystem::temp_directory_path() / "sictf_side_test";
    std::filesystem::remove_all(dir);
    save_side_info(dir, W, S);
    auto loaded = load_side_info(dir, 3, 4);
    CHECK(loaded.W.hypernyms.items() == W.hypernyms.items());
    CHECK((SparseMat(loaded.W.W) - W.W).norm() == 0.0);
    CHECK(loaded.S.pairs == S.pairs);
    std::filesystem::remove_all(dir);
}
