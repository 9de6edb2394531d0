#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sictf/corpus.hpp"
#include "sictf/vocab.hpp"

namespace sictf {

/// Binary NP x hypernym coupling matrix W.
struct NpHypernymMatrix {
    int n = 0;  // NP count (rows)
    Vocabulary hypernyms;
    SparseMat W;  // n x h, entries exactly 1
    long skipped_unknown_nps = 0;
    long stored_pairs = 0;

    int h() const { return hypernyms.size(); }
};

/// Binary symmetric relation-similarity matrix S, stored as unordered
/// off-diagonal pairs.
struct RelSimilarityMatrix {
    int m = 0;
    std::set<std::pair<int, int>> pairs;  // i < j
    long relations_without_embedding = 0;

    bool contains(int i, int j) const;
    // Neighbor lists: adj[k] = sorted js with S_kj = 1.
    std::vector<std::vector<int>> adjacency() const;
    long pair_count() const { return static_cast<long>(pairs.size()); }
};

struct EmbeddingTable {
    int dim = 0;
    std::map<std::string, Eigen::VectorXd> vectors;
};

// `np<TAB>hypernym` per line; '#' comments and blanks skipped. NPs not in
// np_vocab are counted and skipped. Duplicate pairs collapse to one entry.
// Hypernyms are singularized by a trailing-'s' rule when `singularize`.
NpHypernymMatrix load_np_hypernyms(std::istream& in, const Vocabulary& np_vocab,
                                   bool singularize = true);
NpHypernymMatrix load_np_hypernyms_file(const std::filesystem::path& path,
                                        const Vocabulary& np_vocab,
                                        bool singularize = true);

// word2vec text format: optional `count dim` header line, then
// `token v1 v2 ... vd`. Throws DataError on ragged dimensions.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings_file(const std::filesystem::path& path);

// cosine(u, v) = dot(u,v) / (|u||v|). Throws DataError on dimension
// mismatch or a zero-norm vector.
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// S_ij = 1 iff cosine(e_i, e_j) >= gamma and i != j. Multi-word relation
// phrases missing from the table fall back to the mean of their
// in-vocabulary word vectors; relations with no vector at all are counted
// and contribute no pairs.
RelSimilarityMatrix build_relation_similarity(const EmbeddingTable& embeddings,
                                              const Vocabulary& rel_vocab,
                                              double gamma);

// Hearst-pattern hypernym extraction over plain text. Returns
// (np, hypernym) string pairs in match order, duplicates included.
std::vector<std::pair<std::string, std::string>> extract_hearst(const std::string& text);
std::vector<std::pair<std::string, std::string>> extract_hearst_stream(std::istream& in);

// Trailing-'s' singularization used for hypernym normalization
// ("diseases" -> "disease"; "class" stays).
std::string singularize(const std::string& word);

// Persistence: coordinate-list files plus hypernym vocabulary.
void save_side_info(const std::filesystem::path& dir, const NpHypernymMatrix& W,
                    const RelSimilarityMatrix& S);
struct LoadedSideInfo {
    NpHypernymMatrix W;
    RelSimilarityMatrix S;
};
LoadedSideInfo load_side_info(const std::filesystem::path& dir, int n, int m);

}  // namespace sictf
