#pragma once

#include <Eigen/SparseCore>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sictf/vocab.hpp"

namespace sictf {

using SparseMat = Eigen::SparseMatrix<double>;

struct Triple {
    int subject = 0;
    int relation = 0;
    int object = 0;
    double weight = 1.0;  // corpus frequency, >= 0
};

struct TripleCorpus {
    Vocabulary nps;
    Vocabulary relations;
    std::vector<Triple> triples;
    long lines_read = 0;  // non-empty, non-comment triple lines
};

struct IngestOptions {
    bool log1p = false;  // store log(1+count) instead of raw counts
};

// Parses tab-separated `subject<TAB>relation<TAB>object[<TAB>count]` lines.
// Lines starting with '#' and blank lines are skipped. Duplicate (s,r,o)
// lines have their counts summed. Phrases are lowercased and trimmed.
// Throws DataError on malformed lines (with line number) or empty input.
TripleCorpus load_triples(std::istream& in, const IngestOptions& opts = {});
TripleCorpus load_triples_file(const std::filesystem::path& path,
                               const IngestOptions& opts = {});

/// Sparse 3-mode tensor X (n x n x m) stored as m sparse slices.
struct TripleTensor {
    int n = 0;
    int m = 0;
    std::vector<SparseMat> slices;  // each n x n

    const SparseMat& slice(int k) const { return slices.at(k); }
    double sum() const;
};

// X_k[s][o] = total weight of triples (s, k, o). Explicit zeros are pruned.
// Throws DataError if any id is out of bounds.
TripleTensor build_tensor(const std::vector<Triple>& triples, int n, int m);

// Drops triples where neither argument has a row in the NP-hypernym pairs.
// `np_has_hypernym` is indexed by NP id.
std::vector<Triple> filter_by_hypernym(const std::vector<Triple>& triples,
                                       const std::vector<char>& np_has_hypernym);

// Persistence: directory with meta.json, nps.txt, relations.txt and one
// coordinate-list file per slice (`row<TAB>col<TAB>value`).
void save_tensor(const std::filesystem::path& dir, const TripleTensor& X,
                 const Vocabulary& nps, const Vocabulary& relations);
struct LoadedTensor {
    TripleTensor X;
    Vocabulary nps;
    Vocabulary relations;
};
LoadedTensor load_tensor(const std::filesystem::path& dir);

}  // namespace sictf
