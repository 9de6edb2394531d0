#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sictf/factorization.hpp"

namespace sictf {

struct RankedNp {
    std::string np;
    double weight = 0.0;
};

/// One induced schema: relation k, cell (i,j) of R_k, and the top NPs of
/// the two argument categories.
struct SchemaCandidate {
    int relation_id = 0;
    std::string relation;
    int subject_category = 0;
    int object_category = 0;
    double score = 0.0;  // R_k[i][j]
    std::vector<RankedNp> subject_nps;
    std::vector<RankedNp> object_nps;
};

struct Judgment {
    std::string annotator;
    bool valid = false;
};

struct AnnotationRecord {
    SchemaCandidate schema;
    std::vector<Judgment> judgments;
};

struct JudgmentSummary {
    std::vector<std::pair<std::string, double>> per_annotator;  // sorted by id
    double average = 0.0;
    double agreement = 0.0;  // fraction of records where all annotators concur
};

// Relative Frobenius residual per slice, |X_k - A R_k A^T|_F / |X_k|_F,
// sorted ascending (lower = better reconstruction). Ties break on id.
std::vector<std::pair<int, double>> relation_reconstruction_scores(
    const TripleTensor& X, const FactorModel& model);

// For each of the top_relations best-reconstructed relations, the
// cells_per_relation largest cells of R_k (ties toward smaller (i,j)
// lexicographic), each with nps_per_category top NPs per selected column
// of A (ties toward smaller NP id).
std::vector<SchemaCandidate> extract_schemas(const TripleTensor& X,
                                             const FactorModel& model,
                                             const Vocabulary& np_vocab,
                                             const Vocabulary& rel_vocab,
                                             int top_relations,
                                             int cells_per_relation,
                                             int nps_per_category);

// Tab-separated sheet: header `relation<TAB>subject_nps<TAB>object_nps<TAB>verdict`.
// The relation field renders as rel(A_i,A_j) so the sheet round-trips.
std::string make_annotation_sheet(const std::vector<SchemaCandidate>& schemas);

// Parses a sheet (filled or blank). Rows with verdict `valid`/`invalid`
// carry a judgment under `annotator`; blank verdicts carry none.
std::vector<AnnotationRecord> parse_annotation_sheet(std::istream& in,
                                                     const std::string& annotator);

// Merges records from several annotators' sheets by (relation, i, j) key.
// Throws DataError if the sheets disagree on the schema set.
std::vector<AnnotationRecord> merge_annotations(
    const std::vector<std::vector<AnnotationRecord>>& per_sheet);

// accuracy_a = #valid by a / #records; average over annotators;
// agreement = fraction of records where all annotators concur.
// Throws DataError if records carry inconsistent annotator sets.
JudgmentSummary aggregate_judgments(const std::vector<AnnotationRecord>& records);

// Line-delimited JSON records {relation, score, subject_nps, object_nps, ...}.
void write_schemas_jsonl(std::ostream& out, const std::vector<SchemaCandidate>& schemas);

}  // namespace sictf
