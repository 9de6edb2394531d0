#include "sictf/schema.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sictf/errors.hpp"
#include "text_util.hpp"

namespace sictf {

std::vector<std::pair<int, double>> relation_reconstruction_scores(
    const TripleTensor& X, const FactorModel& model) {
    const Mat G = model.A.transpose() * model.A;
    std::vector<std::pair<int, double>> scores;
    scores.reserve(X.m);
    for (int k = 0; k < X.m; ++k) {
        const Mat& R = model.R[k];
        double x_sq = X.slices[k].squaredNorm();
        double cross = 0.0;
        for (int outer = 0; outer < X.slices[k].outerSize(); ++outer)
            for (SparseMat::InnerIterator it(X.slices[k], outer); it; ++it)
                cross += it.value() *
                         model.A.row(it.row()).dot(R * model.A.row(it.col()).transpose());
        double resid_sq = std::max(x_sq - 2.0 * cross + (G * R * G).cwiseProduct(R).sum(), 0.0);
        double denom = std::max(std::sqrt(x_sq), model.config.eps_guard);
        scores.emplace_back(k, std::sqrt(resid_sq) / denom);
    }
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    return scores;
}

namespace {

std::vector<RankedNp> top_nps(const Mat& A, int col, const Vocabulary& np_vocab, int count) {
    std::vector<int> idx(A.rows());
    for (int i = 0; i < A.rows(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (A(a, col) != A(b, col)) return A(a, col) > A(b, col);
        return a < b;
    });
    std::vector<RankedNp> out;
    for (int i = 0; i < std::min<int>(count, static_cast<int>(idx.size())); ++i)
        out.push_back({np_vocab.item(idx[i]), A(idx[i], col)});
    return out;
}

}  // namespace

std::vector<SchemaCandidate> extract_schemas(const TripleTensor& X, const FactorModel& model,
                                             const Vocabulary& np_vocab,
                                             const Vocabulary& rel_vocab, int top_relations,
                                             int cells_per_relation, int nps_per_category) {
    if (top_relations < 1 || cells_per_relation < 1 || nps_per_category < 1)
        throw UsageError("extraction counts must be >= 1");

    auto scores = relation_reconstruction_scores(X, model);
    const int c = model.config.rank;
    std::vector<SchemaCandidate> out;

    int taken = 0;
    for (const auto& [k, recon] : scores) {
        if (taken++ >= top_relations) break;
        const Mat& R = model.R[k];
        // rank cells by value desc, ties toward smaller (i,j)
        std::vector<std::pair<int, int>> cells;
        cells.reserve(static_cast<size_t>(c) * c);
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < c; ++j) cells.emplace_back(i, j);
        std::stable_sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
            double va = R(a.first, a.second), vb = R(b.first, b.second);
            if (va != vb) return va > vb;
            return a < b;
        });
        for (int t = 0; t < std::min<int>(cells_per_relation, static_cast<int>(cells.size()));
             ++t) {
            auto [i, j] = cells[t];
            SchemaCandidate cand;
            cand.relation_id = k;
            cand.relation = rel_vocab.item(k);
            cand.subject_category = i;
            cand.object_category = j;
            cand.score = R(i, j);
            cand.subject_nps = top_nps(model.A, i, np_vocab, nps_per_category);
            cand.object_nps = top_nps(model.A, j, np_vocab, nps_per_category);
            out.push_back(std::move(cand));
        }
    }
    return out;
}

namespace {

std::string np_list_field(const std::vector<RankedNp>& nps) {
    std::string out;
    for (const auto& np : nps) {
        if (!out.empty()) out += ", ";
        out += np.np;
    }
    return out;
}

std::string schema_key(const SchemaCandidate& s) {
    return s.relation + "(A" + std::to_string(s.subject_category) + ",A" +
           std::to_string(s.object_category) + ")";
}

}  // namespace

std::string make_annotation_sheet(const std::vector<SchemaCandidate>& schemas) {
    if (schemas.empty()) throw DataError("no schemas to annotate");
    std::string out = "relation\tsubject_nps\tobject_nps\tverdict\n";
    for (const auto& s : schemas) {
        out += schema_key(s);
        out += '\t';
        out += np_list_field(s.subject_nps);
        out += '\t';
        out += np_list_field(s.object_nps);
        out += "\t\n";
    }
    return out;
}

std::vector<AnnotationRecord> parse_annotation_sheet(std::istream& in,
                                                     const std::string& annotator) {
    std::vector<AnnotationRecord> records;
    std::string line;
    long lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split(line, '\t');
        if (!header_seen) {
            header_seen = true;
            if (!fields.empty() && fields[0] == "relation") continue;
        }
        if (fields.size() < 3)
            throw DataError("sheet line " + std::to_string(lineno) + ": expected 4 columns");

        AnnotationRecord rec;
        // relation field: name(A<i>,A<j>)
        const std::string& rel = fields[0];
        size_t open = rel.rfind('(');
        size_t comma = rel.find(",A", open == std::string::npos ? 0 : open);
        size_t close = rel.rfind(')');
        if (open == std::string::npos || comma == std::string::npos ||
            close == std::string::npos || close < comma)
            throw DataError("sheet line " + std::to_string(lineno) +
                            ": relation field must look like rel(Ai,Aj)");
        try {
            rec.schema.relation = rel.substr(0, open);
            rec.schema.subject_category =
                std::stoi(rel.substr(open + 2, comma - open - 2));
            rec.schema.object_category =
                std::stoi(rel.substr(comma + 2, close - comma - 2));
        } catch (const std::exception&) {
            throw DataError("sheet line " + std::to_string(lineno) + ": bad category index");
        }
        for (const auto& np : detail::split(fields[1], ','))
            if (!detail::trim(np).empty()) rec.schema.subject_nps.push_back({detail::trim(np), 0.0});
        for (const auto& np : detail::split(fields[2], ','))
            if (!detail::trim(np).empty()) rec.schema.object_nps.push_back({detail::trim(np), 0.0});

        std::string verdict = fields.size() >= 4 ? detail::trim(fields[3]) : "";
        if (verdict == "valid")
            rec.judgments.push_back({annotator, true});
        else if (verdict == "invalid")
            rec.judgments.push_back({annotator, false});
        else if (!verdict.empty())
            throw DataError("sheet line " + std::to_string(lineno) + ": verdict must be valid or invalid");
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<AnnotationRecord> merge_annotations(
    const std::vector<std::vector<AnnotationRecord>>& per_sheet) {
    if (per_sheet.empty()) throw DataError("no annotation sheets");
    std::vector<AnnotationRecord> merged = per_sheet[0];
    std::map<std::string, size_t> by_key;
    for (size_t i = 0; i < merged.size(); ++i) by_key[schema_key(merged[i].schema)] = i;

    for (size_t s = 1; s < per_sheet.size(); ++s) {
        if (per_sheet[s].size() != merged.size())
            throw DataError("annotation sheets disagree on schema count");
        for (const auto& rec : per_sheet[s]) {
            auto it = by_key.find(schema_key(rec.schema));
            if (it == by_key.end())
                throw DataError("annotation sheets disagree on schema set: " +
                                schema_key(rec.schema));
            auto& target = merged[it->second].judgments;
            target.insert(target.end(), rec.judgments.begin(), rec.judgments.end());
        }
    }
    return merged;
}

JudgmentSummary aggregate_judgments(const std::vector<AnnotationRecord>& records) {
    if (records.empty()) throw DataError("no annotation records");
    std::vector<std::string> annotators;
    for (const auto& j : records[0].judgments) annotators.push_back(j.annotator);
    std::sort(annotators.begin(), annotators.end());
    if (annotators.empty()) throw DataError("records carry no judgments");

    std::map<std::string, long> valid_count;
    long agree = 0;
    for (const auto& rec : records) {
        std::vector<std::string> ids;
        for (const auto& j : rec.judgments) ids.push_back(j.annotator);
        std::sort(ids.begin(), ids.end());
        if (ids != annotators)
            throw DataError("inconsistent annotator sets across records");
        bool all_same = true;
        for (const auto& j : rec.judgments) {
            if (j.valid) ++valid_count[j.annotator];
            if (j.valid != rec.judgments[0].valid) all_same = false;
        }
        if (all_same) ++agree;
    }

    JudgmentSummary summary;
    double total = 0.0;
    for (const auto& a : annotators) {
        double acc = static_cast<double>(valid_count[a]) / static_cast<double>(records.size());
        summary.per_annotator.emplace_back(a, acc);
        total += acc;
    }
    summary.average = total / static_cast<double>(annotators.size());
    summary.agreement = static_cast<double>(agree) / static_cast<double>(records.size());
    return summary;
}

void write_schemas_jsonl(std::ostream& out, const std::vector<SchemaCandidate>& schemas) {
    for (const auto& s : schemas) {
        nlohmann::json j;
        j["relation"] = s.relation;
        j["relation_id"] = s.relation_id;
        j["subject_category"] = s.subject_category;
        j["object_category"] = s.object_category;
        j["score"] = s.score;
        auto np_array = [](const std::vector<RankedNp>& nps) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& np : nps) arr.push_back({{"np", np.np}, {"weight", np.weight}});
            return arr;
        };
        j["subject_nps"] = np_array(s.subject_nps);
        j["object_nps"] = np_array(s.object_nps);
        out << j.dump() << '\n';
    }
}

}  // namespace sictf
