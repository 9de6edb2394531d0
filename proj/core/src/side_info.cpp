#include "sictf/side_info.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "sictf/errors.hpp"
#include "sictf/log.hpp"
#include "text_util.hpp"

namespace sictf {

using detail::lower;
using detail::split;
using detail::trim;

std::string singularize(const std::string& word) {
    if (word.size() > 2 && word.back() == 's' && word[word.size() - 2] != 's')
        return word.substr(0, word.size() - 1);
    return word;
}

NpHypernymMatrix load_np_hypernyms(std::istream& in, const Vocabulary& np_vocab,
                                   bool do_singularize) {
    NpHypernymMatrix out;
    out.n = np_vocab.size();
    std::set<std::pair<int, int>> entries;

    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2)
            throw DataError("line " + std::to_string(lineno) + ": expected `np<TAB>hypernym`");
        std::string np = lower(trim(fields[0]));
        std::string hyp = lower(trim(fields[1]));
        if (np.empty() || hyp.empty())
            throw DataError("line " + std::to_string(lineno) + ": empty phrase");
        if (do_singularize) hyp = singularize(hyp);
        auto np_id = np_vocab.lookup(np);
        if (!np_id) {
            ++out.skipped_unknown_nps;
            continue;
        }
        entries.emplace(*np_id, out.hypernyms.get_or_add(hyp));
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(entries.size());
    for (auto [i, j] : entries) trips.emplace_back(i, j, 1.0);
    out.W.resize(out.n, out.hypernyms.size());
    out.W.setFromTriplets(trips.begin(), trips.end());
    out.W.makeCompressed();
    out.stored_pairs = static_cast<long>(entries.size());
    return out;
}

NpHypernymMatrix load_np_hypernyms_file(const std::filesystem::path& path,
                                        const Vocabulary& np_vocab, bool do_singularize) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open NP-hypernym file: " + path.string());
    return load_np_hypernyms(in, np_vocab, do_singularize);
}

EmbeddingTable load_embeddings(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    long lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::istringstream ls(t);
        std::string token;
        ls >> token;
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (first) {
            first = false;
            // word2vec header: `count dim` with no vector payload
            if (vals.size() == 1) {
                char* end = nullptr;
                std::strtol(token.c_str(), &end, 10);
                if (end && *end == '\0') continue;
            }
        }
        if (vals.empty())
            throw DataError("embedding line " + std::to_string(lineno) + ": no vector values");
        if (table.dim == 0) table.dim = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != table.dim)
            throw DataError("embedding line " + std::to_string(lineno) + ": dimension " +
                            std::to_string(vals.size()) + " != " + std::to_string(table.dim));
        table.vectors[lower(token)] =
            Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
    }
    return table;
}

EmbeddingTable load_embeddings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path.string());
    return load_embeddings(in);
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size())
        throw DataError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
    double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw DataError("cosine: zero-norm vector");
    return u.dot(v) / (nu * nv);
}

bool RelSimilarityMatrix::contains(int i, int j) const {
    if (i == j) return false;
    if (i > j) std::swap(i, j);
    return pairs.count({i, j}) > 0;
}

std::vector<std::vector<int>> RelSimilarityMatrix::adjacency() const {
    std::vector<std::vector<int>> adj(m);
    for (auto [i, j] : pairs) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    return adj;
}

namespace {

// Phrase vector: exact-token hit first, else mean of in-vocabulary words.
std::optional<Eigen::VectorXd> phrase_vector(const EmbeddingTable& table,
                                             const std::string& phrase) {
    auto it = table.vectors.find(phrase);
    if (it != table.vectors.end()) return it->second;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim);
    int hits = 0;
    std::istringstream words(phrase);
    std::string w;
    while (words >> w) {
        auto wit = table.vectors.find(w);
        if (wit != table.vectors.end()) {
            sum += wit->second;
            ++hits;
        }
    }
    if (hits == 0) return std::nullopt;
    return sum / hits;
}

}  // namespace

RelSimilarityMatrix build_relation_similarity(const EmbeddingTable& embeddings,
                                              const Vocabulary& rel_vocab, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw UsageError("gamma must be in (0, 1]");
    RelSimilarityMatrix S;
    S.m = rel_vocab.size();

    std::vector<std::optional<Eigen::VectorXd>> vecs(S.m);
    for (int i = 0; i < S.m; ++i) {
        if (embeddings.dim > 0)
            vecs[i] = phrase_vector(embeddings, rel_vocab.item(i));
        if (!vecs[i]) ++S.relations_without_embedding;
    }
    if (S.relations_without_embedding == S.m && S.m > 0) {
        log::warn("sideinfo", "no relation has an embedding; S is empty");
        return S;
    }

    for (int i = 0; i < S.m; ++i) {
        if (!vecs[i] || vecs[i]->norm() == 0.0) continue;
        for (int j = i + 1; j < S.m; ++j) {
            if (!vecs[j] || vecs[j]->norm() == 0.0) continue;
            if (cosine(*vecs[i], *vecs[j]) >= gamma) S.pairs.emplace(i, j);
        }
    }
    return S;
}

void save_side_info(const std::filesystem::path& dir, const NpHypernymMatrix& W,
                    const RelSimilarityMatrix& S) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["n"] = W.n;
    meta["h"] = W.h();
    meta["m"] = S.m;
    meta["w_file"] = "W.tsv";
    meta["s_file"] = "S.tsv";
    meta["hypernym_vocab"] = "hypernyms.txt";
    std::ofstream mf(dir / "meta.json");
    mf << meta.dump(2) << '\n';

    {
        std::ofstream out(dir / "hypernyms.txt");
        for (const auto& s : W.hypernyms.items()) out << s << '\n';
    }
    {
        std::ofstream out(dir / "W.tsv");
        for (int outer = 0; outer < W.W.outerSize(); ++outer)
            for (SparseMat::InnerIterator it(W.W, outer); it; ++it)
                out << it.row() << '\t' << it.col() << '\t' << 1 << '\n';
    }
    {
        std::ofstream out(dir / "S.tsv");
        for (auto [i, j] : S.pairs) out << i << '\t' << j << '\t' << 1 << '\n';
    }
}

LoadedSideInfo load_side_info(const std::filesystem::path& dir, int n, int m) {
    std::ifstream mf(dir / "meta.json");
    if (!mf) throw DataError("cannot open side-info meta: " + (dir / "meta.json").string());
    nlohmann::json meta = nlohmann::json::parse(mf);
    if (meta.at("n").get<int>() != n)
        throw DataError("side-info NP count does not match tensor");
    if (meta.at("m").get<int>() != m)
        throw DataError("side-info relation count does not match tensor");

    LoadedSideInfo out;
    out.W.n = n;
    {
        std::ifstream in(dir / meta.at("hypernym_vocab").get<std::string>());
        if (!in) throw DataError("cannot open hypernym vocab in " + dir.string());
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) out.W.hypernyms.get_or_add(line);
    }
    {
        std::ifstream in(dir / meta.at("w_file").get<std::string>());
        if (!in) throw DataError("cannot open W file in " + dir.string());
        std::vector<Eigen::Triplet<double>> trips;
        int r, c, v;
        while (in >> r >> c >> v) trips.emplace_back(r, c, 1.0);
        out.W.W.resize(n, out.W.h());
        out.W.W.setFromTriplets(trips.begin(), trips.end());
        out.W.stored_pairs = static_cast<long>(trips.size());
    }
    out.S.m = m;
    {
        std::ifstream in(dir / meta.at("s_file").get<std::string>());
        if (!in) throw DataError("cannot open S file in " + dir.string());
        int i, j, v;
        while (in >> i >> j >> v) {
            if (i > j) std::swap(i, j);
            if (i != j) out.S.pairs.emplace(i, j);
        }
    }
    return out;
}

}  // namespace sictf
