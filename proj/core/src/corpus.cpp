#include "sictf/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "sictf/errors.hpp"
#include "text_util.hpp"

namespace sictf {

using detail::lower;
using detail::split;
using detail::trim;

TripleCorpus load_triples(std::istream& in, const IngestOptions& opts) {
    TripleCorpus corpus;
    std::map<std::tuple<int, int, int>, double> weights;
    std::vector<std::tuple<int, int, int>> order;

    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4)
            throw DataError("line " + std::to_string(lineno) + ": expected 3 or 4 tab-separated fields, got " +
                            std::to_string(fields.size()));
        std::string subj = lower(trim(fields[0]));
        std::string rel = lower(trim(fields[1]));
        std::string obj = lower(trim(fields[2]));
        if (subj.empty() || rel.empty() || obj.empty())
            throw DataError("line " + std::to_string(lineno) + ": empty phrase");
        double count = 1.0;
        if (fields.size() == 4) {
            std::string c = trim(fields[3]);
            try {
                size_t pos = 0;
                count = std::stod(c, &pos);
                if (pos != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw DataError("line " + std::to_string(lineno) + ": non-numeric count '" + c + "'");
            }
            if (count <= 0)
                throw DataError("line " + std::to_string(lineno) + ": count must be positive");
        }
        ++corpus.lines_read;
        int s = corpus.nps.get_or_add(subj);
        int r = corpus.relations.get_or_add(rel);
        int o = corpus.nps.get_or_add(obj);
        auto key = std::make_tuple(s, r, o);
        auto [it, inserted] = weights.emplace(key, 0.0);
        if (inserted) order.push_back(key);
        it->second += count;
    }
    if (corpus.lines_read == 0) throw DataError("no triples");

    corpus.triples.reserve(order.size());
    for (const auto& key : order) {
        double w = weights.at(key);
        if (opts.log1p) w = std::log1p(w);
        corpus.triples.push_back(
            {std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
    }
    return corpus;
}

TripleCorpus load_triples_file(const std::filesystem::path& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triple file: " + path.string());
    return load_triples(in, opts);
}

double TripleTensor::sum() const {
    double total = 0;
    for (const auto& s : slices) total += s.sum();
    return total;
}

TripleTensor build_tensor(const std::vector<Triple>& triples, int n, int m) {
    TripleTensor X;
    X.n = n;
    X.m = m;
    std::vector<std::vector<Eigen::Triplet<double>>> by_slice(m);
    for (const auto& t : triples) {
        if (t.subject < 0 || t.subject >= n || t.object < 0 || t.object >= n)
            throw DataError("NP id out of bounds in triple");
        if (t.relation < 0 || t.relation >= m)
            throw DataError("relation id out of bounds in triple");
        by_slice[t.relation].emplace_back(t.subject, t.object, t.weight);
    }
    X.slices.reserve(m);
    for (int k = 0; k < m; ++k) {
        SparseMat slice(n, n);
        slice.setFromTriplets(by_slice[k].begin(), by_slice[k].end());
        slice.prune([](int, int, double v) { return v != 0.0; });
        slice.makeCompressed();
        X.slices.push_back(std::move(slice));
    }
    return X;
}

std::vector<Triple> filter_by_hypernym(const std::vector<Triple>& triples,
                                       const std::vector<char>& np_has_hypernym) {
    std::vector<Triple> kept;
    for (const auto& t : triples) {
        bool s_ok = t.subject < static_cast<int>(np_has_hypernym.size()) &&
                    np_has_hypernym[t.subject];
        bool o_ok = t.object < static_cast<int>(np_has_hypernym.size()) &&
                    np_has_hypernym[t.object];
        if (s_ok || o_ok) kept.push_back(t);
    }
    return kept;
}

namespace {

void write_vocab(const std::filesystem::path& path, const Vocabulary& v) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& s : v.items()) out << s << '\n';
}

Vocabulary read_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) v.get_or_add(line);
    }
    return v;
}

void write_coo(const std::filesystem::path& path, const SparseMat& mat) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(17);
    for (int outer = 0; outer < mat.outerSize(); ++outer)
        for (SparseMat::InnerIterator it(mat, outer); it; ++it)
            out << it.row() << '\t' << it.col() << '\t' << it.value() << '\n';
}

SparseMat read_coo(const std::filesystem::path& path, int rows, int cols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<Eigen::Triplet<double>> trips;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        int r, c;
        double v;
        if (!(ls >> r >> c >> v))
            throw DataError(path.string() + " line " + std::to_string(lineno) + ": bad coordinate entry");
        trips.emplace_back(r, c, v);
    }
    SparseMat mat(rows, cols);
    mat.setFromTriplets(trips.begin(), trips.end());
    mat.makeCompressed();
    return mat;
}

}  // namespace

void save_tensor(const std::filesystem::path& dir, const TripleTensor& X,
                 const Vocabulary& nps, const Vocabulary& relations) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["n"] = X.n;
    meta["m"] = X.m;
    meta["np_vocab"] = "nps.txt";
    meta["relation_vocab"] = "relations.txt";
    std::vector<std::string> slice_files;
    for (int k = 0; k < X.m; ++k)
        slice_files.push_back("slice_" + std::to_string(k) + ".tsv");
    meta["slices"] = slice_files;
    std::ofstream mf(dir / "meta.json");
    mf << meta.dump(2) << '\n';

    write_vocab(dir / "nps.txt", nps);
    write_vocab(dir / "relations.txt", relations);
    for (int k = 0; k < X.m; ++k) write_coo(dir / slice_files[k], X.slices[k]);
}

LoadedTensor load_tensor(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "meta.json");
    if (!mf) throw DataError("cannot open tensor meta: " + (dir / "meta.json").string());
    nlohmann::json meta = nlohmann::json::parse(mf);

    LoadedTensor out;
    out.X.n = meta.at("n").get<int>();
    out.X.m = meta.at("m").get<int>();
    out.nps = read_vocab(dir / meta.at("np_vocab").get<std::string>());
    out.relations = read_vocab(dir / meta.at("relation_vocab").get<std::string>());
    for (const auto& f : meta.at("slices"))
        out.X.slices.push_back(read_coo(dir / f.get<std::string>(), out.X.n, out.X.n));
    if (static_cast<int>(out.X.slices.size()) != out.X.m)
        throw DataError("tensor slice count does not match meta.json");
    return out;
}

}  // namespace sictf
