#include <array>
#include <cctype>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "sictf/side_info.hpp"
#include "text_util.hpp"

namespace sictf {

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> s = {
        "a",    "an",   "the",  "and",  "or",    "of",   "in",   "on",
        "for",  "to",   "with", "as",   "such",  "other", "including",
        "especially",   "is",   "are",  "was",   "were", "be",   "been",
        "this", "that", "these", "those", "by",  "at",   "from", "it",
        "its",  "their", "his",  "her",  "our",  "your", "my",   "some",
        "many", "most", "any",  "all",   "no",   "not",  "which", "who",
        "can",  "will", "may",  "have",  "has",  "had",  "do",   "does"};
    return s;
}

bool is_word(const std::string& t) {
    if (t.empty()) return false;
    for (char c : t) {
        unsigned char u = static_cast<unsigned char>(c);
        if (!std::isalnum(u) && c != '\'' && c != '-' && c != '_') return false;
    }
    return std::isalpha(static_cast<unsigned char>(t[0])) != 0;
}

bool is_np_word(const std::string& t) { return is_word(t) && !stopwords().count(t); }

std::vector<std::string> tokenize(const std::string& text) {
    std::string spaced;
    spaced.reserve(text.size() + 16);
    for (char c : text) {
        switch (c) {
            case ',': case '.': case ';': case ':': case '!': case '?':
            case '(': case ')': case '"': case '[': case ']':
                spaced.push_back(' ');
                spaced.push_back(c);
                spaced.push_back(' ');
                break;
            default:
                spaced.push_back(static_cast<char>(
                    std::tolower(static_cast<unsigned char>(c))));
        }
    }
    std::vector<std::string> tokens;
    std::istringstream is(spaced);
    std::string t;
    while (is >> t) tokens.push_back(t);
    return tokens;
}

constexpr int kMaxNpWords = 3;

// Noun-phrase run ending at position `end` (inclusive), scanning backward.
std::string np_backward(const std::vector<std::string>& toks, int end) {
    int begin = end;
    while (begin >= 0 && end - begin + 1 <= kMaxNpWords && is_np_word(toks[begin]))
        --begin;
    ++begin;
    if (begin > end) return {};
    std::string out;
    for (int i = begin; i <= end; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += toks[i];
    }
    return out;
}

// Hypernym in pre-pattern position: single head token only, since
// without POS tags a longer backward run swallows verbs.
std::string hyper_backward(const std::vector<std::string>& toks, int end) {
    if (end < 0 || !is_np_word(toks[end])) return {};
    return toks[end];
}

// Noun-phrase run starting at `pos`; sets `next` past the run.
std::string np_forward(const std::vector<std::string>& toks, int pos, int* next) {
    int i = pos;
    std::string out;
    while (i < static_cast<int>(toks.size()) && i - pos < kMaxNpWords &&
           is_np_word(toks[i])) {
        if (!out.empty()) out.push_back(' ');
        out += toks[i];
        ++i;
    }
    *next = i;
    return out;
}

// Coordinated NP list: "x , y , and z" / "x and y" / "x or y".
std::vector<std::string> np_list_forward(const std::vector<std::string>& toks, int pos) {
    std::vector<std::string> nps;
    int i = pos;
    while (true) {
        // skip a leading determiner
        if (i < static_cast<int>(toks.size()) &&
            (toks[i] == "a" || toks[i] == "an" || toks[i] == "the"))
            ++i;
        int next = i;
        std::string np = np_forward(toks, i, &next);
        if (np.empty()) break;
        nps.push_back(np);
        i = next;
        if (i < static_cast<int>(toks.size()) && toks[i] == ",") ++i;
        if (i < static_cast<int>(toks.size()) && (toks[i] == "and" || toks[i] == "or")) {
            // "NP or other H" must not swallow the coordination
            if (i + 1 < static_cast<int>(toks.size()) && toks[i + 1] == "other") break;
            ++i;
        } else if (i < static_cast<int>(toks.size()) && is_np_word(toks[i])) {
            continue;  // after a comma
        } else {
            break;
        }
    }
    return nps;
}

std::string singular_head(const std::string& phrase) {
    size_t sp = phrase.rfind(' ');
    if (sp == std::string::npos) return singularize(phrase);
    return phrase.substr(0, sp + 1) + singularize(phrase.substr(sp + 1));
}

bool sentence_break(const std::string& t) {
    return t == "." || t == "!" || t == "?" || t == ";";
}

}  // namespace

std::vector<std::pair<std::string, std::string>> extract_hearst(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    auto toks = tokenize(text);
    const int n = static_cast<int>(toks.size());

    auto emit = [&](const std::string& np, const std::string& hyper) {
        if (np.empty() || hyper.empty() || np == hyper) return;
        pairs.emplace_back(np, singular_head(hyper));
    };

    int sent_start = 0;
    for (int i = 0; i < n; ++i) {
        if (sentence_break(toks[i])) {
            sent_start = i + 1;
            continue;
        }

        // "such H as NP, NP ..."
        if (toks[i] == "such" && i + 1 < n && toks[i + 1] != "as") {
            int next = 0;
            std::string hyper = np_forward(toks, i + 1, &next);
            if (!hyper.empty() && next < n && toks[next] == "as")
                for (const auto& np : np_list_forward(toks, next + 1)) emit(np, hyper);
            continue;
        }

        // "H such as NP, NP ..."
        if (toks[i] == "such" && i + 1 < n && toks[i + 1] == "as" && i - 1 >= sent_start) {
            std::string hyper = hyper_backward(toks, i - 1);
            if (!hyper.empty())
                for (const auto& np : np_list_forward(toks, i + 2)) emit(np, hyper);
            continue;
        }

        // "NP or other H" / "NP and other H"
        if ((toks[i] == "or" || toks[i] == "and") && i + 1 < n && toks[i + 1] == "other" &&
            i - 1 >= sent_start) {
            std::string np = np_backward(toks, i - 1);
            int next = 0;
            std::string hyper = np_forward(toks, i + 2, &next);
            emit(np, hyper);
            continue;
        }

        // "H including NP ..." / "H especially NP ..."
        if ((toks[i] == "including" || toks[i] == "especially") && i - 1 >= sent_start) {
            int end = i - 1;
            if (end >= sent_start && toks[end] == ",") --end;
            if (end >= sent_start) {
                std::string hyper = hyper_backward(toks, end);
                if (!hyper.empty())
                    for (const auto& np : np_list_forward(toks, i + 1)) emit(np, hyper);
            }
            continue;
        }

        // "NP , a H" appositive; single head token, as a longer backward
        // run would swallow the verb ("admitted john , a patient")
        if (toks[i] == "," && i + 1 < n && (toks[i + 1] == "a" || toks[i + 1] == "an") &&
            i - 1 >= sent_start) {
            std::string np = hyper_backward(toks, i - 1);
            int next = 0;
            std::string hyper = np_forward(toks, i + 2, &next);
            // only a clean appositive: the hypernym ends the clause
            if (next < n && !sentence_break(toks[next]) && toks[next] != ",") continue;
            emit(np, hyper);
            continue;
        }
    }
    return pairs;
}

std::vector<std::pair<std::string, std::string>> extract_hearst_stream(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return extract_hearst(buf.str());
}

}  // namespace sictf
