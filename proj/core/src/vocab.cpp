#include "sictf/vocab.hpp"

namespace sictf {

int Vocabulary::get_or_add(const std::string& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(items_.size());
    items_.push_back(s);
    index_.emplace(s, id);
    return id;
}

std::optional<int> Vocabulary::lookup(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

}  // namespace sictf
