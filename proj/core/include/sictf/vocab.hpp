#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sictf {

/// Ordered string vocabulary with contiguous 0-based ids.
/// Insertion order is first appearance; lookups are exact-string.
class Vocabulary {
public:
    // Returns the id of `s`, inserting it if unseen.
    int get_or_add(const std::string& s);

    std::optional<int> lookup(const std::string& s) const;

    const std::string& item(int id) const { return items_.at(id); }
    const std::vector<std::string>& items() const { return items_; }
    int size() const { return static_cast<int>(items_.size()); }
    bool empty() const { return items_.empty(); }

private:
    std::vector<std::string> items_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace sictf
