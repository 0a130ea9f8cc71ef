#pragma once

#include <map>
#include <string>
#include <vector>

#include "psbo/hyperspace.hpp"

namespace psbo {

// Cache of feature-selection blocks (combinations of fs_space()) that
// timed out or selected all/none of the features. Shared by all
// algorithms; membership is Hamming distance 0. Entries are bucketed by
// the (search method, evaluator) choice so lookups only scan blocks that
// could possibly match.
class FsCache {
public:
    struct Entry {
        Combination block;
        std::string cause;  // "timeout", "all" or "none"
    };

    bool contains(const Combination& block) const;
    // Returns false when an equivalent entry (distance 0) already exists.
    bool insert(const Combination& block, const std::string& cause);

    std::size_t size() const { return size_; }
    std::vector<const Entry*> entries() const;

private:
    std::string bucket_key(const Combination& block) const;
    std::map<std::string, std::vector<Entry>> buckets_;
    std::size_t size_ = 0;
};

}  // namespace psbo
