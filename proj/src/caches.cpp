#include "psbo/caches.hpp"

#include "psbo/feature_selection.hpp"

namespace psbo {

std::string FsCache::bucket_key(const Combination& block) const {
    const ParamSpace& space = fs_space();
    const auto method = space.index_of("fs");
    const auto evaluator = space.index_of("fs.evaluator");
    std::string key = block.values[*method].cat;
    key += '/';
    const ParamValue& ev = block.values[*evaluator];
    key += ev.is_inactive() ? "-" : ev.cat;
    return key;
}

bool FsCache::contains(const Combination& block) const {
    const auto it = buckets_.find(bucket_key(block));
    if (it == buckets_.end()) return false;
    for (const Entry& e : it->second)
        if (hamming_distance(fs_space(), block, e.block) == 0) return true;
    return false;
}

bool FsCache::insert(const Combination& block, const std::string& cause) {
    if (contains(block)) return false;
    buckets_[bucket_key(block)].push_back({block, cause});
    ++size_;
    return true;
}

std::vector<const FsCache::Entry*> FsCache::entries() const {
    std::vector<const Entry*> out;
    out.reserve(size_);
    for (const auto& [key, bucket] : buckets_)
        for (const Entry& e : bucket) out.push_back(&e);
    return out;
}

}  // namespace psbo
