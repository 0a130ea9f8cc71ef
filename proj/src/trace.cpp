#include "psbo/trace.hpp"

#include "psbo/error.hpp"

namespace psbo {

TraceSink::TraceSink(const std::string& path, bool keep_in_memory) : keep_(keep_in_memory) {
    out_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*out_) throw Error("cannot open trace file '" + path + "' for writing");
}

void TraceSink::write(nlohmann::json record) {
    if (out_) *out_ << record.dump() << "\n";
    if (keep_) records_.push_back(std::move(record));
}

void TraceSink::flush() {
    if (out_) out_->flush();
}

std::vector<nlohmann::json> TraceSink::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    std::vector<nlohmann::json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(nlohmann::json::parse(line));
    }
    return records;
}

}  // namespace psbo
