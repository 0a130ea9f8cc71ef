#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace psbo {

// Append-only JSON-lines trace. Optionally mirrors records in memory for
// inspection (tests, report building, the `trace` subcommand).
class TraceSink {
public:
    TraceSink() : keep_(true) {}
    explicit TraceSink(const std::string& path, bool keep_in_memory = false);

    void write(nlohmann::json record);
    const std::vector<nlohmann::json>& records() const { return records_; }
    void flush();

    static std::vector<nlohmann::json> read_file(const std::string& path);

private:
    std::unique_ptr<std::ofstream> out_;
    bool keep_ = false;
    std::vector<nlohmann::json> records_;
};

}  // namespace psbo
