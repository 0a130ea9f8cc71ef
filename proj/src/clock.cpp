#include "psbo/clock.hpp"

namespace psbo {

class SearchClock::VirtualMeter : public Stopwatch {
public:
    explicit VirtualMeter(double& total) : total_(total) {}
    void charge(double units) override {
        used_ += units;
        total_ += units;
    }
    double elapsed() const override { return used_; }

private:
    double& total_;
    double used_ = 0.0;
};

class SearchClock::WallMeter : public Stopwatch {
public:
    WallMeter() : start_(std::chrono::steady_clock::now()) {}
    void charge(double) override {}
    double elapsed() const override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<Stopwatch> SearchClock::test_meter() {
    if (mode_ == ClockMode::virtual_units) return std::make_unique<VirtualMeter>(total_units_);
    return std::make_unique<WallMeter>();
}

}  // namespace psbo
