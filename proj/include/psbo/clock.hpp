#pragma once

#include <chrono>
#include <memory>

namespace psbo {

enum class ClockMode { wall, virtual_units };

// Per-test meter. In virtual mode, work is accounted in cost units charged
// explicitly by learners (1 unit is calibrated to roughly one second of
// desk-machine compute); in wall mode charges are ignored and elapsed time
// is real. Budgets L_f / L_t are checked against elapsed().
class Stopwatch {
public:
    virtual ~Stopwatch() = default;
    virtual void charge(double units) = 0;
    virtual double elapsed() const = 0;
    bool exceeded(double limit) const { return elapsed() > limit; }
};

// Search-wide clock. test_meter() returns a meter starting at zero whose
// charges also advance the global elapsed total (virtual mode).
class SearchClock {
public:
    explicit SearchClock(ClockMode mode)
        : mode_(mode), start_(std::chrono::steady_clock::now()) {}

    ClockMode mode() const { return mode_; }

    double elapsed() const {
        if (mode_ == ClockMode::virtual_units) return total_units_;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    std::unique_ptr<Stopwatch> test_meter();

private:
    class VirtualMeter;
    class WallMeter;

    ClockMode mode_;
    double total_units_ = 0.0;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace psbo
