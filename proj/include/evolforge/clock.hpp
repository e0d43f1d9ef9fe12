#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <thread>

namespace evolforge {

/// Time source used by the gateway for backoff and rate limiting.
/// Swappable so tests can run retry schedules on a virtual timeline.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class RealClock : public Clock {
public:
    std::int64_t now_ms() override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
    }
    void sleep_ms(std::int64_t ms) override {
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
};

/// Manual timeline: sleeping advances time instead of blocking.
class VirtualClock : public Clock {
public:
    std::int64_t now_ms() override {
        std::lock_guard<std::mutex> lock(mu_);
        return t_;
    }
    void sleep_ms(std::int64_t ms) override {
        std::lock_guard<std::mutex> lock(mu_);
        if (ms > 0) t_ += ms;
    }
    void advance_ms(std::int64_t ms) {
        std::lock_guard<std::mutex> lock(mu_);
        t_ += ms;
    }

private:
    std::mutex mu_;
    std::int64_t t_ = 0;
};

}  // namespace evolforge
