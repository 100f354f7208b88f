#ifndef M3NET_NN_SCHEDULE_HPP_
#define M3NET_NN_SCHEDULE_HPP_

#include <vector>

#include "m3net/errors.hpp"

namespace m3net::nn {

/// Step decay: rate(e) = initial * decay_factor^(number of milestones <= e).
/// Epochs are 0-indexed; a milestone applies from the start of that epoch.
struct LrSchedule {
    double initial = 0.01;
    double decay_factor = 0.2;
    std::vector<int> milestones{40, 60, 80};

    double rate(int epoch) const {
        if (epoch < 0) throw ContractViolation("schedule_rate: epoch must be >= 0");
        double r = initial;
        for (int m : milestones)
            if (m <= epoch) r *= decay_factor;
        return r;
    }
};

inline double schedule_rate(const LrSchedule& schedule, int epoch) { return schedule.rate(epoch); }

} // namespace m3net::nn

#endif // M3NET_NN_SCHEDULE_HPP_
