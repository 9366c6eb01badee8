#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace cseg {

enum class ScheduleMode { milestone, plateau };

/// Learning-rate halving schedule. step() is called once after every epoch
/// with that epoch's index and validation metric, and returns the rate for
/// the next epoch.
///
/// milestone: halve after each epoch listed in `milestones`.
/// plateau:   halve once the best metric (improvement > threshold) is
///            `patience` epochs old; the age counter restarts after a halving.
class LrSchedule {
public:
    static LrSchedule milestone(double lr, std::vector<std::size_t> milestones);
    static LrSchedule plateau(double lr, std::size_t patience, double threshold = 1e-4);

    double lr() const { return lr_; }
    std::size_t halvings() const { return halvings_; }
    double step(std::size_t epoch, double metric);

private:
    ScheduleMode mode_ = ScheduleMode::milestone;
    double lr_ = 0.0;
    std::vector<std::size_t> milestones_;
    std::size_t patience_ = 0;
    double threshold_ = 0.0;
    double best_ = -std::numeric_limits<double>::infinity();
    std::size_t since_ = 0;  // epoch of the last improvement or halving
    bool seen_ = false;
    std::size_t halvings_ = 0;
};

}  // namespace cseg
