#include "cseg/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace cseg {

LrSchedule LrSchedule::milestone(double lr, std::vector<std::size_t> milestones) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    LrSchedule s;
    s.mode_ = ScheduleMode::milestone;
    s.lr_ = lr;
    s.milestones_ = std::move(milestones);
    return s;
}

LrSchedule LrSchedule::plateau(double lr, std::size_t patience, double threshold) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    LrSchedule s;
    s.mode_ = ScheduleMode::plateau;
    s.lr_ = lr;
    s.patience_ = patience;
    s.threshold_ = threshold;
    return s;
}

double LrSchedule::step(std::size_t epoch, double metric) {
    if (mode_ == ScheduleMode::milestone) {
        if (std::find(milestones_.begin(), milestones_.end(), epoch) != milestones_.end()) {
            lr_ /= 2.0;
            ++halvings_;
        }
        return lr_;
    }
    if (!seen_ || metric > best_ + threshold_) {
        seen_ = true;
        best_ = metric;
        since_ = epoch;
    } else if (epoch - since_ >= patience_) {
        lr_ /= 2.0;
        ++halvings_;
        since_ = epoch;
    }
    return lr_;
}

}  // namespace cseg
