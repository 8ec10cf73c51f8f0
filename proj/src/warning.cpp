#include "somcm/warning.hpp"

#include "somcm/error.hpp"

namespace somcm {

PersistenceMachine::PersistenceMachine(PersistenceConfig config) : config_(config) {
    require(config_.open_after >= 1 && config_.close_after >= 1, ErrorKind::ContractViolation,
            "persistence counts must be >= 1");
}

PersistenceMachine::Transition PersistenceMachine::update(ChartStatus status) {
    switch (status) {
        case ChartStatus::NoData:
            return Transition::None;
        case ChartStatus::OutOfControl:
            in_run_ = 0;
            ++out_run_;
            if (!active_ && out_run_ >= config_.open_after) {
                active_ = true;
                return Transition::Opened;
            }
            return Transition::None;
        case ChartStatus::InControl:
            out_run_ = 0;
            if (active_) {
                ++in_run_;
                if (in_run_ >= config_.close_after) {
                    active_ = false;
                    in_run_ = 0;
                    return Transition::Closed;
                }
            }
            return Transition::None;
    }
    return Transition::None;
}

}  // namespace somcm
