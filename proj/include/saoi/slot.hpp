#ifndef SAOI_SLOT_HPP_
#define SAOI_SLOT_HPP_

#include "saoi/lyapunov.hpp"
#include "saoi/model.hpp"

namespace saoi {

// Rates at the action's positions, timing, value, next AoI, U, B and flags.
SlotOutcome evaluate_slot(const WorldState& state, const SlotAction& action,
                          const SystemParams& params);

}  // namespace saoi

#endif  // SAOI_SLOT_HPP_
