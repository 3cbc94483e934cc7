#include "saoi/slot.hpp"

namespace saoi {

SlotOutcome evaluate_slot(const WorldState& state, const SlotAction& action,
                          const SystemParams& params) {
  SlotOutcome out;
  const LinkRates rates = compute_rates(state, action.uav_pos_next, params);
  out.timing = timing_breakdown(state, action, rates, params);
  out.value = information_value(state, action, params);
  out.aoi_next = aoi_step(state, action, out.timing, params);
  const PerSlotObjective obj =
      per_slot_objective(state, action, out.timing, out.value, params);
  out.objective_u = obj.u_value;
  out.b_const = obj.b_const;
  out.feasible = check_action(state, action, out.timing, params);
  return out;
}

}  // namespace saoi
