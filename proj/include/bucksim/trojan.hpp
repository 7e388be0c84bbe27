#pragma once

#include "bucksim/scenario.hpp"
#include "bucksim/state.hpp"

namespace bucksim {

// Hardware footprint of the trigger cell: one 2-input corruption gate plus
// one inverter for the complement-suppression tap.
inline constexpr int kTriggerGateCount = 2;
inline constexpr int kTriggerTransistorCount = 7;

/// True while the trigger net is asserted.
bool trigger_active(double t, const TrojanConfig& cfg);

/// Raw inserted gate: OR -> pwm | trig, NOR -> !(pwm | trig).  A triggered
/// OR locks the net high, a triggered NOR locks it low.
bool corrupt(bool pwm, bool trig, TrojanGate gate);

/// Apply the configured trojan to the commanded drive pair at time t.  Only
/// the targeted net passes through the corruption gate.  The NOR variant has
/// its feed pre-inverted (wiring compensation) so the dormant cell is
/// transparent instead of idling as an inverter.  With suppress_complement
/// set, the other net is forced off while the trigger is asserted.
GateLevels apply_trojan(GateLevels commanded, double t, const TrojanConfig& cfg);

}  // namespace bucksim
