#include "tsim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsim {

namespace {

constexpr double kHold = std::numeric_limits<double>::infinity();

bool is_green_in(const SignalPhase& phase, LaneId connector) {
  return std::binary_search(phase.green.begin(), phase.green.end(), connector);
}

}  // namespace

void enter_fixed_phase(const SignalProgram& program, SignalState& state, int phase) {
  const SignalPhase& p = program.phases[static_cast<std::size_t>(phase)];
  state.phase = phase;
  state.elapsed = 0.0;
  state.green_end = p.green_time();
  state.phase_end = p.duration;
  state.next_phase = (phase + 1) % static_cast<int>(program.phases.size());
}

SignalState fixed_initial_state(const SignalProgram& program) {
  SignalState state;
  enter_fixed_phase(program, state, 0);
  const double cycle = program.cycle();
  if (cycle > 0.0 && program.offset != 0.0) {
    double t = std::fmod(program.offset, cycle);
    if (t < 0.0) t += cycle;
    fixed_phase(program, state, t);
  }
  return state;
}

SignalState max_pressure_initial_state(const SignalProgram&) {
  SignalState state;
  state.green_end = kHold;
  state.phase_end = kHold;
  return state;
}

int fixed_phase(const SignalProgram& program, SignalState& state, double dt) {
  state.elapsed += dt;
  while (state.elapsed >= state.phase_end) {
    const double carry = state.elapsed - state.phase_end;
    enter_fixed_phase(program, state, state.next_phase);
    state.elapsed = carry;
  }
  return state.phase;
}

int max_pressure_phase(const RoadNetwork& net, const Junction& junction,
                       std::span<const int> queued, std::span<const int> lane_counts) {
  int best = 0;
  long best_pressure = -1;
  long best_served = -1;
  for (std::size_t k = 0; k < junction.program.phases.size(); ++k) {
    long pressure = 0;
    long served = 0;
    // A movement with more vehicles downstream than waiting contributes
    // nothing; otherwise a phase serving nobody can win on a small deficit.
    for (LaneId c : junction.program.phases[k].green) {
      const long q = queued[static_cast<std::size_t>(c)];
      const long w = q - lane_counts[static_cast<std::size_t>(net.lane(c).successors.front())];
      pressure += std::max(0L, w);
      served += q;
    }
    // Equal pressure goes to the phase with more vehicles to serve, so a ring
    // of zero-pressure movements still gets green.
    if (pressure > best_pressure || (pressure == best_pressure && served > best_served)) {
      best_pressure = pressure;
      best_served = served;
      best = static_cast<int>(k);
    }
  }
  return best;
}

int max_pressure_step(const RoadNetwork& net, const Junction& junction, SignalState& state,
                      std::span<const int> queued, std::span<const int> lane_counts,
                      const MaxPressureParams& params, double amber, double dt) {
  state.elapsed += dt;
  state.since_decision += dt;
  if (state.phase_end != kHold) {
    // Switching: closing green, then all-red, then the chosen phase.
    if (state.elapsed >= state.phase_end) {
      state.phase = state.next_phase;
      state.elapsed = 0.0;
      state.green_end = kHold;
      state.phase_end = kHold;
      state.since_decision = 0.0;
    }
    return state.phase;
  }
  if (state.since_decision + 1e-9 < params.interval || state.elapsed + 1e-9 < params.min_green)
    return state.phase;
  state.since_decision = 0.0;
  const int choice = max_pressure_phase(net, junction, queued, lane_counts);
  if (choice != state.phase) {
    const double all_red = junction.program.phases[static_cast<std::size_t>(state.phase)].all_red;
    state.green_end = state.elapsed + amber;
    state.phase_end = state.green_end + all_red;
    state.next_phase = choice;
  }
  return state.phase;
}

Light connector_light(const SignalProgram& program, const SignalState& state, LaneId connector,
                      double amber) {
  const SignalPhase& phase = program.phases[static_cast<std::size_t>(state.phase)];
  if (!is_green_in(phase, connector) || state.elapsed >= state.green_end) return Light::red;
  if (state.green_end - state.elapsed > amber + 1e-9) return Light::green;
  const bool gap = state.phase_end > state.green_end;
  const bool continues =
      !gap && is_green_in(program.phases[static_cast<std::size_t>(state.next_phase)], connector);
  return continues ? Light::green : Light::amber;
}

}  // namespace tsim
