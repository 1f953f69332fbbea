#pragma once

#include <limits>
#include <span>

#include "tsim/network.hpp"

namespace tsim {

enum class ControllerKind { fixed, max_pressure };

struct MaxPressureParams {
  double interval = 15.0;   // seconds between decisions
  double min_green = 5.0;   // a phase is never cut before this
};

enum class Light { green, amber, red };

/// Runtime state of one junction's signal.
struct SignalState {
  int phase = 0;
  double elapsed = 0.0;  // seconds since the phase started
  // Green ends and the phase ends at these elapsed times; +inf means "hold".
  double green_end = std::numeric_limits<double>::infinity();
  double phase_end = std::numeric_limits<double>::infinity();
  int next_phase = 0;
  double since_decision = 0.0;

  friend bool operator==(const SignalState&, const SignalState&) = default;
};

/// Initial state of a fixed-time program, honoring its offset.
SignalState fixed_initial_state(const SignalProgram& program);
/// Initial state for max-pressure control: phase 0, held.
SignalState max_pressure_initial_state(const SignalProgram& program);

/// Enters `phase` with the fixed-time schedule (green, then all-red).
void enter_fixed_phase(const SignalProgram& program, SignalState& state, int phase);

/// Advances a fixed-time program by dt, rolling over phases; returns the
/// current phase.
int fixed_phase(const SignalProgram& program, SignalState& state, double dt);

/// Index of the phase with the largest pressure. Each green connector adds
/// max(0, queued - downstream), where `queued` counts the run of vehicles at
/// the head of its upstream lane bound for it and `downstream` counts the
/// vehicles on its exit lane. `queued` is indexed by connector lane id,
/// `lane_counts` by lane id. Equal pressure goes to the phase with more
/// queued vehicles, then to the lowest index.
int max_pressure_phase(const RoadNetwork& net, const Junction& junction,
                       std::span<const int> queued, std::span<const int> lane_counts);

/// Advances max-pressure control by dt. At most every `interval` seconds, and
/// only once the current phase has shown `min_green`, the best phase is
/// chosen; switching inserts `amber` seconds of closing green followed by the
/// current phase's all-red time.
int max_pressure_step(const RoadNetwork& net, const Junction& junction, SignalState& state,
                      std::span<const int> queued, std::span<const int> lane_counts,
                      const MaxPressureParams& params, double amber, double dt);

/// Light shown to `connector` of the junction. A connector is amber during the
/// last `amber` seconds of its green when it is not green again immediately
/// after the phase ends.
Light connector_light(const SignalProgram& program, const SignalState& state, LaneId connector,
                      double amber);

}  // namespace tsim
