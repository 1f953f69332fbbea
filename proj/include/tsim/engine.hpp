#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsim/demand.hpp"
#include "tsim/models.hpp"
#include "tsim/network.hpp"
#include "tsim/router.hpp"
#include "tsim/signal.hpp"

namespace tsim {

class Executor;

struct EngineConfig {
  double dt = 1.0;
  double lookahead = 200.0;
  IdmParams idm;
  MobilParams mobil;
  ControllerKind controller = ControllerKind::fixed;
  MaxPressureParams max_pressure;
  double vehicle_length = 5.0;
  double s0_floor = 0.1;        // collision guard clearance, m
  double amber = 3.0;           // closing-green seconds treated as red on approach
  double stats_window = 300.0;  // road speed aggregation window, s
  double speed_history = 3600.0;  // seconds of per-step road samples kept for queries
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

enum class VehicleStatus { waiting, driving, finished, dropped };

std::string_view to_string(VehicleStatus s);

struct VehicleState {
  std::int64_t id = 0;
  std::vector<LaneId> route;
  std::size_t route_index = 0;
  LaneId lane = kNoLane;
  double s = 0.0;  // front bumper, meters from lane start
  double v = 0.0;
  double length = 5.0;
  VehicleStatus status = VehicleStatus::waiting;
  double depart_time = 0.0;
  std::optional<double> finish_time;
  // Trip request, kept until injection.
  LaneId origin_lane = kNoLane;
  double origin_s = 0.0;
  LaneId dest_lane = kNoLane;
};

using Slot = std::uint32_t;

/// Per-lane driving vehicles ordered front first (decreasing s, ties by
/// ascending id), stored contiguously per lane.
struct LaneIndex {
  std::vector<std::uint32_t> offsets;  // lanes + 1
  std::vector<Slot> order;
  std::vector<std::uint32_t> rank;     // per slot: position within its lane

  std::span<const Slot> on_lane(LaneId lane) const {
    const auto l = static_cast<std::size_t>(lane);
    return {order.data() + offsets[l], order.data() + offsets[l + 1]};
  }
  int count(LaneId lane) const {
    const auto l = static_cast<std::size_t>(lane);
    return static_cast<int>(offsets[l + 1] - offsets[l]);
  }
};

struct Motion {
  LaneId lane = kNoLane;  // kNoLane for vehicles that are not driving
  double s = 0.0;
  double v = 0.0;
};

/// Read-only motion copy for one step, indexed by slot.
struct Snapshot {
  std::vector<Motion> motion;
  std::vector<Slot> driving;  // ascending slot order
};

struct Prepared {
  LaneIndex index;
  Snapshot snapshot;
};

/// Phase one of a step: snapshot every driving vehicle and build the per-lane
/// index. Lanes are sorted in parallel; the result is independent of the
/// worker count.
Prepared prepare(std::size_t lane_count, std::span<const VehicleState> vehicles, Executor& exec);

/// Output of the per-vehicle update: the outcome if the vehicle keeps its
/// lane and, when MOBIL elected a change, the outcome in the target lane.
struct VehicleDelta {
  double s = 0.0;  // may exceed the lane length; the commit stage carries it over
  double v = 0.0;
  double accel = 0.0;
  LaneId change_lane = kNoLane;
  double change_s = 0.0;
  double change_v = 0.0;
};

struct LaneStatic {
  double length = 0.0;
  double max_speed = 0.0;
  bool connector = false;
  bool closed = false;
  int junction = -1;  // connectors only
  int road = -1;      // road lanes only
  LaneId left = kNoLane;
  LaneId right = kNoLane;
};

/// Everything update_vehicle may read. All members are immutable during
/// phase two.
struct UpdateContext {
  const RoadNetwork* net = nullptr;
  std::span<const LaneStatic> lanes;
  std::span<const Light> lights;  // per lane; green for non-connectors
  std::span<const VehicleState> vehicles;
  const Snapshot* snapshot = nullptr;
  const LaneIndex* index = nullptr;
  const EngineConfig* config = nullptr;
  std::uint64_t step = 0;
};

/// Phase two for one vehicle: sense the effective leader, apply IDM and
/// randomized MOBIL, integrate. Writes nothing shared.
VehicleDelta update_vehicle(const UpdateContext& ctx, Slot me);

struct VehicleRecord {
  double t = 0.0;
  std::int64_t id = 0;
  LaneId lane = kNoLane;
  double s = 0.0;
  double v = 0.0;
  double angle_deg = 0.0;

  friend bool operator==(const VehicleRecord&, const VehicleRecord&) = default;
};

struct RoadSample {
  int road = 0;
  double mean_speed = 0.0;
  int vehicles = 0;
};

/// Receives per-step microscopic records (sorted by vehicle id) and the
/// instantaneous mean speed of every occupied road.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write_step(double t, std::span<const VehicleRecord> vehicles,
                          std::span<const RoadSample> roads) = 0;
  virtual void finish(double /*t_end*/) {}
};

struct StepReport {
  double time = 0.0;
  std::size_t injected = 0;
  std::size_t finished = 0;
  std::size_t dropped = 0;
  std::size_t lane_changes = 0;
  std::size_t guard_clamps = 0;
  std::size_t driving = 0;
  std::size_t waiting = 0;
  // Lowest IDM acceleration imposed on a new follower by an accepted lane
  // change this step; +inf when no change was accepted.
  double min_follower_accel = std::numeric_limits<double>::infinity();
};

struct RoadSpeedWindow {
  std::string road;
  double window_start = 0.0;
  double window_end = 0.0;
  double mean_speed = 0.0;

  friend bool operator==(const RoadSpeedWindow&, const RoadSpeedWindow&) = default;
};

struct TripOutcome {
  std::int64_t id = 0;
  double depart_time = 0.0;
  VehicleStatus status = VehicleStatus::waiting;
  std::optional<double> finish_time;
};

struct SimulationOutput {
  std::size_t steps = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t records = 0;  // vehicle records handed to the sink
  bool partial = false;     // the sink failed; output stops at the failing step
  std::string error;
  std::vector<TripOutcome> trips;
  std::vector<RoadSpeedWindow> road_speeds;
};

/// Query view of one vehicle.
struct VehicleInfo {
  std::int64_t id = 0;
  VehicleStatus status = VehicleStatus::waiting;
  LaneId lane = kNoLane;
  double s = 0.0;
  double v = 0.0;
  double angle_deg = 0.0;
  std::size_t route_index = 0;
  std::vector<LaneId> route;
};

/// World state plus the two-phase stepping loop and the control surface.
/// Control calls must happen between steps.
class Engine {
 public:
  Engine(RoadNetwork net, EngineConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Queues trips; vehicles depart once their time has come and the origin
  /// has room.
  void add_trips(std::span<const Trip> trips);

  /// Places a driving vehicle directly (scripted scenarios and tests).
  std::int64_t place_vehicle(std::vector<LaneId> route, double s, double v,
                             std::optional<std::int64_t> id = std::nullopt);

  StepReport step();
  SimulationOutput run(std::size_t steps, RecordSink* sink = nullptr);

  // Control surface
  void set_lane_max_speed(LaneId lane, double max_speed);
  void set_lane_restriction(LaneId lane, Restriction restriction);
  void set_signal_phase(std::string_view junction, int phase);
  VehicleInfo get_vehicle(std::int64_t id) const;
  double get_road_speed(std::string_view road, double window) const;
  double free_flow_speed(std::size_t road) const;

  // Introspection
  double time() const { return time_; }
  std::uint64_t step_count() const { return step_; }
  const RoadNetwork& network() const { return net_; }
  const EngineConfig& config() const { return config_; }
  std::span<const VehicleState> vehicles() const { return vehicles_; }
  const SignalState& signal_state(std::size_t junction) const { return signals_[junction]; }
  Light light(LaneId connector) const;
  std::size_t count(VehicleStatus status) const;
  /// Driving vehicles per lane, front first, from the committed state.
  std::vector<std::vector<Slot>> lane_occupants() const;
  std::vector<TripOutcome> trip_outcomes() const;
  /// Windows closed so far plus the open window up to the current time.
  std::vector<RoadSpeedWindow> road_speed_windows() const;
  /// Trips dropped for lack of a route, and similar non-fatal events.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Move;

  StepReport step_impl(RecordSink* sink);
  void refresh_lights();
  void rebuild_lane_statics();
  void commit(const Prepared& prepared, std::span<const VehicleDelta> deltas, double t_new,
              StepReport& report);
  void inject(double t_new, StepReport& report);
  void advance_signals(std::span<const int> queued, std::span<const int> lane_counts);
  void collect_stats(double t_new, RecordSink* sink);
  std::size_t slot_of(std::int64_t id) const;

  RoadNetwork net_;
  EngineConfig config_;
  std::unique_ptr<Executor> exec_;
  Router router_;
  std::vector<LaneStatic> lanes_;
  std::vector<Light> lights_;
  std::vector<SignalState> signals_;
  std::vector<VehicleState> vehicles_;
  std::vector<Slot> pending_;  // waiting trips ordered by (depart, id)
  std::unordered_map<std::int64_t, Slot> id_to_slot_;
  std::vector<std::vector<Slot>> occupants_;  // per lane, scratch for the commit stage
  std::vector<std::string> warnings_;
  double time_ = 0.0;
  std::uint64_t step_ = 0;
  double start_time_ = 0.0;

  // Road statistics
  std::vector<double> free_flow_;
  std::vector<double> window_sum_;
  std::vector<long> window_count_;
  std::vector<RoadSpeedWindow> closed_windows_;
  std::uint64_t steps_in_window_ = 0;
  double window_start_ = 0.0;
  struct StepRoadSamples {
    std::vector<int> roads;
    std::vector<double> sums;
    std::vector<int> counts;
  };
  std::deque<StepRoadSamples> history_;
  std::vector<VehicleRecord> record_buf_;
  std::vector<RoadSample> road_buf_;
};

}  // namespace tsim
