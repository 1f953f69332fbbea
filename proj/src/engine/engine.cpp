#include "tsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tsim/error.hpp"
#include "tsim/executor.hpp"

namespace tsim {

namespace {

// Distinguishes recorder failures from engine faults inside run().
struct SinkFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

void EngineConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(lookahead > 0.0)) throw ValidationError("lookahead must be positive");
  idm.validate();
  mobil.validate();
  if (!(vehicle_length > 0.0)) throw ValidationError("vehicle length must be positive");
  if (!(s0_floor >= 0.0)) throw ValidationError("s0_floor must be non-negative");
  if (!(amber >= 0.0)) throw ValidationError("amber must be non-negative");
  if (!(stats_window >= dt)) throw ValidationError("stats window must cover at least one step");
  if (!(speed_history >= dt)) throw ValidationError("speed history must cover at least one step");
  if (!(max_pressure.interval > 0.0 && max_pressure.min_green >= 0.0))
    throw ValidationError("max-pressure interval must be positive and min_green non-negative");
  if (threads < 0) throw ValidationError("thread count must be non-negative");
}

std::string_view to_string(VehicleStatus s) {
  switch (s) {
    case VehicleStatus::waiting:
      return "waiting";
    case VehicleStatus::driving:
      return "driving";
    case VehicleStatus::finished:
      return "finished";
    case VehicleStatus::dropped:
      return "dropped";
  }
  return "unknown";
}

Engine::Engine(RoadNetwork net, EngineConfig config)
    : net_(std::move(net)), config_(config), router_(net_) {
  config_.validate();
  const auto issues = validate_network(net_);
  if (!issues.empty())
    throw ValidationError("invalid network: " + issues.front().entity + ": " +
                          issues.front().message);
  exec_ = std::make_unique<Executor>(config_.threads);
  rebuild_lane_statics();
  occupants_.resize(net_.lanes.size());

  signals_.reserve(net_.junctions.size());
  for (const Junction& j : net_.junctions) {
    const bool mp = config_.controller == ControllerKind::max_pressure && j.signalized;
    signals_.push_back(mp ? max_pressure_initial_state(j.program)
                          : fixed_initial_state(j.program));
  }
  lights_.assign(net_.lanes.size(), Light::green);
  refresh_lights();

  window_sum_.assign(net_.roads.size(), 0.0);
  window_count_.assign(net_.roads.size(), 0);
}

Engine::~Engine() = default;

void Engine::rebuild_lane_statics() {
  const auto road_of = road_of_lane(net_);
  lanes_.assign(net_.lanes.size(), LaneStatic{});
  for (const Lane& l : net_.lanes) {
    LaneStatic& ls = lanes_[static_cast<std::size_t>(l.id)];
    ls.length = l.length;
    ls.max_speed = l.max_speed;
    ls.connector = l.kind == LaneKind::connector;
    ls.closed = l.restriction == Restriction::closed;
    ls.road = road_of[static_cast<std::size_t>(l.id)];
    ls.left = l.left;
    ls.right = l.right;
  }
  for (std::size_t j = 0; j < net_.junctions.size(); ++j)
    for (LaneId c : net_.junctions[j].connectors)
      lanes_[static_cast<std::size_t>(c)].junction = static_cast<int>(j);

  free_flow_.assign(net_.roads.size(), 0.0);
  for (std::size_t r = 0; r < net_.roads.size(); ++r) {
    double cap = 0.0;
    for (LaneId l : net_.roads[r].lanes) cap = std::max(cap, net_.lane(l).max_speed);
    free_flow_[r] = std::min(config_.idm.v0, cap);
  }
}

void Engine::refresh_lights() {
  for (std::size_t j = 0; j < net_.junctions.size(); ++j) {
    const Junction& junction = net_.junctions[j];
    for (LaneId c : junction.connectors)
      lights_[static_cast<std::size_t>(c)] =
          connector_light(junction.program, signals_[j], c, config_.amber);
  }
}

Light Engine::light(LaneId connector) const {
  if (connector < 0 || static_cast<std::size_t>(connector) >= lights_.size())
    throw LookupError("unknown lane " + std::to_string(connector));
  return lights_[static_cast<std::size_t>(connector)];
}

void Engine::add_trips(std::span<const Trip> trips) {
  for (const Trip& t : trips) {
    auto check = [&](LaneId l, const char* what) {
      if (l < 0 || static_cast<std::size_t>(l) >= net_.lanes.size())
        throw LookupError("trip " + std::to_string(t.id) + ": unknown " + what + " lane " +
                          std::to_string(l));
      if (lanes_[static_cast<std::size_t>(l)].connector)
        throw ValidationError("trip " + std::to_string(t.id) + ": " + what +
                              " lane is a junction connector");
    };
    check(t.origin_lane, "origin");
    check(t.dest_lane, "destination");
    if (!(t.origin_s >= 0.0 && t.origin_s <= lanes_[static_cast<std::size_t>(t.origin_lane)].length))
      throw ValidationError("trip " + std::to_string(t.id) + ": origin_s outside the lane");
    if (!(t.departure >= 0.0) || !std::isfinite(t.departure))
      throw ValidationError("trip " + std::to_string(t.id) + ": negative departure");
    if (id_to_slot_.count(t.id))
      throw ValidationError("duplicate vehicle id " + std::to_string(t.id));
  }
  for (const Trip& t : trips) {
    VehicleState v;
    v.id = t.id;
    v.length = config_.vehicle_length;
    v.status = VehicleStatus::waiting;
    v.depart_time = start_time_ + t.departure;
    v.origin_lane = t.origin_lane;
    v.origin_s = t.origin_s;
    v.dest_lane = t.dest_lane;
    const Slot slot = static_cast<Slot>(vehicles_.size());
    vehicles_.push_back(std::move(v));
    id_to_slot_.emplace(t.id, slot);
    pending_.push_back(slot);
  }
  std::stable_sort(pending_.begin(), pending_.end(), [&](Slot a, Slot b) {
    const VehicleState& x = vehicles_[a];
    const VehicleState& y = vehicles_[b];
    if (x.depart_time != y.depart_time) return x.depart_time < y.depart_time;
    return x.id < y.id;
  });
}

std::int64_t Engine::place_vehicle(std::vector<LaneId> route, double s, double v,
                                   std::optional<std::int64_t> id) {
  if (route.empty()) throw ValidationError("place_vehicle: empty route");
  for (LaneId l : route)
    if (l < 0 || static_cast<std::size_t>(l) >= net_.lanes.size())
      throw LookupError("place_vehicle: unknown lane " + std::to_string(l));
  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    const auto& succ = net_.lane(route[k]).successors;
    if (std::find(succ.begin(), succ.end(), route[k + 1]) == succ.end())
      throw ValidationError("place_vehicle: lane " + std::to_string(route[k + 1]) +
                            " does not follow lane " + std::to_string(route[k]));
  }
  if (!(s >= 0.0 && s <= lanes_[static_cast<std::size_t>(route.front())].length))
    throw ValidationError("place_vehicle: position outside the lane");
  if (!(v >= 0.0)) throw ValidationError("place_vehicle: negative speed");
  std::int64_t vid = 0;
  if (id) {
    vid = *id;
  } else {
    for (const VehicleState& x : vehicles_) vid = std::max(vid, x.id + 1);
  }
  if (id_to_slot_.count(vid)) throw ValidationError("duplicate vehicle id " + std::to_string(vid));
  VehicleState st;
  st.id = vid;
  st.route = std::move(route);
  st.lane = st.route.front();
  st.s = s;
  st.v = v;
  st.length = config_.vehicle_length;
  st.status = VehicleStatus::driving;
  st.depart_time = time_;
  st.origin_lane = st.lane;
  st.origin_s = s;
  st.dest_lane = st.route.back();
  id_to_slot_.emplace(vid, static_cast<Slot>(vehicles_.size()));
  vehicles_.push_back(std::move(st));
  return vid;
}

StepReport Engine::step() { return step_impl(nullptr); }

StepReport Engine::step_impl(RecordSink* sink) {
  const double t_new = start_time_ + static_cast<double>(step_ + 1) * config_.dt;
  StepReport report;

  // Phase 1: index and snapshot.
  const Prepared prepared = prepare(net_.lanes.size(), vehicles_, *exec_);

  // Phase 2: independent per-vehicle updates against the frozen snapshot.
  UpdateContext ctx;
  ctx.net = &net_;
  ctx.lanes = lanes_;
  ctx.lights = lights_;
  ctx.vehicles = vehicles_;
  ctx.snapshot = &prepared.snapshot;
  ctx.index = &prepared.index;
  ctx.config = &config_;
  ctx.step = step_;
  const auto& driving = prepared.snapshot.driving;
  std::vector<VehicleDelta> deltas(driving.size());
  exec_->parallel_for(driving.size(), 256, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) deltas[i] = update_vehicle(ctx, driving[i]);
  });

  // Signal inputs come from the state this step started with.
  std::vector<int> queued;
  std::vector<int> lane_counts;
  if (config_.controller == ControllerKind::max_pressure) {
    queued.assign(net_.lanes.size(), 0);
    lane_counts.assign(net_.lanes.size(), 0);
    for (std::size_t l = 0; l < lane_counts.size(); ++l)
      lane_counts[l] = prepared.index.count(static_cast<LaneId>(l));
    // A movement can only serve the run of vehicles at the head of a lane that
    // all want it; anyone behind a vehicle bound elsewhere is blocked.
    for (std::size_t l = 0; l < lane_counts.size(); ++l) {
      if (lanes_[l].connector) continue;
      LaneId want = kNoLane;
      for (Slot slot : prepared.index.on_lane(static_cast<LaneId>(l))) {
        const VehicleState& v = vehicles_[slot];
        if (v.route_index + 1 >= v.route.size()) break;
        const LaneId next = v.route[v.route_index + 1];
        if (want != kNoLane && next != want) break;
        want = next;
        ++queued[static_cast<std::size_t>(next)];
      }
    }
  }

  // Commit: the only cross-vehicle mutation point.
  commit(prepared, deltas, t_new, report);
  inject(t_new, report);
  advance_signals(queued, lane_counts);
  refresh_lights();

  ++step_;
  time_ = t_new;
  collect_stats(t_new, sink);
  report.time = t_new;
  for (const VehicleState& v : vehicles_) {
    if (v.status == VehicleStatus::driving) ++report.driving;
    if (v.status == VehicleStatus::waiting) ++report.waiting;
  }
  return report;
}

void Engine::advance_signals(std::span<const int> queued, std::span<const int> lane_counts) {
  for (std::size_t j = 0; j < net_.junctions.size(); ++j) {
    const Junction& junction = net_.junctions[j];
    if (config_.controller == ControllerKind::max_pressure && junction.signalized)
      max_pressure_step(net_, junction, signals_[j], queued, lane_counts, config_.max_pressure,
                        config_.amber, config_.dt);
    else
      fixed_phase(junction.program, signals_[j], config_.dt);
  }
}

void Engine::collect_stats(double t_new, RecordSink* sink) {
  const std::size_t roads = net_.roads.size();
  std::vector<double> sum(roads, 0.0);
  std::vector<int> count(roads, 0);
  record_buf_.clear();
  for (const VehicleState& v : vehicles_) {
    if (v.status != VehicleStatus::driving) continue;
    const LaneStatic& ls = lanes_[static_cast<std::size_t>(v.lane)];
    if (ls.road >= 0) {
      sum[static_cast<std::size_t>(ls.road)] += v.v;
      ++count[static_cast<std::size_t>(ls.road)];
    }
    if (sink)
      record_buf_.push_back(VehicleRecord{t_new, v.id, v.lane, v.s, v.v,
                                          heading_deg_at(net_.lane(v.lane).centerline, v.s)});
  }

  StepRoadSamples samples;
  road_buf_.clear();
  for (std::size_t r = 0; r < roads; ++r) {
    if (count[r] == 0) continue;
    window_sum_[r] += sum[r];
    window_count_[r] += count[r];
    samples.roads.push_back(static_cast<int>(r));
    samples.sums.push_back(sum[r]);
    samples.counts.push_back(count[r]);
    road_buf_.push_back(RoadSample{static_cast<int>(r), sum[r] / count[r], count[r]});
  }
  history_.push_back(std::move(samples));
  const auto max_history =
      static_cast<std::size_t>(std::max(1.0, std::ceil(config_.speed_history / config_.dt - 1e-9)));
  while (history_.size() > max_history) history_.pop_front();

  const auto per_window =
      static_cast<std::uint64_t>(std::max(1.0, std::round(config_.stats_window / config_.dt)));
  if (++steps_in_window_ == per_window) {
    for (std::size_t r = 0; r < roads; ++r) {
      const double mean = window_count_[r] > 0
                              ? window_sum_[r] / static_cast<double>(window_count_[r])
                              : free_flow_[r];
      closed_windows_.push_back(RoadSpeedWindow{net_.roads[r].id, window_start_, t_new, mean});
    }
    std::fill(window_sum_.begin(), window_sum_.end(), 0.0);
    std::fill(window_count_.begin(), window_count_.end(), 0);
    steps_in_window_ = 0;
    window_start_ = t_new;
  }

  if (sink) {
    std::sort(record_buf_.begin(), record_buf_.end(),
              [](const VehicleRecord& a, const VehicleRecord& b) { return a.id < b.id; });
    try {
      sink->write_step(t_new, record_buf_, road_buf_);
    } catch (const std::exception& e) {
      throw SinkFailure(e.what());
    }
  }
}

SimulationOutput Engine::run(std::size_t steps, RecordSink* sink) {
  SimulationOutput out;
  out.start_time = time_;
  for (std::size_t i = 0; i < steps; ++i) {
    try {
      const StepReport r = step_impl(sink);
      if (sink) out.records += r.driving;
      ++out.steps;
    } catch (const SinkFailure& e) {
      out.partial = true;
      out.error = e.what();
      break;
    }
  }
  if (sink && !out.partial) {
    try {
      sink->finish(time_);
    } catch (const std::exception& e) {
      out.partial = true;
      out.error = e.what();
    }
  }
  out.end_time = time_;
  out.trips = trip_outcomes();
  if (out.steps > 0) out.road_speeds = road_speed_windows();
  return out;
}

std::vector<TripOutcome> Engine::trip_outcomes() const {
  std::vector<TripOutcome> out;
  out.reserve(vehicles_.size());
  for (const VehicleState& v : vehicles_)
    out.push_back(TripOutcome{v.id, v.depart_time, v.status, v.finish_time});
  std::sort(out.begin(), out.end(),
            [](const TripOutcome& a, const TripOutcome& b) { return a.id < b.id; });
  return out;
}

std::vector<RoadSpeedWindow> Engine::road_speed_windows() const {
  std::vector<RoadSpeedWindow> out = closed_windows_;
  if (steps_in_window_ > 0) {
    for (std::size_t r = 0; r < net_.roads.size(); ++r) {
      const double mean = window_count_[r] > 0
                              ? window_sum_[r] / static_cast<double>(window_count_[r])
                              : free_flow_[r];
      out.push_back(RoadSpeedWindow{net_.roads[r].id, window_start_, time_, mean});
    }
  }
  return out;
}

std::size_t Engine::count(VehicleStatus status) const {
  return static_cast<std::size_t>(std::count_if(
      vehicles_.begin(), vehicles_.end(), [&](const VehicleState& v) { return v.status == status; }));
}

std::vector<std::vector<Slot>> Engine::lane_occupants() const {
  std::vector<std::vector<Slot>> out(net_.lanes.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i)
    if (vehicles_[i].status == VehicleStatus::driving)
      out[static_cast<std::size_t>(vehicles_[i].lane)].push_back(static_cast<Slot>(i));
  for (auto& lane : out)
    std::sort(lane.begin(), lane.end(), [&](Slot a, Slot b) {
      if (vehicles_[a].s != vehicles_[b].s) return vehicles_[a].s > vehicles_[b].s;
      return vehicles_[a].id < vehicles_[b].id;
    });
  return out;
}

// ---------------------------------------------------------------------------
// Control surface

std::size_t Engine::slot_of(std::int64_t id) const {
  const auto it = id_to_slot_.find(id);
  if (it == id_to_slot_.end()) throw LookupError("unknown vehicle " + std::to_string(id));
  return it->second;
}

void Engine::set_lane_max_speed(LaneId lane, double max_speed) {
  if (lane < 0 || static_cast<std::size_t>(lane) >= net_.lanes.size())
    throw LookupError("unknown lane " + std::to_string(lane));
  if (!(max_speed > 0.0) || !std::isfinite(max_speed))
    throw ValidationError("lane speed limit must be positive");
  net_.lane(lane).max_speed = max_speed;
  rebuild_lane_statics();
  router_.invalidate();
}

void Engine::set_lane_restriction(LaneId lane, Restriction restriction) {
  if (lane < 0 || static_cast<std::size_t>(lane) >= net_.lanes.size())
    throw LookupError("unknown lane " + std::to_string(lane));
  net_.lane(lane).restriction = restriction;
  lanes_[static_cast<std::size_t>(lane)].closed = restriction == Restriction::closed;
  router_.invalidate();
  if (restriction != Restriction::closed) return;
  // Drivers planning to enter the lane look for another way; those already on
  // it stay where they are.
  for (VehicleState& v : vehicles_) {
    if (v.status != VehicleStatus::driving) continue;
    const auto rest = v.route.begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1;
    if (std::find(rest, v.route.end(), lane) == v.route.end()) continue;
    // From a connector the next road lane is already committed.
    const std::size_t from = lanes_[static_cast<std::size_t>(v.lane)].connector
                                 ? v.route_index + 1
                                 : v.route_index;
    if (from >= v.route.size() || v.route[from] == lane) continue;
    try {
      Route r = router_.route(v.route[from], v.route.back());
      v.route.resize(from);
      v.route.insert(v.route.end(), r.lanes.begin(), r.lanes.end());
    } catch (const NoRouteError&) {
      // Keep the old route; the vehicle will wait at the closed entry.
    }
  }
}

void Engine::set_signal_phase(std::string_view junction, int phase) {
  const auto j = net_.find_junction(junction);
  if (!j) throw LookupError("unknown junction " + std::string(junction));
  const SignalProgram& program = net_.junctions[*j].program;
  if (phase < 0 || static_cast<std::size_t>(phase) >= program.phases.size())
    throw std::out_of_range("junction " + std::string(junction) + " has no phase " +
                            std::to_string(phase));
  SignalState& st = signals_[*j];
  if (config_.controller == ControllerKind::max_pressure && net_.junctions[*j].signalized) {
    st = max_pressure_initial_state(program);
    st.phase = phase;
  } else {
    enter_fixed_phase(program, st, phase);
  }
  refresh_lights();
}

VehicleInfo Engine::get_vehicle(std::int64_t id) const {
  const VehicleState& v = vehicles_[slot_of(id)];
  VehicleInfo info;
  info.id = v.id;
  info.status = v.status;
  info.route = v.route;
  info.route_index = v.route_index;
  if (v.status == VehicleStatus::driving || v.status == VehicleStatus::finished) {
    info.lane = v.lane;
    info.s = v.s;
    info.v = v.v;
    info.angle_deg = heading_deg_at(net_.lane(v.lane).centerline, v.s);
  }
  return info;
}

double Engine::free_flow_speed(std::size_t road) const {
  if (road >= free_flow_.size()) throw LookupError("unknown road index " + std::to_string(road));
  return free_flow_[road];
}

double Engine::get_road_speed(std::string_view road, double window) const {
  const auto r = net_.find_road(road);
  if (!r) throw LookupError("unknown road " + std::string(road));
  if (!(window > 0.0)) throw ValidationError("speed window must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(window / config_.dt - 1e-9));
  const std::size_t n = std::min(steps, history_.size());
  double sum = 0.0;
  long count = 0;
  const int target = static_cast<int>(*r);
  for (std::size_t k = history_.size() - n; k < history_.size(); ++k) {
    const StepRoadSamples& s = history_[k];
    const auto it = std::lower_bound(s.roads.begin(), s.roads.end(), target);
    if (it == s.roads.end() || *it != target) continue;
    const auto idx = static_cast<std::size_t>(it - s.roads.begin());
    sum += s.sums[idx];
    count += s.counts[idx];
  }
  return count > 0 ? sum / static_cast<double>(count) : free_flow_[*r];
}

}  // namespace tsim
