#include <algorithm>

#include "tsim/engine.hpp"
#include "tsim/executor.hpp"

namespace tsim {

Prepared prepare(std::size_t lane_count, std::span<const VehicleState> vehicles, Executor& exec) {
  Prepared out;
  Snapshot& snap = out.snapshot;
  LaneIndex& index = out.index;

  snap.motion.resize(vehicles.size());
  index.rank.assign(vehicles.size(), 0);
  index.offsets.assign(lane_count + 1, 0);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const VehicleState& v = vehicles[i];
    if (v.status != VehicleStatus::driving) continue;
    snap.motion[i] = Motion{v.lane, v.s, v.v};
    snap.driving.push_back(static_cast<Slot>(i));
    ++index.offsets[static_cast<std::size_t>(v.lane) + 1];
  }

  // Counting sort by lane; slots within a lane start in ascending order.
  for (std::size_t l = 0; l < lane_count; ++l) index.offsets[l + 1] += index.offsets[l];
  index.order.resize(snap.driving.size());
  {
    std::vector<std::uint32_t> cursor(index.offsets.begin(), index.offsets.end() - 1);
    for (Slot slot : snap.driving)
      index.order[cursor[static_cast<std::size_t>(snap.motion[slot].lane)]++] = slot;
  }

  // Each lane is owned by exactly one task.
  exec.parallel_for(lane_count, 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t l = begin; l < end; ++l) {
      auto first = index.order.begin() + index.offsets[l];
      auto last = index.order.begin() + index.offsets[l + 1];
      std::sort(first, last, [&](Slot a, Slot b) {
        const double sa = snap.motion[a].s;
        const double sb = snap.motion[b].s;
        if (sa != sb) return sa > sb;
        return vehicles[a].id < vehicles[b].id;
      });
      for (auto it = first; it != last; ++it)
        index.rank[*it] = static_cast<std::uint32_t>(it - first);
    }
  });
  return out;
}

}  // namespace tsim
