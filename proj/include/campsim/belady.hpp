#pragma once

// Offline eviction oracles over a fully-associative cache measured in bytes.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace campsim {

inline constexpr std::size_t kNeverReused = static_cast<std::size_t>(-1);

// Distance (in accesses, 1 = next access) until `block` is referenced again
// in `future`, or kNeverReused.
std::size_t next_use_distance(std::span<const std::string> future, const std::string& block);

// Resident index referenced furthest in the future; never-reused blocks
// first, lowest index on ties. Size-oblivious.
std::size_t belady_victim(std::span<const std::string> resident, std::span<const std::string> future);

// Resident index with the smallest value 1 / (next-use distance * size);
// never-reused blocks first (larger first), then larger block, then lower index on ties.
std::size_t size_aware_victim(std::span<const std::string> resident, const std::map<std::string, std::size_t>& sizes,
                              std::span<const std::string> future);

enum class OfflineRule { Belady, SizeAware };

struct ScriptedRun {
  std::vector<bool> hits;  // per access
  std::vector<std::vector<std::string>> evicted;  // per access
  std::size_t hit_count(std::size_t from, std::size_t to) const;
};

// Replays `sequence` on a byte-capacity cache that starts with `initial`.
ScriptedRun run_scripted(std::size_t capacity_bytes, const std::map<std::string, std::size_t>& sizes,
                         std::vector<std::string> initial, std::span<const std::string> sequence, OfflineRule rule);

}  // namespace campsim
