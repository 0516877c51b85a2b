#include "campsim/belady.hpp"

#include <algorithm>
#include <stdexcept>

namespace campsim {

std::size_t next_use_distance(std::span<const std::string> future, const std::string& block) {
  for (std::size_t i = 0; i < future.size(); ++i) {
    if (future[i] == block) return i + 1;
  }
  return kNeverReused;
}

std::size_t belady_victim(std::span<const std::string> resident, std::span<const std::string> future) {
  if (resident.empty()) throw std::invalid_argument("no resident blocks");
  std::size_t best = 0;
  std::size_t best_dist = next_use_distance(future, resident[0]);
  for (std::size_t i = 1; i < resident.size(); ++i) {
    const std::size_t d = next_use_distance(future, resident[i]);
    if (d > best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

std::size_t size_aware_victim(std::span<const std::string> resident, const std::map<std::string, std::size_t>& sizes,
                              std::span<const std::string> future) {
  if (resident.empty()) throw std::invalid_argument("no resident blocks");
  struct Key {
    bool never;
    std::size_t product;  // distance * size; larger = less valuable
    std::size_t size;
  };
  auto key = [&](std::size_t i) {
    const std::size_t d = next_use_distance(future, resident[i]);
    const std::size_t s = sizes.at(resident[i]);
    return Key{d == kNeverReused, d == kNeverReused ? 0 : d * s, s};
  };
  auto worse = [](const Key& a, const Key& b) {
    if (a.never != b.never) return a.never;
    if (!a.never && a.product != b.product) return a.product > b.product;
    return a.size > b.size;
  };
  std::size_t best = 0;
  Key best_key = key(0);
  for (std::size_t i = 1; i < resident.size(); ++i) {
    const Key k = key(i);
    if (worse(k, best_key)) {
      best = i;
      best_key = k;
    }
  }
  return best;
}

std::size_t ScriptedRun::hit_count(std::size_t from, std::size_t to) const {
  return static_cast<std::size_t>(std::count(hits.begin() + static_cast<std::ptrdiff_t>(from),
                                             hits.begin() + static_cast<std::ptrdiff_t>(to), true));
}

ScriptedRun run_scripted(std::size_t capacity_bytes, const std::map<std::string, std::size_t>& sizes,
                         std::vector<std::string> initial, std::span<const std::string> sequence, OfflineRule rule) {
  std::vector<std::string> resident = std::move(initial);
  auto used = [&] {
    std::size_t u = 0;
    for (const auto& b : resident) u += sizes.at(b);
    return u;
  };
  if (used() > capacity_bytes) throw std::invalid_argument("initial contents exceed capacity");

  ScriptedRun run;
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const std::string& block = sequence[t];
    run.evicted.emplace_back();
    if (std::find(resident.begin(), resident.end(), block) != resident.end()) {
      run.hits.push_back(true);
      continue;
    }
    run.hits.push_back(false);
    const std::size_t need = sizes.at(block);
    if (need > capacity_bytes) throw std::invalid_argument("block larger than cache");
    const auto future = sequence.subspan(t + 1);
    while (used() + need > capacity_bytes) {
      const std::size_t v =
          rule == OfflineRule::Belady ? belady_victim(resident, future) : size_aware_victim(resident, sizes, future);
      run.evicted.back().push_back(resident[v]);
      resident.erase(resident.begin() + static_cast<std::ptrdiff_t>(v));
    }
    resident.push_back(block);
  }
  return run;
}

}  // namespace campsim
