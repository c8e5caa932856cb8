#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

#include "stallsched/model.hpp"

namespace stallsched {

// Bookkeeping for outstanding reservations: which servers hold live tokens
// of each type, in placement order. Consumption takes the oldest live token
// on the lowest-indexed server; expiry invalidates a token wherever it sits
// in the queue (stale entries are skipped lazily on consumption).
class TokenPool {
 public:
  TokenPool(std::int32_t num_servers, std::size_t num_types)
      : num_types_(num_types),
        fifo_(static_cast<std::size_t>(num_servers) * num_types),
        servers_(num_types),
        totals_(num_types, 0),
        per_server_(static_cast<std::size_t>(num_servers) * num_types, 0) {}

  std::uint64_t place(std::int32_t server, std::int32_t type) {
    const std::uint64_t uid = next_uid_++;
    live_.insert(uid);
    fifo_[slot(server, type)].push_back(uid);
    ++per_server_[slot(server, type)];
    ++totals_[static_cast<std::size_t>(type)];
    servers_[static_cast<std::size_t>(type)].insert(server);
    return uid;
  }

  bool live(std::uint64_t uid) const { return live_.count(uid) != 0; }

  std::int64_t outstanding(std::int32_t type) const {
    return totals_[static_cast<std::size_t>(type)];
  }

  std::int32_t count(std::int32_t server, std::int32_t type) const {
    return per_server_[slot(server, type)];
  }

  std::optional<std::int32_t> lowest_server(std::int32_t type) const {
    const auto& set = servers_[static_cast<std::size_t>(type)];
    if (set.empty()) return std::nullopt;
    return *set.begin();
  }

  // Consumes the oldest live token of `type` on `server`.
  std::uint64_t consume(std::int32_t server, std::int32_t type) {
    auto& queue = fifo_[slot(server, type)];
    while (!queue.empty() && live_.count(queue.front()) == 0) queue.pop_front();
    if (queue.empty())
      throw InvariantViolation("token registry out of sync with reservations");
    const std::uint64_t uid = queue.front();
    queue.pop_front();
    live_.erase(uid);
    remove_one(server, type);
    return uid;
  }

  // Returns false (and changes nothing) when the token was already consumed.
  bool expire(std::uint64_t uid, std::int32_t server, std::int32_t type) {
    if (live_.erase(uid) == 0) return false;
    remove_one(server, type);
    return true;
  }

 private:
  std::size_t slot(std::int32_t server, std::int32_t type) const {
    return static_cast<std::size_t>(server) * num_types_ +
           static_cast<std::size_t>(type);
  }

  void remove_one(std::int32_t server, std::int32_t type) {
    if (per_server_[slot(server, type)] <= 0)
      throw InvariantViolation("token removed from a server holding none");
    --totals_[static_cast<std::size_t>(type)];
    if (--per_server_[slot(server, type)] == 0)
      servers_[static_cast<std::size_t>(type)].erase(server);
  }

  std::size_t num_types_;
  std::uint64_t next_uid_ = 1;
  std::vector<std::deque<std::uint64_t>> fifo_;
  std::vector<std::set<std::int32_t>> servers_;
  std::vector<std::int64_t> totals_;
  std::vector<std::int32_t> per_server_;
  std::unordered_set<std::uint64_t> live_;
};

}  // namespace stallsched
