#pragma once

// Shared blackboard. All persistent controller state lives here so the other
// micro-controllers can stay stateless. Writes are versioned per key and all
// commits pass through one serialization point; watchers get exactly one
// notification per commit under their prefix, in commit order.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "microctl/error.hpp"
#include "microctl/phone_sim.hpp"
#include "microctl/variants.hpp"

namespace microctl {

// Slash-separated path: non-empty segments, no leading/trailing slash.
class KnowledgeKey {
 public:
  explicit KnowledgeKey(std::string path) : path_(std::move(path)) {
    if (!is_valid_path(path_)) raise(Errc::malformed_key, "'" + path_ + "'");
  }

  static bool is_valid_path(std::string_view path) {
    if (path.empty()) return false;
    if (path.front() == '/' || path.back() == '/') return false;
    std::size_t seg_len = 0;
    for (char c : path) {
      if (c == '/') {
        if (seg_len == 0) return false;
        seg_len = 0;
      } else {
        ++seg_len;
      }
    }
    return seg_len > 0;
  }

  const std::string& path() const { return path_; }

  // Prefix match on segment boundaries: "failures" covers "failures/latest"
  // but "sensor" does not cover "sensors/snapshot".
  bool is_under(const KnowledgeKey& prefix) const {
    if (path_ == prefix.path_) return true;
    return path_.size() > prefix.path_.size() &&
           path_.compare(0, prefix.path_.size(), prefix.path_) == 0 &&
           path_[prefix.path_.size()] == '/';
  }

  friend bool operator==(const KnowledgeKey& a, const KnowledgeKey& b) {
    return a.path_ == b.path_;
  }
  friend bool operator<(const KnowledgeKey& a, const KnowledgeKey& b) {
    return a.path_ < b.path_;
  }

 private:
  std::string path_;
};

// Well-known keys.
namespace keys {
inline const KnowledgeKey& context_state() {
  static const KnowledgeKey k{"context/state"};
  return k;
}
inline const KnowledgeKey& sensors_snapshot() {
  static const KnowledgeKey k{"sensors/snapshot"};
  return k;
}
inline const KnowledgeKey& effectors_state() {
  static const KnowledgeKey k{"effectors/state"};
  return k;
}
inline const KnowledgeKey& health() {
  static const KnowledgeKey k{"health"};
  return k;
}
inline const KnowledgeKey& ensemble_config() {
  static const KnowledgeKey k{"ensemble/config"};
  return k;
}
inline const KnowledgeKey& failures_latest() {
  static const KnowledgeKey k{"failures/latest"};
  return k;
}
}  // namespace keys

using KnowledgeValue = std::variant<ContextState, SensorSnapshot, EffectorState, HealthState,
                                    FailureRecord, EnsembleConfig>;

struct KnowledgeEntry {
  KnowledgeKey key;
  KnowledgeValue value;
  std::uint64_t version = 0;  // per key, starting at 1
  std::uint64_t tick = 0;
};

struct ChangeNotification {
  KnowledgeKey key;
  std::optional<std::uint64_t> old_version;
  std::uint64_t new_version = 0;
};

using WatchSink = std::function<void(const ChangeNotification&)>;
using WatchHandle = std::uint64_t;

class KnowledgeStore {
 public:
  // Commits a value. The tick may not go backwards for the same key; the
  // version increments by one. Returns the new version.
  std::uint64_t put(const KnowledgeKey& key, KnowledgeValue value, std::uint64_t tick) {
    ChangeNotification note{key, std::nullopt, 0};
    std::vector<WatchSink> sinks;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find(key.path());
      std::uint64_t version = 1;
      if (it != entries_.end()) {
        if (tick < it->second.tick) {
          raise(Errc::tick_regression, "tick " + std::to_string(tick) + " < " +
                                           std::to_string(it->second.tick) + " for '" +
                                           key.path() + "'");
        }
        note.old_version = it->second.version;
        version = it->second.version + 1;
      }
      note.new_version = version;
      KnowledgeEntry entry{key, std::move(value), version, tick};
      entries_.insert_or_assign(key.path(), std::move(entry));
      for (const Watcher& w : watchers_) {
        if (key.is_under(w.prefix)) sinks.push_back(w.sink);
      }
    }
    // Delivered outside the lock; in the deterministic schedule this is
    // synchronous with the commit.
    for (const WatchSink& sink : sinks) sink(note);
    return note.new_version;
  }

  std::optional<KnowledgeEntry> get(const KnowledgeKey& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key.path());
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Latest value under the key when it holds a T.
  template <typename T>
  std::optional<T> get_value(const KnowledgeKey& key) const {
    auto entry = get(key);
    if (!entry) return std::nullopt;
    if (const T* v = std::get_if<T>(&entry->value)) return *v;
    return std::nullopt;
  }

  WatchHandle watch(const KnowledgeKey& prefix, WatchSink sink) {
    std::lock_guard<std::mutex> lock(mu_);
    WatchHandle handle = next_handle_++;
    watchers_.push_back({handle, prefix, std::move(sink)});
    return handle;
  }

  void unwatch(WatchHandle handle) {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto it = watchers_.begin(); it != watchers_.end(); ++it) {
      if (it->handle == handle) {
        watchers_.erase(it);
        return;
      }
    }
  }

  std::vector<std::string> key_paths() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [path, entry] : entries_) out.push_back(path);
    return out;
  }

 private:
  struct Watcher {
    WatchHandle handle;
    KnowledgeKey prefix;
    WatchSink sink;
  };

  mutable std::mutex mu_;
  std::map<std::string, KnowledgeEntry> entries_;
  std::vector<Watcher> watchers_;  // registration order
  WatchHandle next_handle_ = 1;
};

}  // namespace microctl
