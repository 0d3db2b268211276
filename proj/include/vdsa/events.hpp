#pragma once

#include <cstdint>
#include <queue>
#include <vector>

namespace vdsa {

enum class EventType : std::uint8_t {
  Generate,
  BackoffDone,
  SenseApply,
  TxEnd,
  MobilityStep,
  Allocate,
  Stop,
};

struct Event {
  double time{0.0};
  std::uint64_t seq{0};
  EventType type{EventType::Stop};
  int node{-1};
  int radio{0};
  /// Generation token or transmission id, depending on type.
  std::uint64_t token{0};
};

/// Min-queue on (time, insertion sequence): a total order, so equal
/// timestamps are processed in scheduling order on every platform.
class EventQueue {
 public:
  std::uint64_t push(double time, EventType type, int node = -1, int radio = 0, std::uint64_t token = 0) {
    const std::uint64_t s = next_seq_++;
    heap_.push(Event{time, s, type, node, radio, token});
    return s;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_{0};
};

}  // namespace vdsa
