// In-process message delivery: a registry of named inboxes, an ordered
// delivery log and a dead-letter queue for unknown receivers.
#pragma once

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "parley/acl.hpp"

namespace parley {

struct MessageSink {
  virtual ~MessageSink() = default;
  virtual void accept(const Message& msg) = 0;
};

struct DeliveryRecord {
  Message msg;
  std::size_t seq;
};

struct RegistrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Bus {
 public:
  void add(const std::string& name, MessageSink* sink) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = registry_.emplace(name, sink);
    if (!inserted) throw RegistrationError("duplicate agent name: " + name);
  }

  void remove(const std::string& name) {
    std::lock_guard lock(mu_);
    registry_.erase(name);
  }

  bool known(const std::string& name) const {
    std::lock_guard lock(mu_);
    return registry_.count(name) > 0;
  }

  // Appends to the receiver's inbox, or to the dead-letter queue when the
  // receiver is unknown. FIFO per sender is inherited from call order.
  bool deliver(const Message& msg) {
    MessageSink* sink = nullptr;
    {
      std::lock_guard lock(mu_);
      auto it = registry_.find(msg.receiver);
      if (it == registry_.end()) {
        dead_letters_.push_back(msg);
        return false;
      }
      sink = it->second;
      log_.push_back({msg, next_seq_++});
    }
    sink->accept(msg);
    return true;
  }

  const std::vector<DeliveryRecord>& delivery_log() const { return log_; }
  const std::vector<Message>& dead_letters() const { return dead_letters_; }

  std::string transcript() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const DeliveryRecord& rec : log_) {
      out += encode(rec.msg);
      out += '\n';
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, MessageSink*> registry_;
  std::vector<DeliveryRecord> log_;
  std::vector<Message> dead_letters_;
  std::size_t next_seq_ = 0;
};

}  // namespace parley
