// The agent runtime: a name, a private global environment, one cloned
// (environment, interpreter) pair per conversation partner, message queues
// and the REPL behaviour loop (read one message, evaluate it in the partner's
// conversation, print the replies to the outbox, listen again).
#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "parley/acl.hpp"
#include "parley/amb.hpp"
#include "parley/bus.hpp"
#include "parley/env.hpp"
#include "parley/eval.hpp"

namespace parley {

struct LogEntry {
  enum class Dir { In, Out };
  Dir dir;
  Message msg;
  std::size_t step;
};

inline std::string format_log(const std::vector<LogEntry>& log) {
  std::string out;
  for (const LogEntry& e : log) {
    out += e.dir == LogEntry::Dir::In ? "in  " : "out ";
    out += std::to_string(e.step);
    out += ' ';
    out += encode(e.msg);
    out += '\n';
  }
  return out;
}

class Agent : public MessageSink {
 public:
  Agent(std::string name, const std::vector<Value>& seed_definitions = {},
        InterpConfig config = {})
      : name_(std::move(name)), config_(config) {
    global_env_ = pool_.make();
    install_primitives(global_env_);
    load_prelude(global_env_);
    make_default_dispatch(global_env_);
    for (const Value& form : seed_definitions) evaluate(form, global_env_);
  }

  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const std::string& name() const { return name_; }
  Env* global_env() { return global_env_; }
  const Env* global_env() const { return global_env_; }
  CallCounts& counts() { return counts_; }
  InterpConfig& config() { return config_; }
  std::string global_snapshot() const { return snapshot(global_env_); }

  void accept(const Message& msg) override {
    std::lock_guard lock(inbox_mu_);
    inbox_.push_back(msg);
  }

  std::size_t inbox_size() const {
    std::lock_guard lock(inbox_mu_);
    return inbox_.size();
  }

  // Proactive send: queued on the outbox and logged, picked up by the next
  // transport flush.
  void send(Message msg) {
    log_.push_back({LogEntry::Dir::Out, msg, steps_});
    std::lock_guard lock(outbox_mu_);
    outbox_.push_back(std::move(msg));
  }

  std::vector<Message> drain_outbox() {
    std::vector<Message> out;
    std::lock_guard lock(outbox_mu_);
    out.swap(outbox_);
    return out;
  }

  std::size_t outbox_size() const {
    std::lock_guard lock(outbox_mu_);
    return outbox_.size();
  }

  // One REPL turn. Read: dequeue one message (no-op on an empty inbox).
  // Eval: dispatch it in the sender's conversation. Print: queue the replies.
  // Listen: return.
  bool step() {
    Message msg;
    {
      std::lock_guard lock(inbox_mu_);
      if (inbox_.empty()) return false;
      msg = std::move(inbox_.front());
      inbox_.pop_front();
    }
    ++steps_;
    log_.push_back({LogEntry::Dir::In, msg, steps_});
    std::vector<Message> replies;
    try {
      replies = dispatch(conversation(msg.sender), msg);
    } catch (const std::exception& e) {
      replies.push_back(Message{"answer", name_, msg.sender,
                                vlist({Value::sym("error"), Value::sym("agent-failure"),
                                       Value::str(e.what())})});
    }
    std::lock_guard lock(outbox_mu_);
    for (Message& r : replies) {
      log_.push_back({LogEntry::Dir::Out, r, steps_});
      outbox_.push_back(std::move(r));
    }
    return true;
  }

  // The partner's cognitive environment: cloned from the private global
  // state on first contact, resumed on every later one.
  Conversation& conversation(const std::string& partner) {
    auto it = others_.find(partner);
    if (it != others_.end()) return it->second;
    Conversation& conv = others_[partner];
    conv.self_name = name_;
    conv.partner = partner;
    conv.env = pool_.clone(global_env_);
    conv.config = config_;
    conv.counts = &counts_;
    conv.display = display_;
    conv.partners_fn = [this, partner]() { return partners_excluding(partner); };
    return conv;
  }

  bool has_conversation(const std::string& partner) const {
    return others_.count(partner) > 0;
  }

  void end_conversation(const std::string& partner) { others_.erase(partner); }

  std::vector<std::string> partners() const {
    std::vector<std::string> out;
    for (const auto& [name, conv] : others_) out.push_back(name);
    return out;
  }

  std::vector<std::string> partners_excluding(const std::string& requester) const {
    std::vector<std::string> out;
    for (const auto& [name, conv] : others_) {
      if (name != requester) out.push_back(name);
    }
    return out;
  }

  const std::vector<LogEntry>& log() const { return log_; }
  std::string conversation_log() const { return format_log(log_); }
  std::size_t steps_processed() const { return steps_; }

  void set_display(std::ostream* sink) {
    display_ = sink;
    for (auto& [name, conv] : others_) conv.display = sink;
  }

 private:
  std::string name_;
  InterpConfig config_;
  EnvPool pool_;
  Env* global_env_ = nullptr;
  CallCounts counts_;
  std::map<std::string, Conversation> others_;
  std::deque<Message> inbox_;
  std::vector<Message> outbox_;
  std::vector<LogEntry> log_;
  std::size_t steps_ = 0;
  std::ostream* display_ = nullptr;
  mutable std::mutex inbox_mu_;
  mutable std::mutex outbox_mu_;
};

}  // namespace parley
