// A set of agents on one bus plus the schedulers. Round-robin stepping is the
// default because golden transcripts require bit-identical delivery order;
// the free-running mode steps every agent on its own thread.
#pragma once

#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "parley/agent.hpp"
#include "parley/bus.hpp"

namespace parley {

enum class Scheduler { RoundRobin, Free };

class World {
 public:
  Agent& spawn(const std::string& name, const std::vector<Value>& seeds = {},
               InterpConfig config = {}) {
    auto agent = std::make_unique<Agent>(name, seeds, config);
    bus_.add(name, agent.get());  // throws RegistrationError on duplicates
    agents_.push_back(std::move(agent));
    return *agents_.back();
  }

  Agent* find(const std::string& name) {
    for (auto& a : agents_) {
      if (a->name() == name) return a.get();
    }
    return nullptr;
  }

  Bus& bus() { return bus_; }
  const Bus& bus() const { return bus_; }
  std::vector<std::unique_ptr<Agent>>& agents() { return agents_; }

  // Scripted turn: hand a message straight to the transport.
  void inject(const Message& msg) { bus_.deliver(msg); }

  bool quiescent() const {
    for (const auto& a : agents_) {
      if (a->inbox_size() > 0 || a->outbox_size() > 0) return false;
    }
    return true;
  }

  // Gives each agent one step per round, in spawn order, flushing its outbox
  // immediately so delivery order is a pure function of the script.
  bool run_round_robin(std::size_t max_rounds = 100000) {
    for (std::size_t round = 0; round < max_rounds; ++round) {
      bool progress = false;
      for (auto& agent : agents_) {
        if (agent->step()) progress = true;
        for (const Message& out : agent->drain_outbox()) {
          bus_.deliver(out);
          progress = true;
        }
      }
      if (!progress) return true;
    }
    return false;
  }

  // Opt-in concurrent stepping: one thread per agent, until every queue has
  // stayed empty long enough to call the world idle. Delivery order is not
  // reproducible here; use round-robin for transcripts.
  bool run_free(int idle_checks = 50) {
    std::atomic<bool> stop{false};
    std::vector<std::thread> threads;
    threads.reserve(agents_.size());
    for (auto& agent : agents_) {
      threads.emplace_back([this, &stop, a = agent.get()]() {
        while (!stop.load(std::memory_order_relaxed)) {
          bool worked = a->step();
          for (const Message& out : a->drain_outbox()) {
            bus_.deliver(out);
            worked = true;
          }
          if (!worked) std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
      });
    }
    int calm = 0;
    while (calm < idle_checks) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      calm = quiescent() ? calm + 1 : 0;
    }
    stop.store(true);
    for (auto& t : threads) t.join();
    return true;
  }

  bool run(Scheduler mode) {
    return mode == Scheduler::RoundRobin ? run_round_robin() : run_free();
  }

 private:
  Bus bus_;
  std::vector<std::unique_ptr<Agent>> agents_;
};

}  // namespace parley
