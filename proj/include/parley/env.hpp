// First-class environments with per-binding value history.
//
// A binding is not (var value) but the whole ordered sequence of values the
// variable has held, newest last. Environments live in an EnvPool arena; a
// pool owns every frame reachable from the environments it created, which
// sidesteps the closure/frame reference cycles a refcounting scheme would
// leak. Each agent (or test) owns one pool.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "parley/sexpr.hpp"

namespace parley {

struct EvalError : std::runtime_error {
  std::string kind;     // unbound-variable, wrong-arity, not-a-procedure, ...
  Value offender;       // the offending expression or value
  EvalError(std::string k, Value off, const std::string& msg)
      : std::runtime_error(msg), kind(std::move(k)), offender(std::move(off)) {}
};

[[noreturn]] inline void eval_fail(std::string kind, Value offender,
                                   const std::string& msg) {
  throw EvalError(std::move(kind), std::move(offender), msg);
}

class EnvPool;

class Env {
 public:
  using History = std::vector<Value>;

  Env(EnvPool* pool, Env* parent, std::uint64_t id)
      : pool_(pool), parent_(parent), id_(id) {}

  Env* parent() const { return parent_; }
  std::uint64_t id() const { return id_; }
  EnvPool* pool() const { return pool_; }

  // Binds in this frame; appends to the history when the name is already
  // bound here (redefinition is data, not an error).
  void define(const std::string& name, Value v) {
    frame_[name].push_back(std::move(v));
  }

  // Mutates the innermost existing binding.
  void set(const std::string& name, Value v) {
    for (Env* e = this; e != nullptr; e = e->parent_) {
      auto it = e->frame_.find(name);
      if (it != e->frame_.end()) {
        it->second.push_back(std::move(v));
        return;
      }
    }
    eval_fail("unbound-variable", Value::sym(name), "set! of unbound variable " + name);
  }

  const Value& lookup(const std::string& name) const {
    for (const Env* e = this; e != nullptr; e = e->parent_) {
      auto it = e->frame_.find(name);
      if (it != e->frame_.end()) return it->second.back();
    }
    eval_fail("unbound-variable", Value::sym(name), "unbound variable " + name);
  }

  // Full value history of the innermost binding of `name`.
  const History& history(const std::string& name) const {
    for (const Env* e = this; e != nullptr; e = e->parent_) {
      auto it = e->frame_.find(name);
      if (it != e->frame_.end()) return it->second;
    }
    eval_fail("unbound-variable", Value::sym(name), "no binding for " + name);
  }

  bool bound(const std::string& name) const {
    for (const Env* e = this; e != nullptr; e = e->parent_) {
      if (e->frame_.count(name)) return true;
    }
    return false;
  }

  bool bound_here(const std::string& name) const { return frame_.count(name) > 0; }

  const std::map<std::string, History>& frame() const { return frame_; }

 private:
  friend class EnvPool;
  EnvPool* pool_;
  Env* parent_;
  std::uint64_t id_;
  std::map<std::string, History> frame_;
};

class EnvPool {
 public:
  EnvPool() = default;
  EnvPool(const EnvPool&) = delete;
  EnvPool& operator=(const EnvPool&) = delete;

  Env* make(Env* parent = nullptr) {
    nodes_.push_back(std::make_unique<Env>(this, parent, next_id_++));
    return nodes_.back().get();
  }

  // Deep copy of everything reachable from `root`: the parent chain, every
  // value history, and (through compound procedures stored in those
  // histories) any captured frame graph. Frames at or above `stop_at` are
  // shared instead of copied. Mutating the clone is never observable in the
  // original.
  Env* clone(const Env* root, const Env* stop_at = nullptr) {
    CloneState st{stop_at, {}, {}};
    return clone_env(root, st);
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct CloneState {
    const Env* stop_at;
    std::map<const Env*, Env*> envs;
    std::map<const Procedure*, ProcRef> procs;
  };

  Env* clone_env(const Env* src, CloneState& st) {
    if (src == nullptr) return nullptr;
    if (st.stop_at != nullptr && is_at_or_above(src, st.stop_at))
      return const_cast<Env*>(src);
    auto hit = st.envs.find(src);
    if (hit != st.envs.end()) return hit->second;

    Env* dst = make(nullptr);
    st.envs.emplace(src, dst);
    dst->parent_ = clone_env(src->parent_, st);
    for (const auto& [name, history] : src->frame_) {
      Env::History copy;
      copy.reserve(history.size());
      for (const Value& v : history) copy.push_back(clone_value(v, st));
      dst->frame_.emplace(name, std::move(copy));
    }
    return dst;
  }

  static bool is_at_or_above(const Env* e, const Env* stop_at) {
    for (const Env* s = stop_at; s != nullptr; s = s->parent_) {
      if (s == e) return true;
    }
    return false;
  }

  Value clone_value(const Value& v, CloneState& st) {
    if (v.is_list()) {
      List out;
      out.reserve(v.items().size());
      for (const Value& item : v.items()) out.push_back(clone_value(item, st));
      return Value::list(std::move(out));
    }
    if (v.is_proc()) {
      const ProcRef& p = v.proc_ref();
      if (!p || p->is_primitive()) return v;
      auto hit = st.procs.find(p.get());
      if (hit != st.procs.end()) return Value::proc(hit->second);
      auto dup = std::make_shared<Procedure>();
      st.procs.emplace(p.get(), dup);
      dup->name = p->name;
      dup->params = p->params;
      dup->closure = clone_env(p->closure, st);
      dup->body.reserve(p->body.size());
      for (const Value& form : p->body) dup->body.push_back(clone_value(form, st));
      return Value::proc(std::move(dup));
    }
    return v;
  }

  std::vector<std::unique_ptr<Env>> nodes_;
  std::uint64_t next_id_ = 1;
};

// Stable text snapshot of a frame chain, used by isolation tests: bindings in
// name order, full histories, procedures expanded structurally (not by
// pointer) so two snapshots compare equal iff the observable state is equal.
inline void snapshot_value(const Value& v, std::string& out) {
  if (v.is_proc() && !v.proc_ref()->is_primitive()) {
    const Procedure& p = *v.proc_ref();
    out += "#<lambda " + p.name + " (";
    for (std::size_t i = 0; i < p.params.size(); ++i) {
      if (i) out += ' ';
      out += p.params[i];
    }
    out += ")";
    for (const Value& form : p.body) {
      out += ' ';
      out += print(form);
    }
    out += ">";
    return;
  }
  out += print(v);
}

inline std::string snapshot(const Env* env) {
  std::string out;
  for (const Env* e = env; e != nullptr; e = e->parent()) {
    out += "frame{";
    for (const auto& [name, history] : e->frame()) {
      out += name + ":(";
      for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) out += ' ';
        snapshot_value(history[i], out);
      }
      out += ") ";
    }
    out += "}\n";
  }
  return out;
}

}  // namespace parley
