// Nondeterministic evaluator: success/failure continuations, left-to-right
// depth-first backtracking, and a resumable driver.
//
// Execution is trampolined: every continuation invocation is deferred into a
// Step so the C++ stack stays flat no matter how many branches a search
// explores or how deep interpreted recursion goes. Failure continuations are
// plain heap closures, which is what makes a search resumable later from a
// stored handle (the message-level try-again).
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "parley/env.hpp"
#include "parley/eval.hpp"
#include "parley/runtime.hpp"
#include "parley/sexpr.hpp"

namespace parley {

namespace amb_detail {

struct Step;

// Continuations are shared immutable callables: copying one is refcount
// traffic, not a deep copy of the captured chain.
class FailK {
 public:
  using Fn = std::function<Step()>;
  FailK() = default;
  explicit FailK(Fn f) : fn_(std::make_shared<const Fn>(std::move(f))) {}
  Step operator()() const;
  explicit operator bool() const { return fn_ != nullptr; }

 private:
  std::shared_ptr<const Fn> fn_;
};

class SuccK {
 public:
  using Fn = std::function<Step(Value, FailK)>;
  SuccK() = default;
  explicit SuccK(Fn f) : fn_(std::make_shared<const Fn>(std::move(f))) {}
  Step operator()(Value v, FailK kf) const;

 private:
  std::shared_ptr<const Fn> fn_;
};

struct Step {
  std::function<Step()> next;  // set: one more trampoline bounce
  bool finished = false;
  bool exhausted = false;
  Value value;   // when finished && !exhausted
  FailK resume;  // ditto: failure continuation right after this value

  static Step bounce(std::function<Step()> f) {
    Step s;
    s.next = std::move(f);
    return s;
  }
  static Step solved(Value v, FailK kf) {
    Step s;
    s.finished = true;
    s.value = std::move(v);
    s.resume = std::move(kf);
    return s;
  }
  static Step no_more() {
    Step s;
    s.finished = true;
    s.exhausted = true;
    return s;
  }
};

inline Step FailK::operator()() const { return (*fn_)(); }
inline Step SuccK::operator()(Value v, FailK kf) const {
  return (*fn_)(std::move(v), std::move(kf));
}

struct DriveCore {
  EvalContext ctx;
  std::uint64_t backtracks = 0;
  void note_backtrack() {
    if (++backtracks > ctx.config.backtrack_cap)
      eval_fail("backtrack-limit", Value::sym("amb"),
                "backtrack cap of " + std::to_string(ctx.config.backtrack_cap) +
                    " exceeded");
  }
};
using CorePtr = std::shared_ptr<DriveCore>;

Step ambevaluate(const CorePtr& core, Value expr, Env* env, SuccK ks, FailK kf);

inline std::function<Step()> deferred(CorePtr core, Value expr, Env* env, SuccK ks,
                                      FailK kf) {
  return [core = std::move(core), expr = std::move(expr), env, ks = std::move(ks),
          kf = std::move(kf)]() { return ambevaluate(core, expr, env, ks, kf); };
}

inline Step succeed(SuccK ks, Value v, FailK kf) {
  return Step::bounce([ks = std::move(ks), v = std::move(v), kf = std::move(kf)]() {
    return ks(v, kf);
  });
}

inline Step fail(FailK kf) {
  return Step::bounce([kf = std::move(kf)]() { return kf(); });
}

Step apply_step(const CorePtr& core, Value callee, List args, SuccK ks, FailK kf);

inline Step sequence_step(const CorePtr& core, std::shared_ptr<const List> body,
                          std::size_t index, Env* env, SuccK ks, FailK kf) {
  if (body->empty()) return succeed(std::move(ks), Value::none(), std::move(kf));
  if (index + 1 == body->size())
    return Step::bounce(deferred(core, (*body)[index], env, std::move(ks), std::move(kf)));
  SuccK rest([core, body, index, env, ks](Value, FailK kf2) {
    return sequence_step(core, body, index + 1, env, ks, std::move(kf2));
  });
  return Step::bounce(deferred(core, (*body)[index], env, std::move(rest), std::move(kf)));
}

inline Step apply_step(const CorePtr& core, Value callee, List args, SuccK ks, FailK kf) {
  if (!callee.is_proc())
    eval_fail("not-a-procedure", callee, "cannot apply " + print(callee));
  ProcRef proc = callee.proc_ref();
  if (proc->is_primitive())
    return succeed(std::move(ks), proc->native(core->ctx, args), std::move(kf));
  if (args.size() != proc->params.size())
    eval_fail("wrong-arity", callee,
              proc->name.empty() ? "arity mismatch in application"
                                 : "arity mismatch calling " + proc->name);
  Env* frame = core->ctx.pool->make(proc->closure);
  for (std::size_t i = 0; i < args.size(); ++i)
    frame->define(proc->params[i], std::move(args[i]));
  bump_call_count(core->ctx, *proc);
  std::shared_ptr<const List> body(proc, &proc->body);
  return sequence_step(core, std::move(body), 0, frame, std::move(ks), std::move(kf));
}

// Evaluates combination elements left to right; `done` gets callee+args.
inline Step call_step(const CorePtr& core, std::shared_ptr<const Value> combo,
                      std::size_t index, List evaluated, Env* env, SuccK ks, FailK kf) {
  const List& parts = combo->items();
  if (index == parts.size()) {
    Value callee = std::move(evaluated.front());
    evaluated.erase(evaluated.begin());
    return apply_step(core, std::move(callee), std::move(evaluated), std::move(ks),
                      std::move(kf));
  }
  SuccK collect([core, combo, index, evaluated, env, ks](Value v, FailK kf2) {
    List next = evaluated;
    next.push_back(std::move(v));
    return call_step(core, combo, index + 1, std::move(next), env, ks, std::move(kf2));
  });
  return Step::bounce(deferred(core, parts[index], env, std::move(collect), std::move(kf)));
}

// (amb e1 ... en): alternatives strictly left to right; exhaustion defers to
// the parent failure continuation. (amb) backtracks immediately.
inline Step amb_step(const CorePtr& core, std::shared_ptr<const Value> combo,
                     std::size_t alt, Env* env, SuccK ks, FailK kf) {
  const List& parts = combo->items();
  if (1 + alt >= parts.size()) return fail(std::move(kf));
  FailK next_alt([core, combo, alt, env, ks, kf]() {
    core->note_backtrack();
    return amb_step(core, combo, alt + 1, env, ks, kf);
  });
  return Step::bounce(
      deferred(core, parts[1 + alt], env, std::move(ks), std::move(next_alt)));
}

inline Step let_step(const CorePtr& core, std::shared_ptr<const forms::Let> spec,
                     std::size_t index, List values, Env* env, SuccK ks, FailK kf) {
  if (index == spec->bindings.size()) {
    Env* frame = core->ctx.pool->make(env);
    for (std::size_t i = 0; i < values.size(); ++i)
      frame->define(spec->bindings[i].first, std::move(values[i]));
    std::shared_ptr<const List> body(spec, &spec->body);
    return sequence_step(core, std::move(body), 0, frame, std::move(ks), std::move(kf));
  }
  SuccK collect([core, spec, index, values, env, ks](Value v, FailK kf2) {
    List next = values;
    next.push_back(std::move(v));
    return let_step(core, spec, index + 1, std::move(next), env, ks, std::move(kf2));
  });
  return Step::bounce(
      deferred(core, spec->bindings[index].second, env, std::move(collect), std::move(kf)));
}

inline Step ambevaluate(const CorePtr& core, Value expr, Env* env, SuccK ks, FailK kf) {
  if (expr.is_sym())
    return succeed(std::move(ks), env->lookup(expr.sym_name()), std::move(kf));
  if (!expr.is_list()) return succeed(std::move(ks), std::move(expr), std::move(kf));
  if (expr.items().empty())
    eval_fail("malformed-form", expr, "cannot evaluate the empty combination ()");

  auto combo = std::make_shared<const Value>(std::move(expr));
  const List& parts = combo->items();

  if (parts[0].is_sym()) {
    const std::string& head = parts[0].sym_name();
    if (head == "quote") {
      if (parts.size() != 2) forms::malformed(*combo, "quote");
      return succeed(std::move(ks), parts[1], std::move(kf));
    }
    if (head == "define") {
      auto d = std::make_shared<const forms::Define>(forms::parse_define(*combo));
      if (d->is_lambda_sugar) {
        env->define(d->name, detail::make_lambda(d->lambda, env, d->name));
        return succeed(std::move(ks), Value::sym(d->name), std::move(kf));
      }
      SuccK bind([d, env, ks](Value v, FailK kf2) {
        if (v.is_proc() && !v.proc_ref()->is_primitive() && v.proc_ref()->name.empty())
          v.proc_ref()->name = d->name;
        env->define(d->name, std::move(v));
        return succeed(ks, Value::sym(d->name), std::move(kf2));
      });
      return Step::bounce(deferred(core, d->value_expr, env, std::move(bind), std::move(kf)));
    }
    if (head == "set!") {
      auto [name, value_expr] = forms::parse_set(*combo);
      SuccK assign([name = name, env, ks](Value v, FailK kf2) {
        env->set(name, std::move(v));
        return succeed(ks, Value::sym(name), std::move(kf2));
      });
      return Step::bounce(deferred(core, value_expr, env, std::move(assign), std::move(kf)));
    }
    if (head == "lambda")
      return succeed(std::move(ks), detail::make_lambda(forms::parse_lambda(*combo), env),
                     std::move(kf));
    if (head == "if") {
      auto f = std::make_shared<const forms::If>(forms::parse_if(*combo));
      SuccK branch([core, f, env, ks](Value v, FailK kf2) {
        if (v.is_truthy())
          return Step::bounce(deferred(core, f->then_branch, env, ks, std::move(kf2)));
        if (f->else_branch)
          return Step::bounce(deferred(core, *f->else_branch, env, ks, std::move(kf2)));
        return succeed(ks, Value::none(), std::move(kf2));
      });
      return Step::bounce(deferred(core, f->cond, env, std::move(branch), std::move(kf)));
    }
    if (head == "begin") {
      auto body = std::make_shared<const List>(parts.begin() + 1, parts.end());
      return sequence_step(core, std::move(body), 0, env, std::move(ks), std::move(kf));
    }
    if (head == "let") {
      auto spec = std::make_shared<const forms::Let>(forms::parse_let(*combo));
      return let_step(core, std::move(spec), 0, {}, env, std::move(ks), std::move(kf));
    }
    if (head == "amb") return amb_step(core, std::move(combo), 0, env, std::move(ks), std::move(kf));
    if (head == "register-form") {
      auto [name, handler_expr] = forms::parse_register_form(*combo);
      SuccK install([name = name, env, ks](Value v, FailK kf2) {
        register_form(env, name, std::move(v));
        return succeed(ks, Value::sym(name), std::move(kf2));
      });
      return Step::bounce(deferred(core, handler_expr, env, std::move(install), std::move(kf)));
    }
    if (!is_core_form(head)) {
      if (auto handler = taught_form_handler(env, head)) {
        SuccK reeval([core, env, ks](Value rewritten, FailK kf2) {
          return Step::bounce(deferred(core, std::move(rewritten), env, ks, std::move(kf2)));
        });
        return apply_step(core, *handler, {*combo}, std::move(reeval), std::move(kf));
      }
    }
  }

  return call_step(core, std::move(combo), 0, {}, env, std::move(ks), std::move(kf));
}

}  // namespace amb_detail

// ---------------------------------------------------------------------------
// Driver. drive() produces the first value plus a handle resuming the search
// right after it; resume() produces the next one. Handles are single-use:
// resuming one marks it consumed, and only the handle returned last is live.
// An exhausted handle stays resumable and keeps answering no-more-values.

struct DriveResult;
class ResumeHandle;
DriveResult resume(const ResumeHandle& handle);
DriveResult detail_run(amb_detail::CorePtr core, std::function<amb_detail::Step()> start);

class ResumeHandle {
 public:
  ResumeHandle() = default;

  bool valid() const { return state_ != nullptr; }
  bool exhausted() const { return state_ != nullptr && state_->exhausted; }

 private:
  struct State {
    amb_detail::FailK resume;
    amb_detail::CorePtr core;
    bool exhausted = false;
    bool used = false;
  };
  std::shared_ptr<State> state_;

  static ResumeHandle make(amb_detail::FailK kf, amb_detail::CorePtr core) {
    ResumeHandle h;
    h.state_ = std::make_shared<State>();
    h.state_->resume = std::move(kf);
    h.state_->core = std::move(core);
    return h;
  }
  static ResumeHandle make_exhausted() {
    ResumeHandle h;
    h.state_ = std::make_shared<State>();
    h.state_->exhausted = true;
    return h;
  }

  friend struct DriveResult;
  friend DriveResult resume(const ResumeHandle&);
  friend DriveResult detail_run(amb_detail::CorePtr, std::function<amb_detail::Step()>);
};

struct DriveResult {
  enum class Kind { Solution, NoMore, Error };
  Kind kind = Kind::NoMore;
  Value value;         // Solution
  ResumeHandle handle; // Solution: resumes after value; NoMore: exhausted handle
  std::string error_kind;
  Value error_offender;
  std::string error_message;

  bool is_solution() const { return kind == Kind::Solution; }
  bool is_no_more() const { return kind == Kind::NoMore; }
  bool is_error() const { return kind == Kind::Error; }

  static DriveResult solution(Value v, ResumeHandle h) {
    DriveResult r;
    r.kind = Kind::Solution;
    r.value = std::move(v);
    r.handle = std::move(h);
    return r;
  }
  static DriveResult no_more() {
    DriveResult r;
    r.kind = Kind::NoMore;
    r.handle = ResumeHandle::make_exhausted();
    return r;
  }
  static DriveResult error(std::string kind, Value offender, std::string message) {
    DriveResult r;
    r.kind = Kind::Error;
    r.error_kind = std::move(kind);
    r.error_offender = std::move(offender);
    r.error_message = std::move(message);
    return r;
  }

  // (error <kind> <offender>), the shape error-carrying replies use.
  Value error_descriptor() const {
    return vlist({Value::sym("error"), Value::sym(error_kind), error_offender});
  }
};

inline DriveResult detail_run(amb_detail::CorePtr core,
                              std::function<amb_detail::Step()> start) {
  using amb_detail::Step;
  try {
    Step s = start();
    while (!s.finished) s = s.next();
    if (s.exhausted) return DriveResult::no_more();
    return DriveResult::solution(std::move(s.value),
                                 ResumeHandle::make(std::move(s.resume), std::move(core)));
  } catch (const EvalError& e) {
    return DriveResult::error(e.kind, e.offender, e.what());
  }
}

inline DriveResult drive(const Value& expr, Env* env, const EvalContext& ctx_in) {
  auto core = std::make_shared<amb_detail::DriveCore>();
  core->ctx = ctx_in;
  if (core->ctx.pool == nullptr) core->ctx.pool = env->pool();
  if (core->ctx.root_env == nullptr) core->ctx.root_env = env;
  amb_detail::SuccK top_ks([](Value v, amb_detail::FailK kf) {
    return amb_detail::Step::solved(std::move(v), std::move(kf));
  });
  amb_detail::FailK top_kf([]() { return amb_detail::Step::no_more(); });
  return detail_run(core, amb_detail::deferred(core, expr, env, std::move(top_ks),
                                               std::move(top_kf)));
}

inline DriveResult drive(const Value& expr, Env* env) {
  return drive(expr, env, make_context(env));
}

inline DriveResult resume(const ResumeHandle& handle) {
  if (!handle.valid())
    return DriveResult::error("stale-handle", Value::sym("try-again"),
                              "no search to resume");
  auto state = handle.state_;
  if (state->exhausted) {
    DriveResult r;
    r.kind = DriveResult::Kind::NoMore;
    r.handle = handle;  // exhausted handles are idempotent
    return r;
  }
  if (state->used)
    return DriveResult::error("stale-handle", Value::sym("try-again"),
                              "handle was already resumed");
  state->used = true;
  state->core->backtracks = 0;
  amb_detail::FailK kf = state->resume;
  state->resume = amb_detail::FailK();
  return detail_run(state->core, [kf = std::move(kf)]() { return kf(); });
}

// Depth-first enumeration convenience: collect up to `limit` solutions.
struct Enumeration {
  std::vector<Value> values;
  DriveResult last;  // NoMore when exhausted, Error if the search errored
};

inline Enumeration enumerate_solutions(const Value& expr, Env* env,
                                       const EvalContext& ctx,
                                       std::size_t limit = std::size_t(-1)) {
  Enumeration out;
  DriveResult r = drive(expr, env, ctx);
  while (r.is_solution() && out.values.size() < limit) {
    out.values.push_back(r.value);
    r = resume(r.handle);
  }
  out.last = std::move(r);
  return out;
}

inline Enumeration enumerate_solutions(const Value& expr, Env* env,
                                       std::size_t limit = std::size_t(-1)) {
  return enumerate_solutions(expr, env, make_context(env), limit);
}

// ---------------------------------------------------------------------------
// Object-language prelude: the constraint form and list-choice helper, kept
// as interpreted code so dialogue can inspect or replace them.

inline constexpr std::string_view amb_prelude_source =
    "(define (require p)\n"
    "  (if (not p) (amb)))\n"
    "\n"
    "(define (an-element-of items)\n"
    "  (require (not (null? items)))\n"
    "  (amb (car items)\n"
    "       (an-element-of (cdr items))))\n";

inline void load_prelude(Env* env) {
  for (const Value& form : read_all(amb_prelude_source)) evaluate(form, env);
}

}  // namespace parley
