// Shared machinery for both evaluators: evaluation context, the special-form
// registry, form parsing helpers and the primitive procedure set.
#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parley/env.hpp"
#include "parley/sexpr.hpp"

namespace parley {

struct InterpConfig {
  std::uint64_t backtrack_cap = 1'000'000;
};

// Applications of named compound procedures, keyed by name. Scenario
// harnesses read these to compare interpreted call counts.
using CallCounts = std::map<std::string, std::uint64_t>;

// Bridge from object-language dispatch code to the conversation that is
// running it: content evaluation through the nondeterministic driver (with
// resume-handle bookkeeping) and the broadcast target list.
struct DialogueHooks {
  virtual ~DialogueHooks() = default;
  // Returns a result descriptor: (ok <value>) | (error <desc>...) |
  // (no-more-values).
  virtual Value eval_content(const Value& expr) = 0;
  // Partners of the owning agent, excluding this conversation's partner.
  virtual std::vector<std::string> current_partners() = 0;
};

struct EvalContext {
  EnvPool* pool = nullptr;
  Env* root_env = nullptr;  // env a top-level drive started in
  InterpConfig config{};
  CallCounts* counts = nullptr;
  DialogueHooks* dialogue = nullptr;
  std::ostream* display = nullptr;
};

inline EvalContext make_context(Env* env) {
  EvalContext ctx;
  ctx.pool = env->pool();
  ctx.root_env = env;
  return ctx;
}

// ---------------------------------------------------------------------------
// Special-form registry. Core forms are hardwired into the evaluators;
// taught forms are expander procedures stored as ordinary bindings in the
// environment (so cloning a conversation clones its taught language, and
// dialogue can install them), under a reserved name prefix.

inline const std::set<std::string>& core_forms() {
  static const std::set<std::string> forms = {
      "quote", "define", "set!", "lambda", "if",
      "begin", "let",    "amb",  "register-form"};
  return forms;
}

inline bool is_core_form(const std::string& name) { return core_forms().count(name) > 0; }

inline std::string form_binding_name(const std::string& form) {
  return "special-form:" + form;
}

inline void register_form(Env* env, const std::string& name, Value handler) {
  if (is_core_form(name))
    eval_fail("protected-form", Value::sym(name),
              "cannot override core form " + name);
  if (!handler.is_proc())
    eval_fail("wrong-type", handler, "form handler must be a procedure");
  env->define(form_binding_name(name), std::move(handler));
}

inline std::optional<Value> taught_form_handler(const Env* env, const std::string& name) {
  std::string binding = form_binding_name(name);
  if (!env->bound(binding)) return std::nullopt;
  return env->lookup(binding);
}

// ---------------------------------------------------------------------------
// Form parsing. Shared between the deterministic and nondeterministic
// evaluators so both reject malformed forms identically.

namespace forms {

struct Lambda {
  std::vector<std::string> params;
  List body;
};

struct Define {
  std::string name;
  bool is_lambda_sugar = false;
  Value value_expr;  // plain form
  Lambda lambda;     // sugar form
};

struct Let {
  std::vector<std::pair<std::string, Value>> bindings;
  List body;
};

struct If {
  Value cond;
  Value then_branch;
  std::optional<Value> else_branch;
};

[[noreturn]] inline void malformed(const Value& expr, const std::string& what) {
  eval_fail("malformed-form", expr, "malformed " + what + ": " + print(expr));
}

inline std::vector<std::string> param_names(const Value& expr, const List& raw) {
  std::vector<std::string> out;
  for (const Value& p : raw) {
    if (!p.is_sym()) malformed(expr, "parameter list");
    out.push_back(p.sym_name());
  }
  return out;
}

inline Lambda parse_lambda(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() < 3 || !parts[1].is_list()) malformed(expr, "lambda");
  Lambda out;
  out.params = param_names(expr, parts[1].items());
  out.body.assign(parts.begin() + 2, parts.end());
  return out;
}

inline Define parse_define(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() < 3) malformed(expr, "define");
  Define out;
  if (parts[1].is_sym()) {
    if (parts.size() != 3) malformed(expr, "define");
    out.name = parts[1].sym_name();
    out.value_expr = parts[2];
    return out;
  }
  if (parts[1].is_list() && !parts[1].items().empty() && parts[1].items()[0].is_sym()) {
    const List& head = parts[1].items();
    out.name = head[0].sym_name();
    out.is_lambda_sugar = true;
    out.lambda.params = param_names(expr, List(head.begin() + 1, head.end()));
    out.lambda.body.assign(parts.begin() + 2, parts.end());
    return out;
  }
  malformed(expr, "define");
}

inline Let parse_let(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() < 3 || !parts[1].is_list()) malformed(expr, "let");
  Let out;
  for (const Value& binding : parts[1].items()) {
    if (!binding.is_list() || binding.items().size() != 2 || !binding.items()[0].is_sym())
      malformed(expr, "let binding");
    out.bindings.emplace_back(binding.items()[0].sym_name(), binding.items()[1]);
  }
  out.body.assign(parts.begin() + 2, parts.end());
  return out;
}

inline If parse_if(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() != 3 && parts.size() != 4) malformed(expr, "if");
  If out;
  out.cond = parts[1];
  out.then_branch = parts[2];
  if (parts.size() == 4) out.else_branch = parts[3];
  return out;
}

inline std::pair<std::string, Value> parse_set(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() != 3 || !parts[1].is_sym()) malformed(expr, "set!");
  return {parts[1].sym_name(), parts[2]};
}

inline std::pair<std::string, Value> parse_register_form(const Value& expr) {
  const List& parts = expr.items();
  if (parts.size() != 3 || !parts[1].is_sym()) malformed(expr, "register-form");
  return {parts[1].sym_name(), parts[2]};
}

}  // namespace forms

// ---------------------------------------------------------------------------
// Primitives.

namespace detail {

inline void want_arity(const std::string& name, const List& args, std::size_t n) {
  if (args.size() != n)
    eval_fail("wrong-arity", Value::sym(name),
              name + " expects " + std::to_string(n) + " argument(s), got " +
                  std::to_string(args.size()));
}

inline void want_number(const std::string& name, const Value& v) {
  if (!v.is_number())
    eval_fail("wrong-type", v, name + " expects numbers, got " + print(v));
}

inline Value numeric_fold(const std::string& name, const List& args,
                          std::int64_t unit, auto fold_int, auto fold_real) {
  if (args.empty()) return Value::num(unit);
  for (const Value& a : args) want_number(name, a);
  bool all_int = true;
  for (const Value& a : args) all_int = all_int && a.is_int();
  if (all_int) {
    std::int64_t acc = args[0].as_int();
    for (std::size_t i = 1; i < args.size(); ++i) acc = fold_int(acc, args[i].as_int());
    return Value::num(acc);
  }
  double acc = args[0].as_number();
  for (std::size_t i = 1; i < args.size(); ++i) acc = fold_real(acc, args[i].as_number());
  return Value::real(acc);
}

inline bool numeric_chain(const std::string& name, const List& args, auto cmp) {
  if (args.size() < 2)
    eval_fail("wrong-arity", Value::sym(name), name + " expects at least 2 arguments");
  for (const Value& a : args) want_number(name, a);
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i].is_int() && args[i + 1].is_int()) {
      if (!cmp(args[i].as_int(), args[i + 1].as_int())) return false;
    } else {
      if (!cmp(args[i].as_number(), args[i + 1].as_number())) return false;
    }
  }
  return true;
}

inline const List& want_list(const std::string& name, const Value& v) {
  if (!v.is_list()) eval_fail("wrong-type", v, name + " expects a list, got " + print(v));
  return v.items();
}

}  // namespace detail

inline void install_primitives(Env* env) {
  auto prim = [env](const std::string& name, Procedure::Native fn) {
    env->define(name, make_primitive(name, std::move(fn)));
  };

  prim("+", [](EvalContext&, const List& args) {
    return detail::numeric_fold("+", args, 0, [](auto a, auto b) { return a + b; },
                                [](double a, double b) { return a + b; });
  });
  prim("*", [](EvalContext&, const List& args) {
    return detail::numeric_fold("*", args, 1, [](auto a, auto b) { return a * b; },
                                [](double a, double b) { return a * b; });
  });
  prim("-", [](EvalContext&, const List& args) {
    if (args.empty())
      eval_fail("wrong-arity", Value::sym("-"), "- expects at least 1 argument");
    detail::want_number("-", args[0]);
    if (args.size() == 1) {
      return args[0].is_int() ? Value::num(-args[0].as_int())
                              : Value::real(-args[0].as_real());
    }
    return detail::numeric_fold("-", args, 0, [](auto a, auto b) { return a - b; },
                                [](double a, double b) { return a - b; });
  });
  prim("/", [](EvalContext&, const List& args) {
    if (args.size() < 2)
      eval_fail("wrong-arity", Value::sym("/"), "/ expects at least 2 arguments");
    for (const Value& a : args) detail::want_number("/", a);
    bool all_int = true;
    for (const Value& a : args) all_int = all_int && a.is_int();
    if (all_int) {
      std::int64_t acc = args[0].as_int();
      for (std::size_t i = 1; i < args.size(); ++i) {
        std::int64_t d = args[i].as_int();
        if (d == 0) eval_fail("arithmetic", args[i], "division by zero");
        if (acc % d != 0) {
          double facc = double(acc);
          for (std::size_t j = i; j < args.size(); ++j) {
            double fd = args[j].as_number();
            if (fd == 0.0) eval_fail("arithmetic", args[j], "division by zero");
            facc /= fd;
          }
          return Value::real(facc);
        }
        acc /= d;
      }
      return Value::num(acc);
    }
    double acc = args[0].as_number();
    for (std::size_t i = 1; i < args.size(); ++i) {
      double d = args[i].as_number();
      if (d == 0.0) eval_fail("arithmetic", args[i], "division by zero");
      acc /= d;
    }
    return Value::real(acc);
  });
  prim("=", [](EvalContext&, const List& args) {
    return Value::boolean(
        detail::numeric_chain("=", args, [](auto a, auto b) { return a == b; }));
  });
  prim("<", [](EvalContext&, const List& args) {
    return Value::boolean(
        detail::numeric_chain("<", args, [](auto a, auto b) { return a < b; }));
  });
  prim(">", [](EvalContext&, const List& args) {
    return Value::boolean(
        detail::numeric_chain(">", args, [](auto a, auto b) { return a > b; }));
  });
  prim("abs", [](EvalContext&, const List& args) {
    detail::want_arity("abs", args, 1);
    detail::want_number("abs", args[0]);
    return args[0].is_int() ? Value::num(std::abs(args[0].as_int()))
                            : Value::real(std::fabs(args[0].as_real()));
  });
  prim("not", [](EvalContext&, const List& args) {
    detail::want_arity("not", args, 1);
    return Value::boolean(!args[0].is_truthy());
  });
  prim("eq?", [](EvalContext&, const List& args) {
    detail::want_arity("eq?", args, 2);
    return Value::boolean(args[0] == args[1]);
  });
  prim("null?", [](EvalContext&, const List& args) {
    detail::want_arity("null?", args, 1);
    return Value::boolean(args[0].is_list() && args[0].items().empty());
  });
  prim("pair?", [](EvalContext&, const List& args) {
    detail::want_arity("pair?", args, 1);
    return Value::boolean(args[0].is_list() && !args[0].items().empty());
  });
  prim("symbol?", [](EvalContext&, const List& args) {
    detail::want_arity("symbol?", args, 1);
    return Value::boolean(args[0].is_sym());
  });
  prim("car", [](EvalContext&, const List& args) {
    detail::want_arity("car", args, 1);
    const List& l = detail::want_list("car", args[0]);
    if (l.empty()) eval_fail("wrong-type", args[0], "car of empty list");
    return l.front();
  });
  prim("cdr", [](EvalContext&, const List& args) {
    detail::want_arity("cdr", args, 1);
    const List& l = detail::want_list("cdr", args[0]);
    if (l.empty()) eval_fail("wrong-type", args[0], "cdr of empty list");
    return Value::list(List(l.begin() + 1, l.end()));
  });
  prim("cons", [](EvalContext&, const List& args) {
    detail::want_arity("cons", args, 2);
    const List& tail = detail::want_list("cons", args[1]);
    List out;
    out.reserve(tail.size() + 1);
    out.push_back(args[0]);
    out.insert(out.end(), tail.begin(), tail.end());
    return Value::list(std::move(out));
  });
  prim("list", [](EvalContext&, const List& args) { return Value::list(args); });
  prim("distinct?", [](EvalContext&, const List& args) {
    detail::want_arity("distinct?", args, 1);
    const List& l = detail::want_list("distinct?", args[0]);
    for (std::size_t i = 0; i < l.size(); ++i) {
      for (std::size_t j = i + 1; j < l.size(); ++j) {
        if (l[i] == l[j]) return Value::boolean(false);
      }
    }
    return Value::boolean(true);
  });
  prim("display", [](EvalContext& ctx, const List& args) {
    detail::want_arity("display", args, 1);
    std::ostream& out = ctx.display != nullptr ? *ctx.display : std::cout;
    if (args[0].is_str()) out << args[0].str_text();
    else out << print(args[0]);
    return Value::none();
  });
  prim("bound?", [](EvalContext& ctx, const List& args) {
    detail::want_arity("bound?", args, 1);
    if (!args[0].is_sym()) eval_fail("wrong-type", args[0], "bound? expects a symbol");
    return Value::boolean(ctx.root_env != nullptr && ctx.root_env->bound(args[0].sym_name()));
  });
  prim("eval-content", [](EvalContext& ctx, const List& args) {
    detail::want_arity("eval-content", args, 1);
    if (ctx.dialogue == nullptr)
      eval_fail("no-conversation", args[0],
                "eval-content is only available inside a conversation");
    return ctx.dialogue->eval_content(args[0]);
  });
  prim("current-partners", [](EvalContext& ctx, const List& args) {
    detail::want_arity("current-partners", args, 0);
    if (ctx.dialogue == nullptr)
      eval_fail("no-conversation", Value::sym("current-partners"),
                "current-partners is only available inside a conversation");
    List out;
    for (const std::string& p : ctx.dialogue->current_partners())
      out.push_back(Value::sym(p));
    return Value::list(std::move(out));
  });
}

inline void bump_call_count(EvalContext& ctx, const Procedure& proc) {
  if (ctx.counts != nullptr && !proc.name.empty()) ++(*ctx.counts)[proc.name];
}

}  // namespace parley
