// Deterministic evaluator over the object language. This is the baseline
// interpreter and the oracle the nondeterministic one is checked against on
// amb-free programs.
#pragma once

#include <memory>
#include <string>

#include "parley/env.hpp"
#include "parley/runtime.hpp"
#include "parley/sexpr.hpp"

namespace parley {

Value evaluate(const Value& expr, Env* env, EvalContext& ctx);

namespace detail {

inline Value make_lambda(const forms::Lambda& spec, Env* env, std::string name = "") {
  auto p = std::make_shared<Procedure>();
  p->name = std::move(name);
  p->params = spec.params;
  p->body = spec.body;
  p->closure = env;
  return Value::proc(std::move(p));
}

inline Value eval_sequence(const List& body, Env* env, EvalContext& ctx) {
  Value result = Value::none();
  for (const Value& form : body) result = evaluate(form, env, ctx);
  return result;
}

inline Value apply_procedure(const Value& callee, const List& args, EvalContext& ctx) {
  if (!callee.is_proc())
    eval_fail("not-a-procedure", callee, "cannot apply " + print(callee));
  const ProcRef& proc = callee.proc_ref();
  if (proc->is_primitive()) return proc->native(ctx, args);
  if (args.size() != proc->params.size())
    eval_fail("wrong-arity", callee,
              proc->name.empty() ? "arity mismatch in application"
                                 : "arity mismatch calling " + proc->name);
  Env* frame = ctx.pool->make(proc->closure);
  for (std::size_t i = 0; i < args.size(); ++i) frame->define(proc->params[i], args[i]);
  bump_call_count(ctx, *proc);
  return eval_sequence(proc->body, frame, ctx);
}

}  // namespace detail

inline Value evaluate(const Value& expr, Env* env, EvalContext& ctx) {
  if (expr.is_sym()) return env->lookup(expr.sym_name());
  if (!expr.is_list()) return expr;  // literals are self-evaluating
  const List& parts = expr.items();
  if (parts.empty())
    eval_fail("malformed-form", expr, "cannot evaluate the empty combination ()");

  if (parts[0].is_sym()) {
    const std::string& head = parts[0].sym_name();
    if (head == "quote") {
      if (parts.size() != 2) forms::malformed(expr, "quote");
      return parts[1];
    }
    if (head == "define") {
      forms::Define d = forms::parse_define(expr);
      Value v = d.is_lambda_sugar ? detail::make_lambda(d.lambda, env, d.name)
                                  : evaluate(d.value_expr, env, ctx);
      if (v.is_proc() && !v.proc_ref()->is_primitive() && v.proc_ref()->name.empty())
        v.proc_ref()->name = d.name;
      env->define(d.name, std::move(v));
      return Value::sym(d.name);
    }
    if (head == "set!") {
      auto [name, value_expr] = forms::parse_set(expr);
      env->set(name, evaluate(value_expr, env, ctx));
      return Value::sym(name);
    }
    if (head == "lambda") return detail::make_lambda(forms::parse_lambda(expr), env);
    if (head == "if") {
      forms::If f = forms::parse_if(expr);
      if (evaluate(f.cond, env, ctx).is_truthy()) return evaluate(f.then_branch, env, ctx);
      if (f.else_branch) return evaluate(*f.else_branch, env, ctx);
      return Value::none();
    }
    if (head == "begin") {
      return detail::eval_sequence(List(parts.begin() + 1, parts.end()), env, ctx);
    }
    if (head == "let") {
      forms::Let f = forms::parse_let(expr);
      Env* frame = ctx.pool->make(env);
      for (const auto& [name, init] : f.bindings)
        frame->define(name, evaluate(init, env, ctx));
      return detail::eval_sequence(f.body, frame, ctx);
    }
    if (head == "register-form") {
      auto [name, handler_expr] = forms::parse_register_form(expr);
      register_form(env, name, evaluate(handler_expr, env, ctx));
      return Value::sym(name);
    }
    if (!is_core_form(head)) {
      if (auto handler = taught_form_handler(env, head)) {
        Value rewritten = detail::apply_procedure(*handler, {expr}, ctx);
        return evaluate(rewritten, env, ctx);
      }
    }
  }

  Value callee = evaluate(parts[0], env, ctx);
  List args;
  args.reserve(parts.size() - 1);
  for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(evaluate(parts[i], env, ctx));
  return detail::apply_procedure(callee, args, ctx);
}

inline Value evaluate(const Value& expr, Env* env) {
  EvalContext ctx = make_context(env);
  return evaluate(expr, env, ctx);
}

}  // namespace parley
