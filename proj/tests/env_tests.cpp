#include <catch2/catch.hpp>

#include <random>

#include "parley/env.hpp"
#include "parley/eval.hpp"

using namespace parley;

TEST_CASE("define binds and redefinition appends history") {
  EnvPool pool;
  Env* env = pool.make();
  env->define("x", Value::num(1));
  REQUIRE(env->lookup("x") == Value::num(1));

  env->define("x", Value::num(5));
  REQUIRE(env->lookup("x") == Value::num(5));
  REQUIRE(env->history("x") == Env::History{Value::num(1), Value::num(5)});
}

TEST_CASE("set! walks the chain and appends") {
  EnvPool pool;
  Env* outer = pool.make();
  Env* inner = pool.make(outer);
  outer->define("x", Value::num(1));
  inner->set("x", Value::num(2));
  inner->set("x", Value::num(3));
  REQUIRE(inner->lookup("x") == Value::num(3));
  REQUIRE(outer->history("x") ==
          Env::History{Value::num(1), Value::num(2), Value::num(3)});

  REQUIRE_THROWS_AS(inner->set("y", Value::num(0)), EvalError);
  try {
    inner->set("y", Value::num(0));
  } catch (const EvalError& e) {
    REQUIRE(e.kind == "unbound-variable");
    REQUIRE(e.offender == Value::sym("y"));
  }
}

TEST_CASE("lookup resolves in the innermost frame") {
  EnvPool pool;
  Env* outer = pool.make();
  Env* inner = pool.make(outer);
  outer->define("x", Value::num(1));
  outer->define("x", Value::num(2));
  inner->define("x", Value::num(9));
  REQUIRE(inner->lookup("x") == Value::num(9));
  REQUIRE(inner->history("x") == Env::History{Value::num(9)});
  REQUIRE(outer->lookup("x") == Value::num(2));
  REQUIRE_THROWS_AS(inner->lookup("nope"), EvalError);
}

TEST_CASE("clone isolates mutation in both directions") {
  EnvPool pool;
  Env* env = pool.make();
  env->define("x", Value::num(1));
  std::string before = snapshot(env);

  Env* copy = pool.clone(env);
  copy->set("x", Value::num(2));
  copy->define("y", Value::sym("fresh"));
  REQUIRE(snapshot(env) == before);
  REQUIRE(env->history("x") == Env::History{Value::num(1)});
  REQUIRE_FALSE(env->bound("y"));

  env->set("x", Value::num(7));
  REQUIRE(copy->lookup("x") == Value::num(2));
}

TEST_CASE("clone of an empty env is empty") {
  EnvPool pool;
  Env* env = pool.make();
  Env* copy = pool.clone(env);
  REQUIRE(copy->frame().empty());
  REQUIRE(copy->parent() == nullptr);
  REQUIRE(copy->id() != env->id());
}

TEST_CASE("clone remaps closures into the cloned chain") {
  EnvPool pool;
  Env* env = pool.make();
  install_primitives(env);
  evaluate(read("(define (square x) (* x x))"), env);
  std::string before = snapshot(env);

  Env* copy = pool.clone(env);
  evaluate(read("(define (square x) (+ x 100))"), copy);
  REQUIRE(evaluate(read("(square 3)"), copy) == Value::num(103));
  REQUIRE(evaluate(read("(square 3)"), env) == Value::num(9));
  REQUIRE(snapshot(env) == before);

  // The cloned procedure's closure must live in the clone: defining through
  // it must not touch the original chain.
  evaluate(read("(define (poke) (set! marker 1))"), copy);
  copy->define("marker", Value::num(0));
  evaluate(read("(poke)"), copy);
  REQUIRE_FALSE(env->bound("marker"));
}

TEST_CASE("clone copies escaped closure frames, not just the parent chain") {
  EnvPool pool;
  Env* env = pool.make();
  install_primitives(env);
  evaluate(read("(define counter (let ((n 0)) (lambda () (set! n (+ n 1)) n)))"), env);
  REQUIRE(evaluate(read("(counter)"), env) == Value::num(1));

  Env* copy = pool.clone(env);
  REQUIRE(evaluate(read("(counter)"), copy) == Value::num(2));
  REQUIRE(evaluate(read("(counter)"), copy) == Value::num(3));
  // The original's captured state is unaffected by the clone's calls.
  REQUIRE(evaluate(read("(counter)"), env) == Value::num(2));
}

TEST_CASE("random mutation scripts never leak into the original") {
  std::mt19937 rng(4242);
  for (int round = 0; round < 30; ++round) {
    EnvPool pool;
    Env* root = pool.make();
    Env* mid = pool.make(root);
    static const char* names[] = {"a", "b", "c", "d"};
    for (const char* n : names)
      root->define(n, Value::num(std::uniform_int_distribution<int>(0, 9)(rng)));

    std::string before_root = snapshot(root);
    std::string before_mid = snapshot(mid);
    Env* copy = pool.clone(mid);

    for (int op = 0; op < 40; ++op) {
      const char* n = names[std::uniform_int_distribution<int>(0, 3)(rng)];
      Value v = Value::num(std::uniform_int_distribution<int>(100, 200)(rng));
      if (rng() & 1) copy->define(n, v);
      else copy->set(n, v);
    }
    REQUIRE(snapshot(root) == before_root);
    REQUIRE(snapshot(mid) == before_mid);
  }
}

TEST_CASE("lookup always equals the last history element") {
  std::mt19937 rng(777);
  EnvPool pool;
  Env* outer = pool.make();
  Env* inner = pool.make(outer);
  static const char* names[] = {"p", "q", "r"};
  outer->define("p", Value::num(0));
  outer->define("q", Value::num(0));
  outer->define("r", Value::num(0));

  std::vector<std::size_t> lengths;
  for (int op = 0; op < 300; ++op) {
    const char* n = names[std::uniform_int_distribution<int>(0, 2)(rng)];
    Env* target = (rng() & 1) ? inner : outer;
    Value v = Value::num(op);
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: target->define(n, v); break;
      case 1: target->set(n, v); break;
      default: break;  // plain reads interleaved
    }
    for (const char* name : names) {
      const auto& h = inner->history(name);
      REQUIRE_FALSE(h.empty());
      REQUIRE(inner->lookup(name) == h.back());
    }
    lengths.push_back(outer->history("p").size());
  }
  // History length never decreases.
  for (std::size_t i = 1; i < lengths.size(); ++i) REQUIRE(lengths[i] >= lengths[i - 1]);
}
