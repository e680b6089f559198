#include <catch2/catch.hpp>

#include <sstream>

#include "parley/amb.hpp"
#include "parley/eval.hpp"

using namespace parley;

namespace {

struct Fixture {
  EnvPool pool;
  Env* env;
  Fixture() : env(pool.make()) {
    install_primitives(env);
    load_prelude(env);
  }
  Value eval(const std::string& src) { return evaluate(read(src), env); }
};

std::string error_kind(Fixture& fx, const std::string& src) {
  try {
    fx.eval(src);
  } catch (const EvalError& e) {
    return e.kind;
  }
  return "no-error";
}

}  // namespace

TEST_CASE("literals, lambda and application") {
  Fixture fx;
  REQUIRE(fx.eval("((lambda (x) (* x x)) 3)") == Value::num(9));
  REQUIRE(fx.eval("(if (not #f) 1 2)") == Value::num(1));
  REQUIRE(fx.eval("'sym") == Value::sym("sym"));
  REQUIRE(fx.eval("\"text\"") == Value::str("text"));
  REQUIRE(fx.eval("2.5") == Value::real(2.5));
}

TEST_CASE("define returns the defined symbol and supports procedure sugar") {
  Fixture fx;
  REQUIRE(fx.eval("(define x 2)") == Value::sym("x"));
  REQUIRE(fx.eval("x") == Value::num(2));
  REQUIRE(fx.eval("(define (square x) (* x x))") == Value::sym("square"));
  REQUIRE(fx.eval("(square 3)") == Value::num(9));
  // Redefinition in dialogue is allowed and recorded.
  REQUIRE(fx.eval("(define x 5)") == Value::sym("x"));
  REQUIRE(fx.env->history("x").size() == 2);
}

TEST_CASE("set! requires an existing binding") {
  Fixture fx;
  fx.eval("(define x 1)");
  REQUIRE(fx.eval("(set! x 2)") == Value::sym("x"));
  REQUIRE(fx.eval("x") == Value::num(2));
  REQUIRE(error_kind(fx, "(set! y 0)") == "unbound-variable");
}

TEST_CASE("let evaluates inits in the outer scope") {
  Fixture fx;
  fx.eval("(define x 10)");
  REQUIRE(fx.eval("(let ((x 1) (y x)) (+ x y))") == Value::num(11));
  REQUIRE(fx.eval("(let () 5)") == Value::num(5));
}

TEST_CASE("begin sequences and yields the last value") {
  Fixture fx;
  REQUIRE(fx.eval("(begin (define a 1) (set! a (+ a 1)) a)") == Value::num(2));
}

TEST_CASE("closures capture their defining environment") {
  Fixture fx;
  fx.eval("(define (adder n) (lambda (m) (+ n m)))");
  fx.eval("(define add3 (adder 3))");
  REQUIRE(fx.eval("(add3 4)") == Value::num(7));
}

TEST_CASE("error taxonomy carries the offending expression") {
  Fixture fx;
  REQUIRE(error_kind(fx, "nope") == "unbound-variable");
  fx.eval("(define (one x) x)");
  REQUIRE(error_kind(fx, "(one 1 2)") == "wrong-arity");
  REQUIRE(error_kind(fx, "(3 4)") == "not-a-procedure");
  REQUIRE(error_kind(fx, "(if #t)") == "malformed-form");
  REQUIRE(error_kind(fx, "(lambda x 1)") == "malformed-form");
  REQUIRE(error_kind(fx, "()") == "malformed-form");
  REQUIRE(error_kind(fx, "(/ 1 0)") == "arithmetic");
}

TEST_CASE("primitive behaviours") {
  Fixture fx;
  REQUIRE(fx.eval("(+ 1 2 3)") == Value::num(6));
  REQUIRE(fx.eval("(- 5)") == Value::num(-5));
  REQUIRE(fx.eval("(* 2 2.5)") == Value::real(5.0));
  REQUIRE(fx.eval("(/ 6 3)") == Value::num(2));
  REQUIRE(fx.eval("(/ 7 2)") == Value::real(3.5));
  REQUIRE(fx.eval("(= 2 2.0)") == Value::boolean(true));
  REQUIRE(fx.eval("(< 1 2 3)") == Value::boolean(true));
  REQUIRE(fx.eval("(> 1 2)") == Value::boolean(false));
  REQUIRE(fx.eval("(abs -4)") == Value::num(4));
  REQUIRE(fx.eval("(eq? 'a 'a)") == Value::boolean(true));
  REQUIRE(fx.eval("(eq? '(a 1) '(a 1))") == Value::boolean(true));
  REQUIRE(fx.eval("(eq? '(a) '(b))") == Value::boolean(false));
  REQUIRE(fx.eval("(null? '())") == Value::boolean(true));
  REQUIRE(fx.eval("(pair? '())") == Value::boolean(false));
  REQUIRE(fx.eval("(pair? '(1))") == Value::boolean(true));
  REQUIRE(fx.eval("(symbol? 'a)") == Value::boolean(true));
  REQUIRE(fx.eval("(car '(1 2))") == Value::num(1));
  REQUIRE(fx.eval("(cdr '(1 2))") == read("(2)"));
  REQUIRE(fx.eval("(cons 1 '(2 3))") == read("(1 2 3)"));
  REQUIRE(fx.eval("(list 1 'a)") == read("(1 a)"));
  REQUIRE(fx.eval("(distinct? '(1 2 3))") == Value::boolean(true));
  REQUIRE(fx.eval("(distinct? '(1 2 1))") == Value::boolean(false));
}

TEST_CASE("display writes canonical text to the context sink") {
  Fixture fx;
  std::ostringstream sink;
  EvalContext ctx = make_context(fx.env);
  ctx.display = &sink;
  evaluate(read("(display (list 1 'a))"), fx.env, ctx);
  evaluate(read("(display \"raw\")"), fx.env, ctx);
  REQUIRE(sink.str() == "(1 a)raw");
}

TEST_CASE("named call counting instruments compound applications") {
  Fixture fx;
  CallCounts counts;
  EvalContext ctx = make_context(fx.env);
  ctx.counts = &counts;
  evaluate(read("(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2)))))"),
           fx.env, ctx);
  evaluate(read("(fib 10)"), fx.env, ctx);
  REQUIRE(counts["fib"] == 177);  // 2*fib(11)-1
}

TEST_CASE("taught forms expand through the registry in the deterministic path") {
  Fixture fx;
  fx.eval(
      "(register-form let*"
      "  (lambda (expr)"
      "    (if (null? (car (cdr expr)))"
      "        (cons 'let (cons '() (cdr (cdr expr))))"
      "        (cons 'let"
      "              (cons (list (car (car (cdr expr))))"
      "                    (list (cons 'let*"
      "                                (cons (cdr (car (cdr expr)))"
      "                                      (cdr (cdr expr))))))))))");
  REQUIRE(fx.eval("(let* ((a 1) (b (+ a 1))) b)") == Value::num(2));
  REQUIRE(error_kind(fx, "(register-form if (lambda (e) e))") == "protected-form");
}

TEST_CASE("unregistered derived forms are just unbound variables") {
  Fixture fx;
  REQUIRE(error_kind(fx, "(let* ((a 1)) a)") == "unbound-variable");
  REQUIRE(error_kind(fx, "(cond (#t 1))") == "unbound-variable");
}
