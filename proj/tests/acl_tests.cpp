#include <catch2/catch.hpp>

#include <random>

#include "parley/acl.hpp"

using namespace parley;

namespace {

// A standalone conversation over a fresh environment, the way an agent sets
// one up, but without the agent around it.
struct ConvFixture {
  EnvPool pool;
  Conversation conv;
  std::vector<std::string> partner_pool;

  ConvFixture() {
    conv.self_name = "student";
    conv.partner = "teacher";
    conv.env = pool.make();
    install_primitives(conv.env);
    load_prelude(conv.env);
    make_default_dispatch(conv.env);
    conv.partners_fn = [this]() { return partner_pool; };
  }

  std::vector<Message> say(const std::string& performative, const std::string& content) {
    return dispatch(conv, Message{performative, "teacher", "student", read(content)});
  }
};

Message sample_message(std::mt19937& rng) {
  static const char* perfs[] = {"assertion", "order", "request", "ack", "broadcast"};
  static const char* names[] = {"teacher", "student", "a1", "sncf", "client"};
  static const char* contents[] = {"(define x 2)", "x", "()", "(a (b 1) 2.5 #t \"s\")",
                                   "(try-again)"};
  return Message{perfs[rng() % 5], names[rng() % 5], names[rng() % 5],
                 read(contents[rng() % 5])};
}

}  // namespace

TEST_CASE("encode produces the exact wire shape") {
  Message m{"assertion", "teacher", "student", read("(define (square x) (* x x))")};
  REQUIRE(encode(m) == "(kqmlmsg assertion teacher student (define (square x) (* x x)))");
  REQUIRE(decode(encode(m)) == m);
}

TEST_CASE("decode rejects malformed wire content") {
  REQUIRE_THROWS_AS(decode("(kqmlmsg)"), MessageError);
  REQUIRE_THROWS_AS(decode("(notmsg assertion a b c)"), MessageError);
  REQUIRE_THROWS_AS(decode("(kqmlmsg assertion a b)"), MessageError);
  REQUIRE_THROWS_AS(decode("(kqmlmsg assertion a b c d)"), MessageError);
  REQUIRE_THROWS_AS(decode("(kqmlmsg 5 a b c)"), MessageError);
  REQUIRE_THROWS_AS(decode("(kqmlmsg assertion (a) b c)"), MessageError);
  REQUIRE_THROWS_AS(decode("(kqmlmsg assertion a b"), MessageError);
  REQUIRE_THROWS_AS(decode(""), MessageError);
}

TEST_CASE("codec round-trips random messages") {
  std::mt19937 rng(8);
  for (int i = 0; i < 200; ++i) {
    Message m = sample_message(rng);
    REQUIRE(decode(encode(m)) == m);
    std::string line = encode(m);
    REQUIRE(encode(decode(line)) == line);
  }
}

TEST_CASE("to_wire normalises evaluator-only values") {
  EnvPool pool;
  Env* env = pool.make();
  install_primitives(env);
  Value square = evaluate(read("(begin (define (square x) (* x x)) square)"), env);
  REQUIRE(print(to_wire(square)) == "(procedure square)");
  REQUIRE(to_wire(Value::none()) == Value::sym("ok"));
  Value nested = vlist({Value::num(1), Value::none()});
  REQUIRE(print(to_wire(nested)) == "(1 ok)");
}

TEST_CASE("default dispatch implements the performative table") {
  ConvFixture fx;

  SECTION("assertion of a define acks the defined name") {
    auto replies = fx.say("assertion", "(define x 2)");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].performative == "ack");
    REQUIRE(replies[0].receiver == "teacher");
    REQUIRE(replies[0].content == Value::sym("x"));
    REQUIRE(fx.conv.env->lookup("x") == Value::num(2));
  }

  SECTION("assertion of a non-define acks ok") {
    auto replies = fx.say("assertion", "(+ 1 2)");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].content == Value::sym("ok"));
  }

  SECTION("assertion evaluation errors become error acks") {
    auto replies = fx.say("assertion", "(define x missing)");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].performative == "ack");
    REQUIRE(print(replies[0].content) == "(error unbound-variable missing)");
  }

  SECTION("order executes and reports the value") {
    fx.say("assertion", "(define (square x) (* x x))");
    auto replies = fx.say("order", "(square 3)");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].performative == "executed");
    REQUIRE(replies[0].content == Value::num(9));
  }

  SECTION("order of an unknown procedure carries the error") {
    auto replies = fx.say("order", "(square 3)");
    REQUIRE(replies[0].performative == "executed");
    REQUIRE(print(replies[0].content) == "(error unbound-variable square)");
  }

  SECTION("request answers like the prompt echo") {
    fx.say("assertion", "(define x 2)");
    auto replies = fx.say("request", "x");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].performative == "answer");
    REQUIRE(replies[0].content == Value::num(2));
  }

  SECTION("acks, executeds and answers are consumed") {
    REQUIRE(fx.say("ack", "x").empty());
    REQUIRE(fx.say("executed", "9").empty());
    REQUIRE(fx.say("answer", "9").empty());
  }

  SECTION("unknown performatives are announced") {
    auto replies = fx.say("broadcast", "(order (square 3))");
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].performative == "answer");
    REQUIRE(print(replies[0].content) == "(no-such-performative broadcast)");
  }
}

TEST_CASE("content exhausting its alternatives answers no-more-values") {
  ConvFixture fx;
  auto replies = fx.say("order", "(amb)");
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0].content == Value::sym("no-more-values"));
}

TEST_CASE("try-again resumes the conversation's last drive") {
  ConvFixture fx;
  auto first = fx.say("order", "(an-element-of '(a b c))");
  REQUIRE(first[0].content == Value::sym("a"));
  REQUIRE(fx.say("order", "(try-again)")[0].content == Value::sym("b"));
  REQUIRE(fx.say("order", "(try-again)")[0].content == Value::sym("c"));
  REQUIRE(fx.say("order", "(try-again)")[0].content == Value::sym("no-more-values"));
  // Exhausted searches stay exhausted.
  REQUIRE(fx.say("order", "(try-again)")[0].content == Value::sym("no-more-values"));
}

TEST_CASE("try-again with no prior drive reports nothing-to-resume") {
  ConvFixture fx;
  auto replies = fx.say("order", "(try-again)");
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0].performative == "executed");
  REQUIRE(print(replies[0].content) == "(error nothing-to-resume)");
}

TEST_CASE("dispatch never throws, even when the interpreter binding is broken") {
  ConvFixture fx;
  fx.say("order", "(set! ambevaluate-kqmlmsg 42)");
  auto replies = fx.say("request", "x");
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0].performative == "answer");
  REQUIRE(replies[0].content.items().at(0) == Value::sym("error"));
}

TEST_CASE("dispatch flags handlers that return junk directives") {
  ConvFixture fx;
  fx.say("order", "(set! ambevaluate-kqmlmsg (lambda (p c) (list (list 'bogus))))");
  auto replies = fx.say("request", "1");
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0].content.items().at(1) == Value::sym("bad-directive"));
}

TEST_CASE("make-default-dispatch installs a single-history binding") {
  ConvFixture fx;
  REQUIRE(fx.conv.env->history("ambevaluate-kqmlmsg").size() == 1);
}

TEST_CASE("teaching broadcast through messages rewrites the interpreter") {
  ConvFixture fx;
  fx.partner_pool = {"a1", "a2"};

  auto before = fx.say("broadcast", "(order (square 3))");
  REQUIRE(print(before[0].content) == "(no-such-performative broadcast)");

  auto ack = fx.say("assertion", std::string(learn_broadcast_source));
  REQUIRE(ack[0].performative == "ack");
  REQUIRE(ack[0].content == Value::sym("learn-broadcast-code"));

  auto executed = fx.say("order", "(set! ambevaluate-kqmlmsg learn-broadcast-code)");
  REQUIRE(executed[0].performative == "executed");
  REQUIRE(fx.conv.env->history("ambevaluate-kqmlmsg").size() == 2);

  auto fanout = fx.say("broadcast", "(order (square 3))");
  REQUIRE(fanout.size() == 2);
  REQUIRE(fanout[0].performative == "order");
  REQUIRE(fanout[0].receiver == "a1");
  REQUIRE(fanout[0].sender == "student");
  REQUIRE(print(fanout[0].content) == "(square 3)");
  REQUIRE(fanout[1].receiver == "a2");
  // No reply to the broadcaster.
  for (const Message& m : fanout) REQUIRE(m.receiver != "teacher");

  // Other performatives still flow through the wrapped interpreter.
  auto ack2 = fx.say("assertion", "(define y 5)");
  REQUIRE(ack2[0].content == Value::sym("y"));
}

TEST_CASE("runaway searches in content hit the backtrack budget, not the agent") {
  ConvFixture fx;
  fx.conv.config.backtrack_cap = 50;
  fx.say("assertion", "(define (loop) (amb 1 (loop)))");
  auto replies = fx.say("order", "(begin (require (= (loop) 0)) 1)");
  REQUIRE(replies.size() == 1);
  REQUIRE(replies[0].performative == "executed");
  REQUIRE(replies[0].content.items().at(0) == Value::sym("error"));
  REQUIRE(replies[0].content.items().at(1) == Value::sym("backtrack-limit"));

  // The conversation is still alive afterwards.
  REQUIRE(fx.say("request", "(+ 1 1)")[0].content == Value::num(2));
}
