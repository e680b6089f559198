// Message model, wire codec and performative dispatch.
//
// Dispatch logic is not C++: it is a set of interpreted bindings installed in
// each conversation environment (ambevaluate-kqmlmsg plus its handlers), so a
// partner can rewrite how its messages are interpreted by talking. The C++
// side only builds the call, runs it through the nondeterministic driver and
// converts the returned directives into outgoing messages.
#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "parley/amb.hpp"
#include "parley/env.hpp"
#include "parley/eval.hpp"
#include "parley/sexpr.hpp"

namespace parley {

struct MessageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wire form: (kqmlmsg <performative> <sender> <receiver> <content>)
struct Message {
  std::string performative;
  std::string sender;
  std::string receiver;
  Value content;

  bool operator==(const Message&) const = default;
};

inline Value message_to_sexpr(const Message& m) {
  return vlist({Value::sym("kqmlmsg"), Value::sym(m.performative), Value::sym(m.sender),
                Value::sym(m.receiver), m.content});
}

inline std::string encode(const Message& m) { return print(message_to_sexpr(m)); }

inline Message message_from_sexpr(const Value& v) {
  if (!v.is_list() || v.items().size() != 5)
    throw MessageError("malformed message: expected (kqmlmsg performative sender receiver content)");
  const List& parts = v.items();
  if (!parts[0].is_sym("kqmlmsg"))
    throw MessageError("malformed message: head symbol must be kqmlmsg");
  for (int i = 1; i <= 3; ++i) {
    if (!parts[i].is_sym())
      throw MessageError("malformed message: performative, sender and receiver must be symbols");
  }
  return Message{parts[1].sym_name(), parts[2].sym_name(), parts[3].sym_name(), parts[4]};
}

inline Message decode(std::string_view line) {
  Value v;
  try {
    v = read(line);
  } catch (const ParseError& e) {
    throw MessageError(std::string("malformed message: ") + e.what());
  }
  return message_from_sexpr(v);
}

// Evaluation results can hold procedures or the unspecified value; outgoing
// content must be readable on the far side.
inline Value to_wire(const Value& v) {
  if (v.is_proc()) {
    const ProcRef& p = v.proc_ref();
    return vlist({Value::sym("procedure"),
                  Value::sym(p && !p->name.empty() ? p->name : "anonymous")});
  }
  if (v.is_unspecified()) return Value::sym("ok");
  if (v.is_list()) {
    List out;
    out.reserve(v.items().size());
    for (const Value& item : v.items()) out.push_back(to_wire(item));
    return Value::list(std::move(out));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Conversation state: the cloned environment a partner's messages are
// interpreted in, plus the resume handle of the last content drive. It is the
// dialogue hook object captured by stored continuations, so it must stay at a
// stable address for the life of the conversation.

class Conversation : public DialogueHooks {
 public:
  std::string self_name;
  std::string partner;
  Env* env = nullptr;
  InterpConfig config{};
  CallCounts* counts = nullptr;
  std::ostream* display = nullptr;
  std::function<std::vector<std::string>()> partners_fn;

  EvalContext content_context() {
    EvalContext ctx;
    ctx.pool = env->pool();
    ctx.root_env = env;
    ctx.config = config;
    ctx.counts = counts;
    ctx.dialogue = this;
    ctx.display = display;
    return ctx;
  }

  const ResumeHandle& resume_handle() const { return resume_; }

  // Content evaluation through the nondeterministic driver, first solution
  // only. (try-again) is a driver-level command: it resumes the last drive of
  // this conversation instead of being evaluated.
  Value eval_content(const Value& expr) override {
    static const Value try_again = vlist({Value::sym("try-again")});
    if (expr == try_again) {
      if (!resume_.valid())
        return vlist({Value::sym("error"), Value::sym("nothing-to-resume")});
      DriveResult r = parley::resume(resume_);
      return describe(r);
    }
    DriveResult r = drive(expr, env, content_context());
    return describe(r);
  }

  std::vector<std::string> current_partners() override {
    return partners_fn ? partners_fn() : std::vector<std::string>{};
  }

 private:
  ResumeHandle resume_;

  Value describe(DriveResult& r) {
    switch (r.kind) {
      case DriveResult::Kind::Solution:
        resume_ = r.handle;
        return vlist({Value::sym("ok"), r.value});
      case DriveResult::Kind::NoMore:
        resume_ = r.handle;  // exhausted handles answer no-more-values forever
        return vlist({Value::sym("no-more-values")});
      default:
        resume_ = ResumeHandle{};  // an errored drive leaves nothing to resume
        return r.error_descriptor();
    }
  }
};

// ---------------------------------------------------------------------------
// Default dispatch, installed as interpreted definitions. assertion mutates
// the conversation and is acked; order executes and reports via executed;
// request answers; ack/executed/answer are consumed; anything else announces
// no-such-performative. Every handler is an ordinary binding a dialogue can
// replace.

inline constexpr std::string_view default_dispatch_source = R"DISPATCH(
(define (result-value r)
  (if (eq? (car r) 'ok)
      (car (cdr r))
      (if (eq? (car r) 'no-more-values)
          'no-more-values
          r)))

(define (define-form? content)
  (if (pair? content) (eq? (car content) 'define) #f))

(define (handle-assertion content)
  (let ((r (eval-content content)))
    (if (eq? (car r) 'ok)
        (if (define-form? content)
            (list (list 'reply 'ack (car (cdr r))))
            (list (list 'reply 'ack 'ok)))
        (list (list 'reply 'ack (result-value r))))))

(define (handle-order content)
  (list (list 'reply 'executed (result-value (eval-content content)))))

(define (handle-request content)
  (list (list 'reply 'answer (result-value (eval-content content)))))

(define (ambevaluate-kqmlmsg performative content)
  (if (eq? performative 'assertion) (handle-assertion content)
  (if (eq? performative 'order) (handle-order content)
  (if (eq? performative 'request) (handle-request content)
  (if (eq? performative 'ack) (list)
  (if (eq? performative 'executed) (list)
  (if (eq? performative 'answer) (list)
      (list (list 'reply 'answer (list 'no-such-performative performative))))))))))
)DISPATCH";

inline void make_default_dispatch(Env* env) {
  for (const Value& form : read_all(default_dispatch_source)) evaluate(form, env);
}

// The canonical teaching payload for the broadcast performative: wraps the
// current message interpreter, adds the broadcast case, delegates the rest.
// Asserting this definition and then ordering
//   (set! ambevaluate-kqmlmsg learn-broadcast-code)
// makes the receiving conversation understand broadcast.
inline constexpr std::string_view learn_broadcast_source = R"TEACH(
(define learn-broadcast-code
  (let ((old ambevaluate-kqmlmsg))
    (lambda (performative content)
      (define (send-all perf body partners)
        (if (null? partners)
            (list)
            (cons (list 'send perf (car partners) body)
                  (send-all perf body (cdr partners)))))
      (if (eq? performative 'broadcast)
          (send-all (car content) (car (cdr content)) (current-partners))
          (old performative content)))))
)TEACH";

// ---------------------------------------------------------------------------
// Dispatch: run the conversation's message interpreter on (performative,
// content) and convert its directive list into messages. Directives:
//   (reply <performative> <content>)            back to the sender
//   (send <performative> <receiver> <content>)  to some other agent
// Never throws; every failure becomes an error-carrying reply.

inline std::vector<Message> dispatch(Conversation& conv, const Message& msg) {
  std::vector<Message> out;
  auto error_reply = [&](const Value& description) {
    out.push_back(Message{"answer", conv.self_name, msg.sender, to_wire(description)});
  };

  Value call = vlist({Value::sym("ambevaluate-kqmlmsg"),
                      vlist({Value::sym("quote"), Value::sym(msg.performative)}),
                      vlist({Value::sym("quote"), msg.content})});
  DriveResult r = drive(call, conv.env, conv.content_context());
  if (r.is_error()) {
    error_reply(r.error_descriptor());
    return out;
  }
  if (r.is_no_more()) {
    error_reply(vlist({Value::sym("error"), Value::sym("dispatch-exhausted")}));
    return out;
  }

  if (!r.value.is_list()) {
    error_reply(vlist({Value::sym("error"), Value::sym("bad-directive"), r.value}));
    return out;
  }
  bool bad = false;
  for (const Value& d : r.value.items()) {
    if (d.is_list() && d.items().size() == 3 && d.items()[0].is_sym("reply") &&
        d.items()[1].is_sym()) {
      out.push_back(Message{d.items()[1].sym_name(), conv.self_name, msg.sender,
                            to_wire(d.items()[2])});
    } else if (d.is_list() && d.items().size() == 4 && d.items()[0].is_sym("send") &&
               d.items()[1].is_sym() && d.items()[2].is_sym()) {
      out.push_back(Message{d.items()[1].sym_name(), conv.self_name,
                            d.items()[2].sym_name(), to_wire(d.items()[3])});
    } else {
      bad = true;
    }
  }
  if (bad)
    error_reply(vlist({Value::sym("error"), Value::sym("bad-directive"), r.value}));
  return out;
}

}  // namespace parley
