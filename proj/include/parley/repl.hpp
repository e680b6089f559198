// Human-as-agent session helpers: the input grammar of the interactive REPL
// and the sink that collects replies addressed to the human. The human types
// either bare object-language expressions (wrapped with the session
// performative), a bare try-again (always an order), or a full (kqmlmsg ...)
// form which passes through untouched.
#pragma once

#include <cctype>
#include <optional>
#include <string>

#include "parley/acl.hpp"
#include "parley/bus.hpp"

namespace parley {

struct HumanSession : MessageSink {
  std::vector<Message> replies;
  void accept(const Message& msg) override { replies.push_back(msg); }
  std::vector<Message> take() {
    std::vector<Message> out;
    out.swap(replies);
    return out;
  }
};

// Empty input gives nullopt; anything unreadable throws ParseError (the
// session reprompts without sending).
inline std::optional<Message> parse_turn(const std::string& line, const std::string& self,
                                         const std::string& target,
                                         const std::string& wrap) {
  std::string trimmed = line;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.erase(trimmed.begin());
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.pop_back();
  if (trimmed.empty()) return std::nullopt;

  Value expr = read(trimmed);
  if (expr.is_list() && expr.items().size() == 5 && expr.items()[0].is_sym("kqmlmsg"))
    return message_from_sexpr(expr);
  if (expr == Value::sym("try-again") || expr == vlist({Value::sym("try-again")}))
    return Message{"order", self, target, vlist({Value::sym("try-again")})};
  return Message{wrap, self, target, expr};
}

}  // namespace parley
