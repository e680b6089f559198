// Executable reproductions of the worked dialogues: teaching broadcast to a
// student, the incremental ticket search, the multiple-dwelling puzzle and
// the latency-based worker selection sketch. Each produces a machine-checked
// transcript.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "parley/agent.hpp"
#include "parley/amb.hpp"
#include "parley/world.hpp"

namespace parley {

struct ScenarioReport {
  bool ok = true;
  std::string failure;     // first divergence, when !ok
  std::string transcript;  // newline-delimited encoded deliveries + summary
  std::vector<Message> deliveries;
  std::vector<Value> solutions;  // scenario-specific payloads, in order
};

namespace scenario_detail {

inline void finish(ScenarioReport& report, const std::string& name, const Bus& bus) {
  for (const DeliveryRecord& rec : bus.delivery_log()) report.deliveries.push_back(rec.msg);
  report.transcript = bus.transcript();
  report.transcript += "(summary " + name + " " +
                       std::to_string(report.deliveries.size()) + " " +
                       (report.ok ? "ok" : "fail") + ")\n";
}

inline void expect(ScenarioReport& report, bool cond, const std::string& what) {
  if (report.ok && !cond) {
    report.ok = false;
    report.failure = what;
  }
}

}  // namespace scenario_detail

// ---------------------------------------------------------------------------
// Teacher/student: teach the student the broadcast performative, then use it.

inline constexpr std::string_view square_definition = "(define (square x) (* x x))";

inline std::vector<Message> teacher_student_script() {
  return {
      Message{"assertion", "teacher", "student", read(square_definition)},
      Message{"broadcast", "teacher", "student", read("(order (square 3))")},
      Message{"assertion", "teacher", "student", read(learn_broadcast_source)},
      Message{"order", "teacher", "student",
              read("(set! ambevaluate-kqmlmsg learn-broadcast-code)")},
      Message{"broadcast", "teacher", "student", read("(order (square 3))")},
  };
}

// The full expected delivery sequence under round-robin stepping.
inline std::vector<Message> teacher_student_expected() {
  std::vector<Message> script = teacher_student_script();
  std::vector<Message> expected;
  expected.push_back(script[0]);
  expected.push_back(Message{"ack", "student", "teacher", Value::sym("square")});
  expected.push_back(script[1]);
  expected.push_back(Message{"answer", "student", "teacher",
                             read("(no-such-performative broadcast)")});
  expected.push_back(script[2]);
  expected.push_back(Message{"ack", "student", "teacher", Value::sym("learn-broadcast-code")});
  expected.push_back(script[3]);
  expected.push_back(Message{"executed", "student", "teacher",
                             Value::sym("ambevaluate-kqmlmsg")});
  expected.push_back(script[4]);
  expected.push_back(Message{"order", "student", "a1", read("(square 3)")});
  expected.push_back(Message{"order", "student", "a2", read("(square 3)")});
  expected.push_back(Message{"executed", "a1", "student", Value::num(9)});
  expected.push_back(Message{"executed", "a2", "student", Value::num(9)});
  return expected;
}

// Spawns teacher, student and the student's two standing partners into the
// world, replays the script, and checks the delivery log against the
// expected exchange. The world must be fresh.
inline ScenarioReport run_teacher_student(World& world,
                                          Scheduler mode = Scheduler::RoundRobin) {
  ScenarioReport report;
  Value square = read(square_definition);
  Agent& teacher = world.spawn("teacher", {square});
  Agent& student = world.spawn("student");
  world.spawn("a1", {square});
  world.spawn("a2", {square});
  student.conversation("a1");
  student.conversation("a2");

  for (const Message& turn : teacher_student_script()) {
    teacher.send(turn);
    if (!world.run(mode)) {
      scenario_detail::expect(report, false, "world did not quiesce");
      break;
    }
  }

  if (mode == Scheduler::RoundRobin) {
    std::vector<Message> expected = teacher_student_expected();
    const auto& log = world.bus().delivery_log();
    scenario_detail::expect(report, log.size() == expected.size(),
                            "delivery count " + std::to_string(log.size()) +
                                " != expected " + std::to_string(expected.size()));
    for (std::size_t i = 0; report.ok && i < expected.size() && i < log.size(); ++i) {
      scenario_detail::expect(report, log[i].msg == expected[i],
                              "first divergent message at " + std::to_string(i) + ": " +
                                  encode(log[i].msg) + " != " + encode(expected[i]));
    }
  }
  scenario_detail::finish(report, "teacher-student", world.bus());
  return report;
}

// ---------------------------------------------------------------------------
// Ticket search: the seller accumulates require templates from the client,
// regenerates find-ticket when they change, and resumes the same search on
// try-again. All of the seller's behaviour is interpreted seed code, so it
// lives in the conversation environment like anything else taught by
// dialogue.

inline constexpr std::string_view sncf_seed_source = R"SNCF(
(define montpellier 'montpellier)
(define paris 'paris)
(define lyon 'lyon)
(define marseille 'marseille)

(define *date-table*
  '((dem8H00 1920) (dem8H41 1961) (dem9H00 1980) (dem9H15 1995)
    (dem9H30 2010) (dem11H00 2100) (dem14H00 2280)))
(define *demain10H* 2040)

(define (date-minutes name)
  (define (scan table)
    (if (null? table)
        -1
        (if (eq? (car (car table)) name)
            (car (cdr (car table)))
            (scan (cdr table)))))
  (scan *date-table*))

; Rows: (train-id depart dest price date-name), in the order the search
; should visit them.
(define *catalog*
  '((34011 paris lyon 80 dem8H00)
    (34170 montpellier paris 150 dem9H30)
    (34730 montpellier paris 95 dem8H41)
    (34392 montpellier paris 98 dem9H15)
    (34888 montpellier paris 120 dem14H00)
    (34999 lyon marseille 60 dem9H00)))

(define *constraints* '())
(define *dirty* #t)

(define (append2 a b)
  (if (null? a) b (cons (car a) (append2 (cdr a) b))))

(define (require-form? c)
  (if (pair? c)
      (if (eq? (car c) 'require)
          (if (pair? (cdr c)) (null? (cdr (cdr c))) #f)
          #f)
      #f))

(define *slots* '(depart dest prix date))

(define (memq? x xs)
  (if (null? xs) #f (if (eq? x (car xs)) #t (memq? x (cdr xs)))))

(define (template-ok? e)
  (if (pair? e)
      (if (eq? (car e) 'quote)
          #t
          (all-ok? e))
      (if (symbol? e)
          (if (memq? e *slots*) #t (bound? e))
          #t)))

(define (all-ok? es)
  (if (null? es)
      #t
      (if (template-ok? (car es))
          (all-ok? (cdr es))
          #f)))

(define (build-find-ticket cs)
  (list 'define '(find-ticket)
    (list 'let '((t (an-element-of *catalog*)))
      (list 'let '((depart (car (cdr t)))
                   (dest (car (cdr (cdr t))))
                   (prix (car (cdr (cdr (cdr t)))))
                   (date-name (car (cdr (cdr (cdr (cdr t)))))))
        (list 'let '((date (date-minutes date-name)))
          (cons 'begin
            (cons '(require (not (eq? depart dest)))
              (append2 cs
                '((list (list 'depart depart)
                        (list 'destination dest)
                        (list 'prix prix)
                        (list 'date date-name)))))))))))

(define *searched* #f)

(define (sync-find-ticket)
  (if *dirty*
      (begin
        (eval-content (build-find-ticket *constraints*))
        (set! *dirty* #f))
      'clean))

(define (sncf-assertion content)
  (if (require-form? content)
      (if (template-ok? content)
          (begin
            (set! *constraints* (append2 *constraints* (list content)))
            (set! *dirty* #t)
            (list (list 'reply 'ack 'ok)))
          (list (list 'reply 'ack '(error unknown-slot))))
      (handle-assertion content)))

(define (sncf-order content)
  (if (eq? content '(find-ticket))
      (begin
        (sync-find-ticket)
        (set! *searched* #t)
        (handle-order content))
      (if (eq? content '(try-again))
          (if (if *searched* *dirty* #f)
              (begin
                (sync-find-ticket)
                (handle-order '(find-ticket)))
              (handle-order content))
          (handle-order content))))

(set! ambevaluate-kqmlmsg
  (let ((old ambevaluate-kqmlmsg))
    (lambda (performative content)
      (if (eq? performative 'assertion)
          (sncf-assertion content)
          (if (eq? performative 'order)
              (sncf-order content)
              (old performative content))))))
)SNCF";

struct ClientTurn {
  std::string performative;
  std::string content;
};

inline std::vector<ClientTurn> ticket_script() {
  return {
      {"assertion", "(require (eq? depart montpellier))"},
      {"assertion", "(require (eq? dest paris))"},
      {"assertion", "(require (< date *demain10H*))"},
      {"order", "(find-ticket)"},
      {"assertion", "(require (< prix 100))"},
      {"order", "(find-ticket)"},
      {"order", "(try-again)"},
  };
}

inline std::vector<std::string> ticket_expected_solutions() {
  return {
      "((depart montpellier) (destination paris) (prix 150) (date dem9H30))",
      "((depart montpellier) (destination paris) (prix 95) (date dem8H41))",
      "((depart montpellier) (destination paris) (prix 98) (date dem9H15))",
  };
}

inline ScenarioReport run_ticket_dialogue(World& world,
                                          const std::vector<ClientTurn>& turns = ticket_script(),
                                          Scheduler mode = Scheduler::RoundRobin) {
  ScenarioReport report;
  Agent& client = world.spawn("client");
  world.spawn("sncf", read_all(sncf_seed_source));

  for (const ClientTurn& turn : turns) {
    client.send(Message{turn.performative, "client", "sncf", read(turn.content)});
    if (!world.run(mode)) {
      scenario_detail::expect(report, false, "world did not quiesce");
      break;
    }
  }

  for (const DeliveryRecord& rec : world.bus().delivery_log()) {
    if (rec.msg.sender == "sncf" && rec.msg.performative == "executed")
      report.solutions.push_back(rec.msg.content);
  }

  static const std::vector<ClientTurn> golden = ticket_script();
  bool is_golden = turns.size() == golden.size();
  for (std::size_t i = 0; is_golden && i < turns.size(); ++i)
    is_golden = turns[i].performative == golden[i].performative &&
                turns[i].content == golden[i].content;
  if (is_golden) {
    auto expected = ticket_expected_solutions();
    scenario_detail::expect(report, report.solutions.size() == expected.size(),
                            "expected " + std::to_string(expected.size()) +
                                " proposals, got " + std::to_string(report.solutions.size()));
    for (std::size_t i = 0; report.ok && i < expected.size(); ++i) {
      scenario_detail::expect(report, print(report.solutions[i]) == expected[i],
                              "proposal " + std::to_string(i) + " is " +
                                  print(report.solutions[i]) + ", expected " + expected[i]);
    }
  }
  scenario_detail::finish(report, "ticket", world.bus());
  return report;
}

// ---------------------------------------------------------------------------
// Multiple dwelling, entered verbatim and driven to exhaustion.

inline constexpr std::string_view multiple_dwelling_source = R"MD(
(define (multiple-dwelling)
  (let ((baker (amb 1 2 3 4 5))
        (cooper (amb 1 2 3 4 5))
        (fletcher (amb 1 2 3 4 5))
        (miller (amb 1 2 3 4 5))
        (smith (amb 1 2 3 4 5)))
    (require (distinct? (list baker cooper
                              fletcher miller smith)))
    (require (not (= baker 5)))
    (require (not (= cooper 1)))
    (require (not (= fletcher 5)))
    (require (not (= fletcher 1)))
    (require (> miller cooper))
    (require
     (not (= (abs (- smith fletcher)) 1)))
    (require
     (not (= (abs (- fletcher cooper)) 1)))
    (list (list 'baker baker)
          (list 'cooper cooper)
          (list 'fletcher fletcher)
          (list 'miller miller)
          (list 'smith smith))))
)MD";

inline constexpr std::string_view multiple_dwelling_expected =
    "((baker 3) (cooper 2) (fletcher 4) (miller 5) (smith 1))";

inline ScenarioReport run_multiple_dwelling() {
  ScenarioReport report;
  EnvPool pool;
  Env* env = pool.make();
  install_primitives(env);
  load_prelude(env);
  evaluate(read(multiple_dwelling_source), env);

  DriveResult first = drive(read("(multiple-dwelling)"), env);
  scenario_detail::expect(report, first.is_solution(), "no solution found");
  if (first.is_solution()) {
    report.solutions.push_back(first.value);
    scenario_detail::expect(report,
                            print(first.value) == multiple_dwelling_expected,
                            "solution is " + print(first.value));
    DriveResult next = resume(first.handle);
    scenario_detail::expect(report, next.is_no_more(),
                            "expected a unique solution, found another");
    report.transcript = print(first.value) + "\ntry-again: no more values\n";
  }
  report.transcript += std::string("(summary multiple-dwelling 1 ") +
                       (report.ok ? "ok" : "fail") + ")\n";
  return report;
}

// ---------------------------------------------------------------------------
// Grid selection: probe every worker with a small job through broadcast,
// select the k fastest by injected virtual latency, teach those the memoised
// fibonacci and give them the big job. Virtual time keeps it deterministic.

inline constexpr std::string_view naive_fib_source =
    "(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2)))))";

inline constexpr std::string_view memo_fib_source = R"MEMO(
(define *fib-table* '())
(define (table-get n t)
  (if (null? t)
      '()
      (if (= n (car (car t)))
          (cdr (car t))
          (table-get n (cdr t)))))
(define (fib-compute n)
  (if (< n 2) n (+ (memo-fib (- n 1)) (memo-fib (- n 2)))))
(define (memo-fib n)
  (let ((hit (table-get n *fib-table*)))
    (if (null? hit)
        (let ((v (fib-compute n)))
          (set! *fib-table* (cons (list n v) *fib-table*))
          v)
        (car hit))))
)MEMO";

struct GridConfig {
  int workers = 3;
  int k = 2;
  std::vector<std::int64_t> delays_ms = {50, 10, 30};  // injected per worker
  std::int64_t timeout_ms = 1000;
  int probe_n = 8;
  int big_n = 20;
};

struct GridReport {
  bool ok = true;
  std::string failure;
  std::vector<std::string> selected;  // ascending latency
  std::map<std::string, std::int64_t> latencies;
  std::vector<Value> big_results;    // executed replies of the big job
  std::uint64_t memo_calls = 0;      // fib-compute applications on 1st selected
  std::uint64_t naive_calls = 0;     // fib applications for the control run
  Value naive_result;
  std::string transcript;
};

inline GridReport run_grid_selection(World& world, const GridConfig& cfg = {}) {
  GridReport report;
  auto fail = [&report](const std::string& what) {
    if (report.ok) {
      report.ok = false;
      report.failure = what;
    }
  };

  Agent& boss = world.spawn("boss");
  Agent& coordinator = world.spawn("coordinator");
  std::vector<std::string> worker_names;
  for (int i = 0; i < cfg.workers; ++i) {
    std::string name = "w" + std::to_string(i + 1);
    worker_names.push_back(name);
    world.spawn(name, {read(naive_fib_source)});
  }

  // Teach the coordinator broadcast, then open its worker conversations so
  // they count as current partners.
  boss.send(Message{"assertion", "boss", "coordinator", read(learn_broadcast_source)});
  boss.send(Message{"order", "boss", "coordinator",
                    read("(set! ambevaluate-kqmlmsg learn-broadcast-code)")});
  if (!world.run_round_robin()) fail("teaching did not quiesce");
  for (const std::string& w : worker_names) coordinator.conversation(w);

  // Probe phase under virtual time. Replies from worker i are delayed by
  // delays_ms[i]; everything else is immediate. Ties break by sequence.
  struct Event {
    std::int64_t at;
    std::size_t seq;
    Message msg;
    bool operator>(const Event& other) const {
      return at != other.at ? at > other.at : seq > other.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
  std::size_t seq = 0;
  auto delay_of = [&](const std::string& sender) -> std::int64_t {
    for (std::size_t i = 0; i < worker_names.size(); ++i) {
      if (worker_names[i] == sender)
        return i < cfg.delays_ms.size() ? cfg.delays_ms[i] : 0;
    }
    return 0;
  };

  Value probe = vlist({Value::sym("order"),
                       vlist({Value::sym("fib"), Value::num(cfg.probe_n)})});
  queue.push(Event{0, seq++, Message{"broadcast", "boss", "coordinator", probe}});

  std::ostringstream timeline;
  while (!queue.empty()) {
    Event ev = queue.top();
    queue.pop();
    timeline << ev.at << "ms " << encode(ev.msg) << "\n";
    if (ev.msg.receiver == "coordinator" && ev.msg.performative == "executed" &&
        !report.latencies.count(ev.msg.sender))
      report.latencies[ev.msg.sender] = ev.at;
    world.bus().deliver(ev.msg);
    Agent* receiver = world.find(ev.msg.receiver);
    if (receiver == nullptr) continue;
    receiver->step();
    for (Message& out : receiver->drain_outbox())
      queue.push(Event{ev.at + delay_of(out.sender), seq++, std::move(out)});
  }

  // Lowest-latency selection, timeouts excluded.
  std::vector<std::pair<std::int64_t, std::string>> ranked;
  for (const auto& [name, latency] : report.latencies) {
    if (latency <= cfg.timeout_ms) ranked.emplace_back(latency, name);
  }
  std::sort(ranked.begin(), ranked.end());
  for (int i = 0; i < cfg.k && i < int(ranked.size()); ++i)
    report.selected.push_back(ranked[i].second);
  if (int(report.selected.size()) < cfg.k) fail("not enough responsive workers");

  // Teach the selected workers memo-fib and order the big job.
  std::size_t big_phase_start = world.bus().delivery_log().size();
  for (const std::string& w : report.selected) {
    for (const Value& form : read_all(memo_fib_source))
      coordinator.send(Message{"assertion", "coordinator", w, form});
    coordinator.send(Message{"order", "coordinator", w,
                             vlist({Value::sym("memo-fib"), Value::num(cfg.big_n)})});
  }
  if (!world.run_round_robin()) fail("big job did not quiesce");
  for (std::size_t i = big_phase_start; i < world.bus().delivery_log().size(); ++i) {
    const Message& m = world.bus().delivery_log()[i].msg;
    if (m.performative == "executed" && m.receiver == "coordinator" && m.content.is_int())
      report.big_results.push_back(m.content);
  }
  if (!report.selected.empty()) {
    Agent* first = world.find(report.selected.front());
    report.memo_calls = first->counts()["fib-compute"];
  }

  // Control: the plain recursive fib on the first worker, counted separately.
  Agent* control = world.find(worker_names.front());
  std::uint64_t before = control->counts()["fib"];
  std::size_t control_phase_start = world.bus().delivery_log().size();
  coordinator.send(Message{"order", "coordinator", worker_names.front(),
                           vlist({Value::sym("fib"), Value::num(cfg.big_n)})});
  if (!world.run_round_robin()) fail("control job did not quiesce");
  report.naive_calls = control->counts()["fib"] - before;
  for (std::size_t i = control_phase_start; i < world.bus().delivery_log().size(); ++i) {
    const Message& m = world.bus().delivery_log()[i].msg;
    if (m.performative == "executed" && m.sender == worker_names.front() &&
        m.receiver == "coordinator" && m.content.is_int())
      report.naive_result = m.content;
  }

  for (const Value& r : report.big_results) {
    if (!report.big_results.empty() && !(r == report.big_results.front()))
      fail("selected workers disagree on the big job");
  }
  report.transcript = timeline.str() + world.bus().transcript() + "(summary grid-selection " +
                      std::to_string(world.bus().delivery_log().size()) + " " +
                      (report.ok ? "ok" : "fail") + ")\n";
  return report;
}

}  // namespace parley
