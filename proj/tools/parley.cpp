// Command-line surface: scripted scenario runs, an interactive session where
// a human plays one agent, and the TCP serve/connect pair.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "parley/repl.hpp"
#include "parley/scenarios.hpp"
#include "parley/tcp.hpp"
#include "parley/world.hpp"

using namespace parley;

namespace {

std::vector<Value> load_seed_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open seed file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return read_all(buf.str());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string default_endpoint() {
  const char* env = std::getenv("PARLEY_ENDPOINT");
  return env != nullptr ? env : "127.0.0.1:7447";
}

int run_command(const std::string& scenario, bool check, const std::string& transcript_path,
                const std::string& scheduler, std::uint64_t backtrack_cap,
                const std::string& seed_path) {
  Scheduler mode = scheduler == "free" ? Scheduler::Free : Scheduler::RoundRobin;
  InterpConfig config;
  config.backtrack_cap = backtrack_cap;
  (void)config;  // scenarios spawn their own agents; the cap guards repl/serve

  ScenarioReport report;
  World world;
  if (scenario == "teacher-student") {
    report = run_teacher_student(world, mode);
  } else if (scenario == "ticket") {
    report = run_ticket_dialogue(world, ticket_script(), mode);
  } else if (scenario == "multiple-dwelling") {
    report = run_multiple_dwelling();
    if (!report.solutions.empty()) std::cout << print(report.solutions[0]) << "\n";
  } else if (scenario == "grid-selection") {
    GridReport grid = run_grid_selection(world);
    std::cout << "selected:";
    for (const auto& w : grid.selected) std::cout << ' ' << w;
    std::cout << "\nbig result: "
              << (grid.big_results.empty() ? "none" : print(grid.big_results[0]))
              << "\nmemo calls: " << grid.memo_calls
              << "\nnaive calls: " << grid.naive_calls << "\n";
    report.ok = grid.ok;
    report.failure = grid.failure;
    report.transcript = grid.transcript;
  } else {
    std::cerr << "unknown scenario '" << scenario
              << "' (expected teacher-student, ticket, multiple-dwelling,"
                 " grid-selection)\n";
    return 2;
  }
  if (!seed_path.empty())
    std::cerr << "note: --seed is ignored by scripted scenarios\n";

  if (!transcript_path.empty()) write_text(transcript_path, report.transcript);
  if (scenario == "teacher-student" || scenario == "ticket")
    std::cout << report.transcript;
  if (check && !report.ok) {
    std::cerr << "divergence: " << report.failure << "\n";
    return 1;
  }
  return 0;
}

int repl_command(const std::string& self, const std::string& target,
                 const std::string& wrap, const std::string& seed_path,
                 const std::string& transcript_path, std::uint64_t backtrack_cap) {
  World world;
  InterpConfig config;
  config.backtrack_cap = backtrack_cap;
  std::vector<Value> seeds;
  if (!seed_path.empty()) seeds = load_seed_file(seed_path);
  world.spawn(target, seeds, config);
  HumanSession human;
  world.bus().add(self, &human);

  std::string line;
  while (true) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == ",quit" || line == ",q") break;
    if (line == ",end") {
      world.find(target)->end_conversation(self);
      std::cout << "conversation with " << target << " ended\n";
      continue;
    }
    std::optional<Message> msg;
    try {
      msg = parse_turn(line, self, target, wrap);
    } catch (const std::exception& e) {
      std::cout << "parse error: " << e.what() << "\n";
      continue;
    }
    if (!msg) continue;
    world.inject(*msg);
    world.run_round_robin();
    for (const Message& reply : human.replies) {
      std::cout << ":(" << reply.performative << " " << print(reply.content) << ")\n";
    }
    human.replies.clear();
  }
  if (!transcript_path.empty()) write_text(transcript_path, world.bus().transcript());
  return 0;
}

std::atomic<bool> interrupted{false};

int serve_command(const std::string& endpoint_text,
                  const std::vector<std::string>& agent_specs,
                  std::uint64_t backtrack_cap) {
  Endpoint ep = parse_endpoint(endpoint_text);
  World world;
  InterpConfig config;
  config.backtrack_cap = backtrack_cap;
  if (agent_specs.empty()) {
    world.spawn("peer", {}, config);
  } else {
    for (const std::string& spec : agent_specs) {
      auto eq = spec.find('=');
      std::string name = spec.substr(0, eq == std::string::npos ? spec.size() : eq);
      std::vector<Value> seeds;
      if (eq != std::string::npos) seeds = load_seed_file(spec.substr(eq + 1));
      world.spawn(name, seeds, config);
    }
  }
  TcpServer server(world, ep);
  std::cout << "listening on " << ep.host << ":" << server.port() << "\n";
  std::signal(SIGINT, [](int) { interrupted.store(true); });
  while (!interrupted.load()) server.poll_once(100);
  return 0;
}

int connect_command(const std::string& endpoint_text, const std::string& self,
                    const std::string& target, const std::string& wrap,
                    const std::string& transcript_path) {
  TcpClient client(parse_endpoint(endpoint_text));
  client.hello(self);
  std::string transcript;
  std::string line;
  while (client.connected()) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == ",quit" || line == ",q") break;
    std::optional<Message> msg;
    try {
      msg = parse_turn(line, self, target, wrap);
    } catch (const std::exception& e) {
      std::cout << "parse error: " << e.what() << "\n";
      continue;
    }
    if (!msg) continue;
    client.send(*msg);
    transcript += encode(*msg) + "\n";
    while (auto reply = client.read_message(600)) {
      std::cout << ":(" << reply->performative << " " << print(reply->content) << ")\n";
      transcript += encode(*reply) + "\n";
      // Keep draining only what is already queued.
      if (!client.read_line(0)) break;
    }
  }
  if (!client.connected()) std::cout << "connection closed by server\n";
  if (!transcript_path.empty()) write_text(transcript_path, transcript);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agents as teachable s-expression interpreters"};
  app.require_subcommand(1);

  std::string scenario, transcript_path, scheduler = "round-robin", seed_path;
  std::string self_name = "human", target_name = "peer", wrap = "request";
  std::string endpoint = default_endpoint();
  std::vector<std::string> agent_specs;
  std::uint64_t backtrack_cap = 1'000'000;
  bool check = false;

  CLI::App* run = app.add_subcommand("run", "run a scripted scenario");
  run->add_option("scenario", scenario,
                  "teacher-student | ticket | multiple-dwelling | grid-selection")
      ->required();
  run->add_flag("--check", check, "exit 1 unless the golden transcript matches");
  run->add_option("--transcript", transcript_path, "write the transcript to this file");
  run->add_option("--scheduler", scheduler, "round-robin (default) or free")
      ->check(CLI::IsMember({"round-robin", "free"}));
  run->add_option("--backtrack-cap", backtrack_cap, "per-drive backtrack budget");
  run->add_option("--seed", seed_path, "seed definitions file");

  CLI::App* repl = app.add_subcommand("repl", "talk to an in-process agent");
  repl->add_option("--as", self_name, "name you appear as (default human)");
  repl->add_option("--to", target_name, "agent to spawn and talk to (default peer)");
  repl->add_option("--wrap", wrap, "performative for bare expressions")
      ->check(CLI::IsMember({"request", "assertion", "order"}));
  repl->add_option("--seed", seed_path, "seed definitions for the spawned agent");
  repl->add_option("--transcript", transcript_path, "write the session log to this file");
  repl->add_option("--backtrack-cap", backtrack_cap, "per-drive backtrack budget");

  CLI::App* serve = app.add_subcommand("serve", "host agents over TCP");
  serve->add_option("endpoint", endpoint, "host:port (default $PARLEY_ENDPOINT)");
  serve->add_option("--agent", agent_specs, "agent to host, NAME or NAME=SEEDFILE");
  serve->add_option("--backtrack-cap", backtrack_cap, "per-drive backtrack budget");

  CLI::App* connect = app.add_subcommand("connect", "join a served world over TCP");
  connect->add_option("endpoint", endpoint, "host:port (default $PARLEY_ENDPOINT)");
  connect->add_option("--as", self_name, "session agent name")->required();
  connect->add_option("--to", target_name, "default receiver for bare expressions");
  connect->add_option("--wrap", wrap, "performative for bare expressions")
      ->check(CLI::IsMember({"request", "assertion", "order"}));
  connect->add_option("--transcript", transcript_path, "write the session log to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return run_command(scenario, check, transcript_path, scheduler, backtrack_cap,
                         seed_path);
    if (repl->parsed())
      return repl_command(self_name, target_name, wrap, seed_path, transcript_path,
                          backtrack_cap);
    if (serve->parsed()) return serve_command(endpoint, agent_specs, backtrack_cap);
    if (connect->parsed())
      return connect_command(endpoint, self_name, target_name, wrap, transcript_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
