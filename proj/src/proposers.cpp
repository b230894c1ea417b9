#include "cascade_forge/proposers.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <set>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/rule_json.hpp"

extern char** environ;

namespace cascade_forge {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxContext = 2;
constexpr std::size_t kMaxClusterPhones = 3;

bool is_phone_token(std::string_view t) { return t != kBoundaryToken && t != kSeparatorToken; }

struct TokenEdit {
  std::size_t token;
  MappingFn fn;
};

std::vector<TokenEdit> token_edits(const TokenizedWord& source, const TokenizedWord& target) {
  const auto ops = edit_script(source.phones(), target.phones());
  std::vector<TokenEdit> out;
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Substitute: {
        mappings::Substitute sub;
        sub.map[source.phones()[op.position]] = {op.phone};
        out.push_back({2 + 2 * op.position, sub});
        break;
      }
      case EditKind::Delete:
        out.push_back({2 + 2 * op.position, mappings::Delete{}});
        break;
      case EditKind::Insert: {
        const std::size_t token = 1 + 2 * op.position;
        if (!out.empty() && out.back().token == token) {
          std::get<mappings::Insert>(out.back().fn).phones.push_back(op.phone);
        } else {
          out.push_back({token, mappings::Insert{{op.phone}}});
        }
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const TokenEdit& a, const TokenEdit& b) { return a.token < b.token; });
  return out;
}

std::size_t phones_between(std::size_t lo, std::size_t hi, const TokenizedWord& word) {
  std::size_t n = 0;
  for (std::size_t i = lo; i <= hi; ++i) n += word.is_phone_token(i) ? 1 : 0;
  return n;
}

// Start index with `r` context phones left of `lo`, or nullopt if the word runs out.
std::optional<std::size_t> extend_left(const TokenizedWord& word, std::size_t lo, std::size_t r) {
  std::size_t idx = lo;
  for (std::size_t added = 0; added < r;) {
    if (idx == 0) return std::nullopt;
    --idx;
    if (idx == 0) return std::nullopt;
    if (word.is_phone_token(idx)) ++added;
  }
  return idx;
}

std::optional<std::size_t> extend_right(const TokenizedWord& word, std::size_t hi, std::size_t r) {
  const std::size_t last = word.token_count() - 1;
  std::size_t idx = hi;
  for (std::size_t added = 0; added < r;) {
    ++idx;
    if (idx >= last) return std::nullopt;
    if (word.is_phone_token(idx)) ++added;
  }
  return idx;
}

Predicate predicate_for(std::string_view token, bool first) {
  if (token == kBoundaryToken) return first ? Predicate::word_start() : Predicate::word_end();
  if (token == kSeparatorToken) return Predicate::nothing();
  return Predicate::phones({std::string(token)});
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

TokenizedWord word_from_json(const json& j, const Inventory& inventory, const std::string& pointer) {
  if (!j.is_array()) throw ParseError(pointer + ": expected an array of phones");
  std::vector<std::string> phones;
  for (const auto& p : j) {
    if (!p.is_string()) throw ParseError(pointer + ": expected an array of phones");
    std::string s = p.get<std::string>();
    if (!inventory.contains(s)) throw ParseError(pointer + ": phone \"" + s + "\" is not in the inventory");
    phones.push_back(std::move(s));
  }
  return TokenizedWord(std::move(phones));
}

}  // namespace

void ProposalRequest::validate() const {
  if (examples.empty()) throw std::invalid_argument("proposal request has no examples");
  if (num_samples < 1) throw std::invalid_argument("proposal request needs num_samples >= 1");
}

std::vector<EditCandidate> extract_edit_candidates(const std::vector<WordPair>& examples) {
  std::vector<EditCandidate> out;
  std::set<std::string> seen;
  for (const auto& ex : examples) {
    if (ex.source == ex.target) continue;
    const auto edits = token_edits(ex.source, ex.target);
    const std::size_t last = ex.source.token_count() - 1;
    const auto tokens = ex.source.tokens();
    for (std::size_t a = 0; a < edits.size(); ++a) {
      for (std::size_t b = a; b < edits.size(); ++b) {
        const std::size_t lo = edits[a].token, hi = edits[b].token;
        if (phones_between(lo, hi, ex.source) > kMaxClusterPhones) break;
        for (std::size_t rl = 0; rl <= kMaxContext; ++rl) {
          const auto start = extend_left(ex.source, lo, rl);
          if (!start) break;
          for (std::size_t rr = 0; rr <= kMaxContext; ++rr) {
            const auto end = extend_right(ex.source, hi, rr);
            if (!end) break;
            const bool phone_left = *start > 2;
            const bool phone_right = *end + 3 < ex.source.token_count();
            for (int lv = 0; lv < 2; ++lv) {
              for (int rv = 0; rv < 2; ++rv) {
                EditCandidate c;
                std::size_t s = *start, e = *end;
                if (lv == 1) {
                  if (phone_left) {
                    c.not_word_start = true;
                  } else {
                    s = 0;
                  }
                }
                if (rv == 1) {
                  if (phone_right) {
                    c.not_word_end = true;
                  } else {
                    e = last;
                  }
                }
                c.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(s),
                                tokens.begin() + static_cast<std::ptrdiff_t>(e) + 1);
                for (std::size_t k = a; k <= b; ++k) c.changes.emplace_back(edits[k].token - s, edits[k].fn);
                c.left_context = rl;
                c.right_context = rr;
                if (seen.insert(canonical_key(candidate_to_rule(c))).second) out.push_back(std::move(c));
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Rule candidate_to_rule(const EditCandidate& candidate) {
  if (candidate.tokens.empty()) throw std::invalid_argument("edit candidate without tokens");
  Rule rule;
  std::size_t shift = 0;
  if (candidate.not_word_start) {
    rule.predicates.push_back(Predicate::negate(Predicate::word_start()));
    if (is_phone_token(candidate.tokens.front())) rule.predicates.push_back(Predicate::nothing());
    shift = rule.predicates.size();
  }
  for (std::size_t i = 0; i < candidate.tokens.size(); ++i) {
    rule.predicates.push_back(predicate_for(candidate.tokens[i], i == 0));
  }
  if (candidate.not_word_end) {
    if (is_phone_token(candidate.tokens.back())) rule.predicates.push_back(Predicate::nothing());
    rule.predicates.push_back(Predicate::negate(Predicate::word_end()));
  }
  for (const auto& [offset, fn] : candidate.changes) {
    rule.change_pos.push_back(offset + shift);
    rule.mappings.push_back(fn);
  }
  return rule;
}

Proposal EnumerativeProposer::propose(const ProposalRequest& request) {
  request.validate();
  Proposal out;
  const auto candidates = extract_edit_candidates(request.examples);
  if (candidates.empty()) return out;

  std::vector<std::size_t> base;
  long long dist_source_target = 0;
  for (const auto& ex : request.examples) {
    base.push_back(edit_distance(ex.source, ex.target));
    dist_source_target += static_cast<long long>(base.back());
  }

  struct Scored {
    Rule rule;
    double reward;
    std::string key;
  };
  std::vector<Scored> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    Rule rule = candidate_to_rule(c);
    try {
      rule.validate(*inventory_);
    } catch (const RuleError& e) {
      out.diagnostics.push_back(std::string("skipped candidate: ") + e.what());
      continue;
    }
    long long d = 0;
    for (std::size_t i = 0; i < request.examples.size(); ++i) {
      const auto& ex = request.examples[i];
      const TokenizedWord pred = apply_rule(rule, ex.source, *inventory_);
      d += static_cast<long long>(pred == ex.source ? base[i] : edit_distance(pred, ex.target));
    }
    std::string key = canonical_key(rule);
    scored.push_back({std::move(rule), reward_from_distances(dist_source_target, d), std::move(key)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (a.rule.predicates.size() != b.rule.predicates.size()) return a.rule.predicates.size() < b.rule.predicates.size();
    return a.key < b.key;
  });
  const std::size_t take = std::min(request.num_samples, scored.size());
  for (std::size_t i = 0; i < take; ++i) out.rules.push_back(std::move(scored[i].rule));
  out.member_counts.emplace_back(name(), out.rules.size());
  return out;
}

// ---------------------------------------------------------------------------

ExternalProposer::ExternalProposer(std::vector<std::string> argv, const Inventory& inventory,
                                   std::optional<std::chrono::milliseconds> timeout)
    : argv_(std::move(argv)), inventory_(&inventory), timeout_(timeout.value_or(default_proposer_timeout())) {
  if (argv_.empty() || argv_.front().empty()) throw std::invalid_argument("external proposer needs a command");
}

std::string ExternalProposer::name() const { return "exec:" + join(argv_, ' '); }

void ExternalProposer::probe() const {
  const std::string& cmd = argv_.front();
  if (cmd.find('/') != std::string::npos) {
    if (access(cmd.c_str(), X_OK) != 0) throw ProposerError("proposer \"" + cmd + "\" is not executable");
    return;
  }
  const char* path = std::getenv("PATH");
  std::string_view rest = path ? path : "/usr/bin:/bin";
  while (true) {
    const auto colon = rest.find(':');
    std::string dir(rest.substr(0, colon));
    if (dir.empty()) dir = ".";
    if (access((dir + "/" + cmd).c_str(), X_OK) == 0) return;
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  throw ProposerError("proposer \"" + cmd + "\" not found on PATH");
}

Proposal ExternalProposer::propose(const ProposalRequest& request) {
  request.validate();
  Proposal out;
  const std::string tag = "[" + name() + "] ";
  const std::string payload = encode_request(request) + "\n";

  int in_fds[2];
  int out_fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_fds) != 0) {
    out.diagnostics.push_back(tag + "socketpair failed: " + std::strerror(errno));
    return out;
  }
  if (pipe2(out_fds, O_CLOEXEC) != 0) {
    out.diagnostics.push_back(tag + "pipe failed: " + std::strerror(errno));
    close(in_fds[0]);
    close(in_fds[1]);
    return out;
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_fds[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_fds[1]);
  close(out_fds[1]);
  if (rc != 0) {
    out.diagnostics.push_back(tag + "spawn failed: " + std::strerror(rc));
    close(in_fds[0]);
    close(out_fds[0]);
    return out;
  }

  int to_child = in_fds[0];
  const int from_child = out_fds[0];
  fcntl(to_child, F_SETFL, fcntl(to_child, F_GETFL) | O_NONBLOCK);

  const auto deadline = Clock::now() + timeout_;
  std::size_t written = 0;
  std::string received;
  bool have_line = false, eof = false, timed_out = false;

  while (!have_line && !eof) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {from_child, POLLIN, 0};
    if (to_child >= 0) fds[n++] = {to_child, POLLOUT, 0};
    const int ready = poll(fds, n, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      out.diagnostics.push_back(tag + "poll failed: " + std::strerror(errno));
      break;
    }
    if (to_child >= 0 && n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = send(to_child, payload.data() + written, payload.size() - written, MSG_NOSIGNAL);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN && errno != EINTR) written = payload.size();
      if (written == payload.size()) {
        shutdown(to_child, SHUT_WR);
        close(to_child);
        to_child = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[4096];
      const ssize_t r = read(from_child, buf, sizeof buf);
      if (r > 0) {
        received.append(buf, static_cast<std::size_t>(r));
        have_line = received.find('\n') != std::string::npos;
      } else if (r == 0) {
        eof = true;
      } else if (errno != EINTR && errno != EAGAIN) {
        eof = true;
      }
    }
  }
  if (to_child >= 0) close(to_child);
  close(from_child);

  int status = 0;
  bool reaped = false;
  if (!timed_out) {
    // Give a well-behaved child a moment to exit after answering.
    const auto grace = std::min(deadline, Clock::now() + std::chrono::milliseconds(1000));
    while (Clock::now() < grace) {
      const pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        reaped = true;
        break;
      }
      if (w < 0) break;
      usleep(2000);
    }
  }
  if (!reaped) {
    kill(pid, SIGKILL);
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
  }

  if (timed_out) {
    out.diagnostics.push_back(tag + "timed out after " + std::to_string(timeout_.count()) + " ms");
    return out;
  }
  if (reaped && WIFEXITED(status) && WEXITSTATUS(status) != 0) {
    out.diagnostics.push_back(tag + "exited with status " + std::to_string(WEXITSTATUS(status)));
  }
  if (!have_line && received.empty()) {
    out.diagnostics.push_back(tag + "no response");
    return out;
  }
  const std::string line = received.substr(0, received.find('\n'));
  Proposal decoded = decode_response(line, *inventory_);
  for (auto& d : decoded.diagnostics) out.diagnostics.push_back(tag + d);
  out.rules = std::move(decoded.rules);
  if (out.rules.size() > request.num_samples) out.rules.resize(request.num_samples);
  out.member_counts.emplace_back(name(), out.rules.size());
  return out;
}

// ---------------------------------------------------------------------------

EnsembleProposer::EnsembleProposer(std::vector<std::unique_ptr<Proposer>> members) : members_(std::move(members)) {
  if (members_.size() < 2) throw std::invalid_argument("an ensemble needs at least two members");
  for (const auto& m : members_) {
    if (!m) throw std::invalid_argument("ensemble member is null");
  }
}

std::string EnsembleProposer::name() const {
  std::vector<std::string> names;
  for (const auto& m : members_) names.push_back(m->name());
  return "ensemble(" + join(names, ',') + ")";
}

Proposal EnsembleProposer::propose(const ProposalRequest& request) {
  request.validate();
  Proposal out;
  std::set<std::string> seen;
  for (const auto& member : members_) {
    Proposal p = member->propose(request);
    std::size_t added = 0;
    for (auto& rule : p.rules) {
      if (seen.insert(canonical_key(rule)).second) {
        out.rules.push_back(std::move(rule));
        ++added;
      }
    }
    for (auto& d : p.diagnostics) out.diagnostics.push_back(std::move(d));
    out.member_counts.emplace_back(member->name(), added);
  }
  return out;
}

std::unique_ptr<Proposer> make_proposer(std::string_view spec, const Inventory& inventory) {
  if (spec == "builtin") return std::make_unique<EnumerativeProposer>(inventory);
  constexpr std::string_view prefix = "exec:";
  if (spec.substr(0, prefix.size()) == prefix) {
    std::vector<std::string> argv;
    std::string_view rest = spec.substr(prefix.size());
    while (!rest.empty()) {
      const auto space = rest.find(' ');
      if (space != 0) argv.emplace_back(rest.substr(0, space));
      if (space == std::string_view::npos) break;
      rest.remove_prefix(space + 1);
    }
    if (argv.empty()) throw ProposerError("empty command in proposer spec \"" + std::string(spec) + "\"");
    return std::make_unique<ExternalProposer>(std::move(argv), inventory);
  }
  throw ProposerError("unknown proposer \"" + std::string(spec) + "\" (expected builtin or exec:<command>)");
}

std::chrono::milliseconds default_proposer_timeout() {
  constexpr std::chrono::milliseconds fallback{120000};
  const char* env = std::getenv("CASCADE_FORGE_PROPOSER_TIMEOUT_MS");
  if (!env || !*env) return fallback;
  long long ms = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), ms);
  if (ec != std::errc() || ptr != s.data() + s.size() || ms <= 0) return fallback;
  return std::chrono::milliseconds(ms);
}

// ---------------------------------------------------------------------------

std::string encode_request(const ProposalRequest& request) {
  json examples = json::array();
  for (const auto& ex : request.examples) {
    examples.push_back({{"source", ex.source.phones()}, {"target", ex.target.phones()}});
  }
  json j{{"v", 1}, {"examples", examples}, {"num_samples", request.num_samples}, {"step", request.step}};
  if (request.budget_hint) j["budget_ms"] = request.budget_hint->count();
  return j.dump();
}

ProposalRequest decode_request(std::string_view line, const Inventory& inventory) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("examples") || !j["examples"].is_array()) {
    throw ParseError("request: expected an object with an examples array");
  }
  ProposalRequest req;
  const auto& exs = j["examples"];
  for (std::size_t i = 0; i < exs.size(); ++i) {
    const std::string p = "/examples/" + std::to_string(i);
    if (!exs[i].is_object() || !exs[i].contains("source") || !exs[i].contains("target")) {
      throw ParseError(p + ": expected {source, target}");
    }
    req.examples.push_back({word_from_json(exs[i]["source"], inventory, p + "/source"),
                            word_from_json(exs[i]["target"], inventory, p + "/target")});
  }
  if (j.contains("num_samples")) {
    if (!j["num_samples"].is_number_unsigned()) throw ParseError("/num_samples: expected a positive integer");
    req.num_samples = j["num_samples"].get<std::size_t>();
  }
  if (j.contains("step")) {
    if (!j["step"].is_number_integer()) throw ParseError("/step: expected an integer");
    req.step = j["step"].get<int>();
  }
  if (j.contains("budget_ms") && j["budget_ms"].is_number_integer()) {
    req.budget_hint = std::chrono::milliseconds(j["budget_ms"].get<long long>());
  }
  return req;
}

std::string encode_response(const std::vector<Rule>& rules) {
  json programs = json::array();
  for (const auto& r : rules) programs.push_back(rule_to_json(r));
  return json{{"v", 1}, {"programs", programs}}.dump();
}

Proposal decode_response(std::string_view line, const Inventory& inventory) {
  Proposal out;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    out.diagnostics.push_back(std::string("malformed response: ") + e.what());
    return out;
  }
  if (!j.is_object() || !j.contains("programs") || !j["programs"].is_array()) {
    out.diagnostics.push_back("malformed response: expected {\"v\":1,\"programs\":[...]}");
    return out;
  }
  if (j.contains("v") && j["v"] != 1) {
    out.diagnostics.push_back("unsupported protocol version " + j["v"].dump());
    return out;
  }
  const auto& programs = j["programs"];
  for (std::size_t i = 0; i < programs.size(); ++i) {
    try {
      Rule r = rule_from_json(programs[i], "/programs/" + std::to_string(i));
      r.validate(inventory);
      out.rules.push_back(std::move(r));
    } catch (const ParseError& e) {
      out.diagnostics.push_back(std::string("dropped program: ") + e.what());
    } catch (const RuleError& e) {
      out.diagnostics.push_back("dropped program /programs/" + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cascade_forge
