#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/io.hpp"
#include "cascade_forge/metrics.hpp"
#include "cascade_forge/phonology.hpp"
#include "cascade_forge/proposers.hpp"
#include "cascade_forge/rule_json.hpp"
#include "cascade_forge/search.hpp"
#include "cascade_forge/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cascade_forge;

namespace {

constexpr const char* kToolVersion = CASCADE_FORGE_VERSION;

enum ExitCode { kOk = 0, kFailure = 1, kParse = 2, kTokenization = 3, kProposer = 4, kGeneration = 5 };

struct Globals {
  std::string inventory_path;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

class Session {
 public:
  explicit Session(const Globals& g) : globals_(g) {
    if (g.inventory_path.empty()) {
      inventory_ = &Inventory::default_inventory();
      inventory_digest_ = "builtin";
    } else {
      const std::string text = io::read_file(g.inventory_path);
      owned_ = Inventory::parse(text);
      inventory_ = &*owned_;
      inventory_digest_ = io::sha256_hex(text);
    }
  }

  const Inventory& inventory() const { return *inventory_; }
  const Globals& globals() const { return globals_; }

  std::string read_input(const std::string& path) {
    std::string text = io::read_file(path);
    digests_[fs::path(path).filename().string()] = io::sha256_hex(text);
    return text;
  }

  json manifest(const std::string& command, const json& config) const {
    json inputs = digests_;
    inputs["inventory"] = inventory_digest_;
    return {{"command", command},
            {"config", config},
            {"seed", globals_.seed},
            {"tool_version", kToolVersion},
            {"inputs", inputs}};
  }

 private:
  Globals globals_;
  std::optional<Inventory> owned_;
  const Inventory* inventory_ = nullptr;
  std::string inventory_digest_;
  json digests_ = json::object();
};

void write(const fs::path& path, const std::string& content) { io::write_file_atomic(path, content); }

// Start/end wall-clock times of a run, in timing.json.
class Timing {
 public:
  explicit Timing(fs::path dir) : dir_(std::move(dir)), start_(iso_now()) {
    write(dir_ / "timing.json", pretty({{"start", start_}}));
  }
  void finish() { write(dir_ / "timing.json", pretty({{"start", start_}, {"end", iso_now()}})); }

 private:
  fs::path dir_;
  std::string start_;
};

std::string words_of(const std::vector<TokenizedWord>& words, std::size_t i) { return detokenize(words[i]); }

json pair_rows(const Dataset& ds, const RewardReport& report) {
  json rows = json::array();
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    rows.push_back({{"id", ds.pairs[i].id},
                    {"source", detokenize(ds.pairs[i].source)},
                    {"pred", words_of(report.predictions, i)},
                    {"target", detokenize(ds.pairs[i].target)},
                    {"dist", report.distances[i]}});
  }
  return rows;
}

json report_json(const Dataset& ds, const RewardReport& report) {
  return {{"reward", report.reward},
          {"pass", report.pass},
          {"dist_source_target", report.dist_source_target},
          {"dist_pred_target", report.dist_pred_target},
          {"pairs", pair_rows(ds, report)}};
}

std::string pad(const std::string& s, std::size_t width) {
  // Display width counts code points, not bytes.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  return s + std::string(cps < width ? width - cps : 0, ' ');
}

std::string report_table(const Dataset& ds, const RewardReport& report) {
  std::ostringstream os;
  os << pad("id", 10) << pad("source", 16) << pad("pred", 16) << pad("target", 16) << "dist\n";
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    os << pad(ds.pairs[i].id, 10) << pad(detokenize(ds.pairs[i].source), 16)
       << pad(words_of(report.predictions, i), 16) << pad(detokenize(ds.pairs[i].target), 16)
       << report.distances[i] << "\n";
  }
  os << "reward: " << report.reward << "\npass: " << (report.pass ? "true" : "false") << "\n";
  return os.str();
}

json hypothesis_json(const Hypothesis& h) {
  json forms = json::array();
  for (const auto& w : h.current_forms) forms.push_back(detokenize(w));
  return {{"cascade", cascade_to_json(h.cascade)}, {"reward", h.reward}, {"step", h.step}, {"forms", forms}};
}

// ---------------------------------------------------------------------------

int cmd_apply(Session& session, const std::string& rules_path, const std::string& words_path, bool trace) {
  const Cascade cascade = parse_cascade(session.read_input(rules_path));
  for (const auto& r : cascade) r.validate(session.inventory());
  const auto words = io::parse_word_list(session.read_input(words_path), session.inventory());
  std::string tsv;
  json rows = json::array();
  Diagnostics diagnostics;
  for (const auto& [surface, word] : words) {
    const CascadeResult result = apply_cascade(cascade, word, session.inventory(), &diagnostics);
    tsv += surface + "\t" + detokenize(result.output);
    json steps = json::array();
    for (const auto& t : result.trace) steps.push_back(detokenize(t));
    if (trace) {
      for (const auto& t : result.trace) tsv += "\t" + detokenize(t);
    }
    tsv += "\n";
    json row{{"source", surface}, {"output", detokenize(result.output)}};
    if (trace) row["trace"] = steps;
    rows.push_back(row);
  }
  for (const auto& d : diagnostics) std::cerr << "note: " << d << "\n";
  const std::string text = session.globals().json ? pretty(rows) : tsv;
  if (!session.globals().out.empty()) {
    const fs::path dir = session.globals().out;
    write(dir / (session.globals().json ? "apply.json" : "apply.tsv"), text);
  }
  std::cout << text;
  return kOk;
}

int cmd_eval(Session& session, const std::string& cascade_path, const std::string& pairs_path) {
  const Cascade cascade = parse_cascade(session.read_input(cascade_path));
  for (const auto& r : cascade) r.validate(session.inventory());
  const Dataset ds = io::parse_pairs(session.read_input(pairs_path), session.inventory(), pairs_path);
  ds.validate();
  const RewardReport report = evaluate(cascade, ds, session.inventory());
  const json j = report_json(ds, report);
  if (!session.globals().out.empty()) write(fs::path(session.globals().out) / "report.json", pretty(j));
  std::cout << (session.globals().json ? pretty(j) : report_table(ds, report));
  return kOk;
}

struct InduceOptions {
  std::string pairs;
  std::string proposer = "builtin";
  std::vector<std::string> ensemble;
  std::string mode = "cascade";
  std::size_t beams = 20;
  std::optional<std::size_t> samples;
  std::size_t max_steps = 5;
  bool ites = false;
  bool no_early_stop = false;
};

std::unique_ptr<Proposer> build_proposer(const InduceOptions& opt, const Inventory& inventory) {
  std::vector<std::unique_ptr<Proposer>> members;
  std::vector<std::string> specs{opt.proposer};
  specs.insert(specs.end(), opt.ensemble.begin(), opt.ensemble.end());
  for (const auto& spec : specs) {
    auto p = make_proposer(spec, inventory);
    if (auto* ext = dynamic_cast<ExternalProposer*>(p.get())) ext->probe();
    members.push_back(std::move(p));
  }
  if (members.size() == 1) return std::move(members.front());
  return std::make_unique<EnsembleProposer>(std::move(members));
}

json reward_at_json(const std::vector<double>& rewards) {
  json out = json::object();
  if (rewards.empty()) return out;
  for (std::size_t m : {1, 3, 5, 10}) out[std::to_string(m)] = reward_at_m({rewards}, m);
  return out;
}

int cmd_induce(Session& session, const InduceOptions& opt) {
  if (opt.mode != "single" && opt.mode != "cascade") throw ParseError("--mode must be single or cascade");
  const Dataset ds = io::parse_pairs(session.read_input(opt.pairs), session.inventory(), opt.pairs);
  ds.validate();
  auto proposer = build_proposer(opt, session.inventory());

  SearchConfig cfg;
  cfg.k = opt.beams;
  cfg.s = opt.samples.value_or(opt.mode == "single" ? 20 : 1);
  cfg.m = opt.max_steps;
  cfg.seed = session.globals().seed;
  cfg.early_stop_on_perfect = !opt.no_early_stop;
  cfg.ites = opt.ites;
  cfg.validate();

  const fs::path dir = session.globals().out.empty() ? fs::path("run") : fs::path(session.globals().out);
  const json config{{"mode", opt.mode},
                    {"proposer", proposer->name()},
                    {"k", cfg.k},
                    {"s", cfg.s},
                    {"m", cfg.m},
                    {"seed", cfg.seed},
                    {"early_stop_on_perfect", cfg.early_stop_on_perfect},
                    {"ites", cfg.ites},
                    {"pairs", fs::path(opt.pairs).filename().string()}};
  write(dir / "manifest.json", pretty(session.manifest("induce", config)));
  Timing timing(dir);
  write(dir / "config.json", pretty(config));

  std::string log;
  std::vector<double> rewards;
  Cascade best_cascade;
  double best_reward = 0.0;
  bool pass = false;

  if (opt.mode == "single") {
    Diagnostics diagnostics;
    const auto ranked = induce_single_law(*proposer, ds, session.inventory(), cfg.s, cfg.ites, &diagnostics);
    for (const auto& d : diagnostics) log += "diagnostic: " + d + "\n";
    json candidates = json::array();
    for (const auto& r : ranked) {
      rewards.push_back(r.report.reward);
      candidates.push_back({{"rule", rule_to_json(r.rule)}, {"reward", r.report.reward}, {"pass", r.report.pass}});
    }
    log += "candidates: " + std::to_string(ranked.size()) + "\n";
    write(dir / "candidates.json", pretty(candidates));
    if (ranked.empty()) {
      best_reward = evaluate({}, ds, session.inventory()).reward;
    } else {
      best_cascade = {ranked.front().rule};
      best_reward = ranked.front().report.reward;
      pass = ranked.front().report.pass;
    }
  } else {
    const auto observer = [&](const StepRecord& rec) {
      json beams = json::array();
      for (const auto& h : rec.beams) beams.push_back(hypothesis_json(h));
      write(dir / "beams" / ("step_" + std::to_string(rec.step) + ".json"), pretty(beams));
      std::ostringstream line;
      line << "step " << rec.step << ": expansions " << rec.expansions << ", pooled";
      for (const auto& [name, n] : rec.member_counts) line << " " << name << "=" << n;
      line << ", best reward " << json(rec.beams.empty() ? 0.0 : rec.beams.front().reward).dump() << "\n";
      for (const auto& d : rec.diagnostics) line << "  diagnostic: " << d << "\n";
      log += line.str();
    };
    const auto beams = beam_search_cascade(*proposer, ds, session.inventory(), cfg, observer);
    for (const auto& h : beams) rewards.push_back(h.reward);
    const Hypothesis& best = pick_best(beams);
    best_cascade = best.cascade;
    best_reward = best.reward;
    pass = best.reward == 1.0;
  }

  write(dir / "best.json", pretty(cascade_to_json(best_cascade)));
  write(dir / "log.txt", log);
  const json summary{{"mode", opt.mode},
                     {"best_reward", best_reward},
                     {"pass", pass},
                     {"rules", best_cascade.size()},
                     {"reward_at", reward_at_json(rewards)}};
  write(dir / "summary.json", pretty(summary));
  timing.finish();

  if (session.globals().json) {
    std::cout << pretty(summary);
  } else {
    std::cout << "best reward: " << json(best_reward).dump() << "\n";
    for (const char* m : {"1", "3", "5", "10"}) {
      if (summary["reward_at"].contains(m)) std::cout << "reward@" << m << ": " << summary["reward_at"][m].dump() << "\n";
    }
    std::cout << "pass: " << (pass ? "true" : "false") << "\n";
    std::cout << "run directory: " << dir.string() << "\n";
  }
  return kOk;
}

std::string case_name(std::size_t i) {
  std::ostringstream os;
  os << "case_" << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

void write_case(const fs::path& dir, const SynthCase& c, bool single_rule, const json& meta) {
  if (single_rule) {
    write(dir / "rule.json", pretty(rule_to_json(c.ground_truth.front())));
  } else {
    write(dir / "cascade.json", pretty(cascade_to_json(c.ground_truth)));
  }
  write(dir / "pairs.tsv", io::format_pairs(c.dataset));
  json info = meta;
  info["provenance"] = c.provenance;
  json ids = json::array();
  for (const auto& p : c.dataset.pairs) ids.push_back(p.id);
  info["pair_ids"] = ids;
  write(dir / "meta.json", pretty(info));
}

fs::path require_out(const Session& session) {
  if (session.globals().out.empty()) throw std::invalid_argument("generate needs --out DIR");
  return session.globals().out;
}

int cmd_generate_smp(Session& session, std::size_t laws, const SmpSpec& base) {
  SmpSpec spec = base;
  spec.seed = session.globals().seed;
  spec.validate();
  const fs::path dir = require_out(session);
  json config = spec.to_json();
  config["laws"] = laws;
  write(dir / "manifest.json", pretty(session.manifest("generate smp", config)));
  Timing timing(dir);
  for (std::size_t i = 0; i < laws; ++i) {
    Rng rng = derive_rng(spec.seed, i);
    const SmpLaw law = gen_smp_law(spec, session.inventory(), rng);
    SynthCase c = gen_smp_examples(law.rule, spec.n, session.inventory(), rng);
    json ops = json::array();
    for (std::size_t k = 0; k < law.ops.size(); ++k) {
      ops.push_back({{"phone", law.change_phones[k]}, {"op", to_string(law.ops[k])}});
    }
    const json meta{{"env_size", law.env_size}, {"boundary", to_string(law.boundary)},
                    {"env_phones", law.env_phones}, {"changes", ops}};
    write_case(dir / case_name(i), c, true, meta);
  }
  timing.finish();
  std::cout << "wrote " << laws << " SMP cases to " << dir.string() << "\n";
  return kOk;
}

int cmd_generate_ling(Session& session, const LingSpec& base) {
  LingSpec spec = base;
  spec.seed = session.globals().seed;
  spec.validate();
  const fs::path dir = require_out(session);
  write(dir / "manifest.json", pretty(session.manifest("generate ling", spec.to_json())));
  Timing timing(dir);
  const NonceGenerator nonces(session.inventory());
  for (std::size_t i = 0; i < spec.num_langs; ++i) {
    Rng rng = derive_rng(spec.seed, i);
    SynthCase c;
    try {
      c = gen_ling_language(spec, session.inventory(), nonces, rng);
    } catch (const GenerationError& e) {
      throw GenerationError("language " + std::to_string(i) + ": " + e.what());
    }
    write_case(dir / case_name(i), c, false, json::object());
  }
  timing.finish();
  std::cout << "wrote " << spec.num_langs << " LING languages to " << dir.string() << "\n";
  return kOk;
}

int cmd_generate_multilaw(Session& session, const MultilawSpec& base, const std::string& pool_path) {
  MultilawSpec spec = base;
  spec.seed = session.globals().seed;
  spec.validate();
  const fs::path dir = require_out(session);
  Cascade pool = pool_path.empty() ? io::conformance_cascade() : parse_cascade(session.read_input(pool_path));
  for (const auto& r : pool) r.validate(session.inventory());
  json config = spec.to_json();
  config["pool"] = pool_path.empty() ? "builtin-conformance" : fs::path(pool_path).filename().string();
  write(dir / "manifest.json", pretty(session.manifest("generate multilaw", config)));
  Timing timing(dir);
  const NonceGenerator nonces(session.inventory());
  Rng rng = derive_rng(spec.seed, 0);
  const auto cases = gen_multilaw_evalset(pool, spec, session.inventory(), nonces, rng);
  for (std::size_t i = 0; i < cases.size(); ++i) write_case(dir / case_name(i), cases[i], false, json::object());
  timing.finish();
  std::cout << "wrote " << cases.size() << " multi-law sets to " << dir.string() << "\n";
  return kOk;
}

int cmd_select_examples(Session& session, const std::string& pairs_path) {
  const Dataset ds = io::parse_pairs(session.read_input(pairs_path), session.inventory(), pairs_path);
  const ItesSelection sel = select_examples_ites(ds.pairs);
  Dataset filtered;
  filtered.pairs = sel.pairs;
  std::string summary = "delta_sl (" + std::to_string(sel.delta_sl.size()) + "):";
  for (const auto& p : sel.delta_sl) summary += " " + p;
  summary += "; kept " + std::to_string(sel.pairs.size()) + " of " + std::to_string(ds.pairs.size()) + " pairs";
  if (sel.pairs.empty()) std::cerr << "warning: every pair is unchanged; nothing selected\n";
  const std::string tsv = io::format_pairs(filtered);
  if (!session.globals().out.empty()) {
    const fs::path dir = session.globals().out;
    write(dir / "filtered.tsv", tsv);
    write(dir / "delta_sl.txt", summary + "\n");
    std::cout << summary << "\n";
  } else {
    std::cout << tsv;
    std::cerr << summary << "\n";
  }
  return kOk;
}

int cmd_inventory_check(Session& session) {
  const Inventory& inv = session.inventory();
  std::vector<std::string> unstable;
  for (const auto& a : inv.phones()) {
    for (const auto& b : inv.phones()) {
      if (!is_round_trip_stable(TokenizedWord({a.symbol, b.symbol}), inv)) unstable.push_back(a.symbol + "+" + b.symbol);
    }
  }
  const json j{{"phones", inv.size()},
               {"features", inv.feature_count()},
               {"feature_names", inv.feature_names()},
               {"ambiguous_bigrams", unstable}};
  if (session.globals().json) {
    std::cout << pretty(j);
  } else {
    std::cout << "phones: " << inv.size() << "\nfeatures: " << inv.feature_count() << "\n";
    std::cout << "ambiguous bigrams (re-segment differently): " << unstable.size() << "\n";
    for (const auto& u : unstable) std::cout << "  " << u << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sound-law rule engine, evaluator, cascade induction and corpus generator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  app.add_option("--inventory", globals.inventory_path, "Inventory file (default: built-in)");
  app.add_option("--seed", globals.seed, "Root seed");
  app.add_option("--out", globals.out, "Output directory");
  app.add_flag("--json", globals.json, "Machine-readable output");
  app.set_version_flag("--version", std::string("cascade-forge ") + kToolVersion);

  std::string rules_path, words_path;
  bool trace = false;
  auto* apply = app.add_subcommand("apply", "Apply a rule or cascade to words");
  apply->add_option("rules", rules_path, "Rule or cascade JSON")->required();
  apply->add_option("words", words_path, "Word list or pairs file")->required();
  apply->add_flag("--trace", trace, "Add per-rule intermediate columns");

  std::string eval_cascade, eval_pairs;
  auto* eval = app.add_subcommand("eval", "Score a cascade against pairs");
  eval->add_option("cascade", eval_cascade, "Rule or cascade JSON")->required();
  eval->add_option("pairs", eval_pairs, "Pairs file")->required();

  InduceOptions induce_opt;
  auto* induce = app.add_subcommand("induce", "Induce a rule or cascade from pairs");
  induce->add_option("pairs", induce_opt.pairs, "Pairs file")->required();
  induce->add_option("--proposer", induce_opt.proposer, "builtin or exec:<command>");
  induce->add_option("--ensemble", induce_opt.ensemble, "Additional proposer pooled with --proposer");
  induce->add_option("--mode", induce_opt.mode, "single or cascade")->check(CLI::IsMember({"single", "cascade"}));
  induce->add_option("--beams", induce_opt.beams, "Beam width k")->check(CLI::PositiveNumber);
  induce->add_option("--samples", induce_opt.samples, "Samples per beam s (single: 20, cascade: 1)")
      ->check(CLI::PositiveNumber);
  induce->add_option("--max-steps", induce_opt.max_steps, "Maximum cascade length m")->check(CLI::PositiveNumber);
  induce->add_flag("--ites", induce_opt.ites, "Inference-time example selection");
  induce->add_flag("--no-early-stop", induce_opt.no_early_stop, "Keep searching after reward 1");

  auto* generate = app.add_subcommand("generate", "Generate synthetic corpora");
  generate->require_subcommand(1);
  generate->fallthrough();
  std::size_t smp_laws = 100;
  SmpSpec smp;
  auto* gen_smp = generate->add_subcommand("smp", "String-manipulation laws");
  gen_smp->add_option("--laws", smp_laws, "Number of laws");
  gen_smp->add_option("--n", smp.n, "Examples per law (multiple of 10)");
  LingSpec ling;
  auto* gen_ling = generate->add_subcommand("ling", "Feature-driven languages");
  gen_ling->add_option("--langs", ling.num_langs, "Number of languages");
  gen_ling->add_option("--rules", ling.rules_per_lang, "Rules per language");
  gen_ling->add_option("--protoforms", ling.protoforms_per_lang, "Protoforms per language");
  gen_ling->add_option("--min-applicable", ling.min_applicable, "Protoforms each rule must change");
  gen_ling->add_option("--max-attempts", ling.max_attempts, "Rejection-sampling cap per rule");
  MultilawSpec multi;
  std::string pool_path;
  auto* gen_multi = generate->add_subcommand("multilaw", "Multi-law evaluation sets");
  gen_multi->add_option("--sets", multi.sets, "Number of sets");
  gen_multi->add_option("--rules-per-set", multi.rules_per_set, "Rules per set");
  gen_multi->add_option("--words", multi.words_per_set, "Protoforms per set");
  gen_multi->add_option("--pool", pool_path, "Cascade JSON to sample from (default: conformance rules)");

  std::string select_pairs;
  auto* select = app.add_subcommand("select-examples", "Inference-time example selection");
  select->add_option("pairs", select_pairs, "Pairs file")->required();

  auto* inventory = app.add_subcommand("inventory", "Inventory utilities");
  inventory->require_subcommand(1);
  inventory->fallthrough();
  std::string check_path;
  auto* check = inventory->add_subcommand("check", "Load and report on an inventory");
  check->add_option("path", check_path, "Inventory file (default: --inventory or built-in)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!check_path.empty()) globals.inventory_path = check_path;
    Session session(globals);
    if (*apply) return cmd_apply(session, rules_path, words_path, trace);
    if (*eval) return cmd_eval(session, eval_cascade, eval_pairs);
    if (*induce) return cmd_induce(session, induce_opt);
    if (*gen_smp) return cmd_generate_smp(session, smp_laws, smp);
    if (*gen_ling) return cmd_generate_ling(session, ling);
    if (*gen_multi) return cmd_generate_multilaw(session, multi, pool_path);
    if (*select) return cmd_select_examples(session, select_pairs);
    if (*check) return cmd_inventory_check(session);
  } catch (const TokenizationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTokenization;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const RuleError& e) {
    std::cerr << "error: invalid rule: " << e.what() << "\n";
    return kParse;
  } catch (const ProposerError& e) {
    std::cerr << "error: proposer: " << e.what() << "\n";
    return kProposer;
  } catch (const GenerationError& e) {
    std::cerr << "error: generation: " << e.what() << "\n";
    return kGeneration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
