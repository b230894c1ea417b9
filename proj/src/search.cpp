#include "cascade_forge/search.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "cascade_forge/rule_json.hpp"

namespace cascade_forge {
namespace {

struct Ranked {
  Hypothesis hyp;
  std::string key;
};

bool ranked_before(const Ranked& a, const Ranked& b) {
  if (a.hyp.reward != b.hyp.reward) return a.hyp.reward > b.hyp.reward;
  if (a.hyp.cascade.size() != b.hyp.cascade.size()) return a.hyp.cascade.size() < b.hyp.cascade.size();
  return a.key < b.key;
}

std::vector<WordPair> proposer_view(const std::vector<TokenizedWord>& forms, const Dataset& dataset, bool ites) {
  std::vector<ExamplePair> pairs;
  pairs.reserve(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i) pairs.push_back({forms[i], dataset.pairs[i].target, dataset.pairs[i].id});
  if (ites) pairs = select_examples_ites(pairs).pairs;
  std::vector<WordPair> out;
  out.reserve(pairs.size());
  for (auto& p : pairs) out.push_back({std::move(p.source), std::move(p.target)});
  return out;
}

double reward_of(const std::vector<TokenizedWord>& forms, const Dataset& dataset, long long dist_source_target) {
  long long d = 0;
  for (std::size_t i = 0; i < forms.size(); ++i) d += static_cast<long long>(edit_distance(forms[i], dataset.pairs[i].target));
  return reward_from_distances(dist_source_target, d);
}

}  // namespace

void SearchConfig::validate() const {
  if (k < 1 || s < 1 || m < 1) throw std::invalid_argument("search needs k, s, m >= 1");
}

ItesSelection select_examples_ites(const std::vector<ExamplePair>& pairs) {
  ItesSelection out;
  for (const auto& p : pairs) {
    if (!p.changed()) continue;
    const auto& src = p.source.phones();
    const auto add = [&](std::size_t i) {
      if (i < src.size()) out.delta_sl.insert(src[i]);
    };
    for (const auto& op : edit_script(src, p.target.phones())) {
      // Insertions sit in the gap before phone `position`.
      const std::size_t lo = op.position;
      const std::size_t hi = op.kind == EditKind::Insert ? op.position : op.position + 1;
      if (lo > 0) add(lo - 1);
      for (std::size_t i = lo; i <= hi && i < src.size(); ++i) add(i);
    }
  }
  for (const auto& p : pairs) {
    if (p.changed()) {
      out.pairs.push_back(p);
      continue;
    }
    const auto& src = p.source.phones();
    if (std::any_of(src.begin(), src.end(), [&](const std::string& s) { return out.delta_sl.count(s) > 0; })) {
      out.pairs.push_back(p);
    }
  }
  return out;
}

std::vector<RankedRule> induce_single_law(Proposer& proposer, const Dataset& dataset, const Inventory& inventory,
                                          std::size_t s, bool use_ites, Diagnostics* diagnostics) {
  dataset.validate();
  ProposalRequest req;
  req.num_samples = s;
  req.examples = proposer_view(dataset.sources(), dataset, use_ites);
  std::vector<RankedRule> out;
  if (req.examples.empty()) {
    if (diagnostics) diagnostics->push_back("no examples left after selection");
    return out;
  }
  Proposal proposal = proposer.propose(req);
  if (diagnostics) diagnostics->insert(diagnostics->end(), proposal.diagnostics.begin(), proposal.diagnostics.end());

  std::vector<std::pair<RankedRule, std::string>> scored;
  for (auto& rule : proposal.rules) {
    RewardReport report = evaluate({rule}, dataset, inventory);
    std::string key = serialize_rule(rule);
    scored.push_back({RankedRule{std::move(rule), std::move(report)}, std::move(key)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first.report.reward != b.first.report.reward) return a.first.report.reward > b.first.report.reward;
    if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
    return a.second < b.second;
  });
  for (auto& [ranked, key] : scored) out.push_back(std::move(ranked));
  return out;
}

std::vector<Hypothesis> beam_search_cascade(Proposer& proposer, const Dataset& dataset, const Inventory& inventory,
                                            const SearchConfig& config, const StepObserver& observer) {
  config.validate();
  dataset.validate();
  long long dist_source_target = 0;
  for (const auto& p : dataset.pairs) dist_source_target += static_cast<long long>(edit_distance(p.source, p.target));

  Hypothesis root;
  root.current_forms = dataset.sources();
  root.reward = reward_of(root.current_forms, dataset, dist_source_target);
  std::vector<Hypothesis> beams{root};

  const auto perfect = [](const std::vector<Hypothesis>& bs) {
    return std::any_of(bs.begin(), bs.end(), [](const Hypothesis& h) { return h.reward == 1.0; });
  };
  if (config.early_stop_on_perfect && perfect(beams)) return beams;

  for (std::size_t step = 1; step <= config.m; ++step) {
    StepRecord record;
    record.step = static_cast<int>(step);
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> count_order;

    std::vector<Ranked> pool;
    for (const auto& parent : beams) pool.push_back({parent, serialize_cascade(parent.cascade)});

    for (const auto& parent : beams) {
      ProposalRequest req;
      req.num_samples = config.s;
      req.step = static_cast<int>(step - 1);
      req.examples = proposer_view(parent.current_forms, dataset, config.ites);
      const bool any_changed = std::any_of(req.examples.begin(), req.examples.end(),
                                           [](const WordPair& w) { return w.source != w.target; });
      if (!any_changed) continue;
      Proposal proposal = proposer.propose(req);
      for (auto& d : proposal.diagnostics) record.diagnostics.push_back(std::move(d));
      for (const auto& [name, n] : proposal.member_counts) {
        if (!counts.count(name)) count_order.push_back(name);
        counts[name] += n;
      }
      for (std::size_t i = 0; i < proposal.rules.size(); ++i) {
        Hypothesis child;
        child.cascade = parent.cascade;
        child.cascade.push_back(proposal.rules[i]);
        child.current_forms.reserve(parent.current_forms.size());
        for (const auto& w : parent.current_forms) child.current_forms.push_back(apply_rule(proposal.rules[i], w, inventory));
        child.reward = reward_of(child.current_forms, dataset, dist_source_target);
        child.step = static_cast<int>(step);
        std::string key = serialize_cascade(child.cascade);
        pool.push_back({std::move(child), std::move(key)});
        ++record.expansions;
      }
    }

    std::stable_sort(pool.begin(), pool.end(), ranked_before);
    std::set<std::vector<TokenizedWord>> seen;
    beams.clear();
    for (auto& r : pool) {
      if (beams.size() == config.k) break;
      if (!seen.insert(r.hyp.current_forms).second) continue;
      beams.push_back(std::move(r.hyp));
    }

    for (const auto& name : count_order) record.member_counts.emplace_back(name, counts[name]);
    record.beams = beams;
    if (observer) observer(record);
    if (config.early_stop_on_perfect && perfect(beams)) break;
  }
  return beams;
}

bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  return ranked_before({a, serialize_cascade(a.cascade)}, {b, serialize_cascade(b.cascade)});
}

const Hypothesis& pick_best(const std::vector<Hypothesis>& hypotheses) {
  if (hypotheses.empty()) throw std::invalid_argument("pick_best over zero hypotheses");
  const Hypothesis* best = &hypotheses.front();
  for (const auto& h : hypotheses) {
    if (hypothesis_before(h, *best)) best = &h;
  }
  return *best;
}

}  // namespace cascade_forge
