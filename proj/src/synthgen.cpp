#include "cascade_forge/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cascade_forge/errors.hpp"

namespace cascade_forge {
namespace {

constexpr std::size_t kWordRetries = 1000;

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

const std::string& random_symbol(const Inventory& inventory, Rng& rng) {
  return inventory.phones()[pick(rng, inventory.size())].symbol;
}

std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + pick(rng, n - i)]);
  idx.resize(k);
  return idx;
}

bool stable(const std::vector<std::string>& phones, const Inventory& inventory) {
  return is_round_trip_stable(TokenizedWord(phones), inventory);
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

double weight_sum(const auto& weights) { return std::accumulate(weights.begin(), weights.end(), 0.0); }

std::size_t gaussian_length(Rng& rng) {
  return static_cast<std::size_t>(std::llround(std::fabs(std::normal_distribution<double>(0.0, 1.0)(rng)))) + 1;
}

bool anchored_start(const Rule& rule) { return rule.predicates.front().is<predicates::WordStart>(); }
bool anchored_end(const Rule& rule) { return rule.predicates.back().is<predicates::WordEnd>(); }

}  // namespace

Rng derive_rng(std::uint64_t root, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

void SynthCase::verify(const Inventory& inventory) const {
  for (const auto& p : dataset.pairs) {
    if (run_cascade(ground_truth, p.source, inventory) != p.target) {
      throw std::logic_error("synthetic case " + dataset.name + ": ground truth does not reproduce pair " + p.id);
    }
  }
}

std::string to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::Start: return "S";
    case BoundaryCondition::End: return "E";
    case BoundaryCondition::NotStart: return "NS";
    case BoundaryCondition::NotEnd: return "NE";
    case BoundaryCondition::None: break;
  }
  return "none";
}

std::string to_string(SmpOp op) {
  switch (op) {
    case SmpOp::Add: return "add";
    case SmpOp::Del: return "del";
    case SmpOp::Sub: break;
  }
  return "sub";
}

// ---------------------------------------------------------------------------

void SmpSpec::validate() const {
  if (n == 0 || n % 10 != 0) throw std::invalid_argument("SMP example count must be a positive multiple of 10");
  if (std::fabs(weight_sum(env_weights) - 1.0) > 1e-9) throw std::invalid_argument("environment weights must sum to 1");
  if (std::fabs(weight_sum(boundary_weights) - 1.0) > 1e-9) throw std::invalid_argument("boundary weights must sum to 1");
}

nlohmann::json SmpSpec::to_json() const {
  return {{"n", n}, {"env_weights", env_weights}, {"boundary_weights", boundary_weights}, {"seed", seed}};
}

SmpLaw gen_smp_law(const SmpSpec& spec, const Inventory& inventory, Rng& rng) {
  spec.validate();
  if (inventory.size() < 3) throw GenerationError("SMP laws need at least three phones");
  SmpLaw law;
  law.env_size = 1 + std::discrete_distribution<std::size_t>(spec.env_weights.begin(), spec.env_weights.end())(rng);
  law.boundary = static_cast<BoundaryCondition>(
      std::discrete_distribution<int>(spec.boundary_weights.begin(), spec.boundary_weights.end())(rng));

  for (std::size_t tries = 0;; ++tries) {
    law.env_phones.clear();
    for (std::size_t i : sample_distinct(rng, inventory.size(), law.env_size)) {
      law.env_phones.push_back(inventory.phones()[i].symbol);
    }
    if (stable(law.env_phones, inventory)) break;
    if (tries == kWordRetries) throw GenerationError("no segmentable SMP environment found");
  }

  const std::size_t nc = std::uniform_int_distribution<std::size_t>(1, law.env_size)(rng);
  law.change_phones = sample_distinct(rng, law.env_size, nc);
  std::sort(law.change_phones.begin(), law.change_phones.end());
  for (std::size_t i = 0; i < nc; ++i) law.ops.push_back(static_cast<SmpOp>(pick(rng, 3)));

  Rule& rule = law.rule;
  std::size_t offset = 0;
  if (law.boundary == BoundaryCondition::Start || law.boundary == BoundaryCondition::NotStart) {
    rule.predicates.push_back(law.boundary == BoundaryCondition::Start ? Predicate::word_start()
                                                                       : Predicate::negate(Predicate::word_start()));
    rule.predicates.push_back(Predicate::nothing());
    offset = 2;
  }
  for (std::size_t i = 0; i < law.env_size; ++i) {
    if (i) rule.predicates.push_back(Predicate::nothing());
    rule.predicates.push_back(Predicate::phones({law.env_phones[i]}));
  }
  const bool trailing = law.boundary == BoundaryCondition::End || law.boundary == BoundaryCondition::NotEnd;
  if (trailing) {
    rule.predicates.push_back(Predicate::nothing());
    rule.predicates.push_back(law.boundary == BoundaryCondition::End ? Predicate::word_end()
                                                                     : Predicate::negate(Predicate::word_end()));
  }

  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t i = law.change_phones[c];
    const std::size_t phone_slot = offset + 2 * i;
    switch (law.ops[c]) {
      case SmpOp::Sub: {
        std::string to;
        do {
          to = random_symbol(inventory, rng);
        } while (to == law.env_phones[i]);
        mappings::Substitute sub;
        sub.map[law.env_phones[i]] = {to};
        rule.change_pos.push_back(phone_slot);
        rule.mappings.push_back(sub);
        break;
      }
      case SmpOp::Del:
        rule.change_pos.push_back(phone_slot);
        rule.mappings.push_back(mappings::Delete{});
        break;
      case SmpOp::Add: {
        const std::size_t slot = phone_slot + 1;
        if (slot == rule.predicates.size()) rule.predicates.push_back(Predicate::nothing());
        rule.change_pos.push_back(slot);
        rule.mappings.push_back(mappings::Insert{{random_symbol(inventory, rng)}});
        break;
      }
    }
  }
  rule.validate(inventory);
  return law;
}

std::vector<std::string> random_phones(const Inventory& inventory, Rng& rng) {
  const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(random_symbol(inventory, rng));
  return out;
}

std::vector<std::string> environment_string(const Rule& rule, const Inventory& inventory) {
  std::vector<std::string> out;
  for (const auto& pred : rule.predicates) {
    if (const auto* set = std::get_if<predicates::PhoneSet>(&pred.value)) {
      out.push_back(*set->phones.begin());
    } else if (const auto* req = std::get_if<predicates::FeatureReq>(&pred.value)) {
      for (const auto& phone : inventory.phones()) {
        if (feature_match(phone, req->reqs)) {
          out.push_back(phone.symbol);
          break;
        }
      }
    }
  }
  return out;
}

SynthCase gen_smp_examples(const Rule& rule, std::size_t n, const Inventory& inventory, Rng& rng) {
  if (n == 0 || n % 10 != 0) throw std::invalid_argument("SMP example count must be a positive multiple of 10");
  const auto env = environment_string(rule, inventory);
  struct Quota {
    const char* name;
    std::size_t count;
    std::size_t occurrences;  // 0 means a fully random word
    bool lead;                // environment first (prefix) or last (suffix)
  };
  const Quota quotas[] = {{"random", 3 * n / 5, 0, false}, {"prefix", n / 10, 1, true},
                          {"suffix", n / 10, 1, false},    {"double", n / 10, 2, true},
                          {"triple", n / 10, 3, true}};

  SynthCase out;
  out.ground_truth = {rule};
  out.provenance = {{"generator", "smp"}, {"n", n}};
  for (const auto& q : quotas) {
    for (std::size_t i = 0; i < q.count; ++i) {
      for (std::size_t tries = 0;; ++tries) {
        std::vector<std::string> word;
        if (q.occurrences == 0 || env.empty()) {
          word = random_phones(inventory, rng);
        } else if (q.occurrences == 1 && !q.lead) {
          word = random_phones(inventory, rng);
          append(word, env);
        } else {
          word = env;
          for (std::size_t k = 1; k < q.occurrences; ++k) {
            append(word, random_phones(inventory, rng));
            append(word, env);
          }
          if (q.occurrences == 1) append(word, random_phones(inventory, rng));
        }
        TokenizedWord source(word);
        TokenizedWord target = apply_rule(rule, source, inventory);
        if (is_round_trip_stable(source, inventory) && is_round_trip_stable(target, inventory)) {
          out.dataset.pairs.push_back({std::move(source), std::move(target), std::string(q.name) + "-" + std::to_string(i)});
          break;
        }
        if (tries == kWordRetries) throw GenerationError("no segmentable SMP protoform found");
      }
    }
  }
  out.verify(inventory);
  return out;
}

// ---------------------------------------------------------------------------

NonceGenerator::NonceGenerator(const Inventory& inventory) : inventory_(&inventory) {
  const auto split = [](std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
      const auto j = s.find(' ', i);
      out.emplace_back(s.substr(i, j == std::string_view::npos ? j : j - i));
      if (j == std::string_view::npos) break;
      i = j + 1;
    }
    return out;
  };
  struct Raw {
    const char* name;
    const char* onsets;
    const char* nuclei;
    const char* codas;
    double onset_prob, coda_prob;
  };
  const Raw raw[] = {
      {"nld", "p b t d k x f v s z m n l r j ʋ h", "a aː e eː i o oː u y ɪ ɛ ɔ ʏ ə", "p t k f s x m n ŋ l r", 0.85, 0.5},
      {"fra", "p b t d k g f v s z ʃ ʒ m n ɲ l ʁ j w ɥ", "a e ɛ i o ɔ u y ø œ ə ɑ ã õ ẽ", "ʁ l s t k m n", 0.9, 0.3},
      {"deu", "p b t d k g f v s z ʃ m n l r j h ts pf", "a aː e eː i iː o oː u uː ɪ ɛ ɔ ʊ y ø ə",
       "p t k f s ʃ x ç m n ŋ l r", 0.85, 0.55},
      {"ita", "p b t d k g f v s ts dz tʃ dʒ m n ɲ l r ʎ j w", "a e ɛ i o ɔ u", "n l r s", 0.9, 0.15},
      {"pol", "p b t d k g f v s z ʃ ʒ ɕ ʑ x m n ɲ l r j w ts dz tʃ dʒ tɕ dʑ", "a ɛ i ɨ ɔ u",
       "p t k f s ʃ x m n l r j w", 0.9, 0.4},
      {"spa", "p b t d k g f θ s x tʃ m n ɲ l r ɾ ʝ w β ð ɣ", "a e i o u", "n s l r ɾ d θ", 0.85, 0.3},
      {"vie", "p t d k b m n ɲ ŋ f v s z x ɣ h l c ʈ j w tʰ", "a ɛ e i ɨ ɯ ɔ o u ə ɤ", "p t k m n ŋ j w", 0.9, 0.5},
  };
  std::vector<std::string> all;
  for (const auto& p : inventory.phones()) all.push_back(p.symbol);
  const auto keep = [&](const char* list) {
    std::vector<std::string> out;
    for (auto& s : split(list)) {
      if (inventory.contains(s)) out.push_back(std::move(s));
    }
    return out.empty() ? all : out;
  };
  for (const auto& r : raw) {
    profiles_.push_back({r.name, keep(r.onsets), keep(r.nuclei), keep(r.codas), r.onset_prob, r.coda_prob});
  }
}

std::vector<std::string> NonceGenerator::syllable(std::size_t profile, Rng& rng) const {
  const Profile& p = profiles_.at(profile);
  std::vector<std::string> out;
  if (coin(rng, p.onset_prob)) out.push_back(p.onsets[pick(rng, p.onsets.size())]);
  out.push_back(p.nuclei[pick(rng, p.nuclei.size())]);
  if (coin(rng, p.coda_prob)) out.push_back(p.codas[pick(rng, p.codas.size())]);
  return out;
}

TokenizedWord NonceGenerator::word(std::size_t profile, Rng& rng) const {
  for (std::size_t tries = 0; tries <= kWordRetries; ++tries) {
    const std::size_t syllables = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    std::vector<std::string> phones;
    for (std::size_t i = 0; i < syllables; ++i) append(phones, syllable(profile, rng));
    if (stable(phones, *inventory_)) return TokenizedWord(std::move(phones));
  }
  throw GenerationError("no segmentable nonce word found for profile " + profile_name(profile));
}

// ---------------------------------------------------------------------------

void LingSpec::validate() const {
  for (double p : {p_del, p_sub, p_ins}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("LING probabilities must lie in [0, 1]");
  }
  if (min_applicable > protoforms_per_lang) throw std::invalid_argument("min_applicable exceeds protoforms_per_lang");
  if (protoforms_per_lang == 0 || rules_per_lang == 0) throw std::invalid_argument("LING spec needs words and rules");
  if (max_attempts == 0) throw std::invalid_argument("LING spec needs max_attempts >= 1");
}

nlohmann::json LingSpec::to_json() const {
  return {{"num_langs", num_langs},         {"rules_per_lang", rules_per_lang},
          {"protoforms_per_lang", protoforms_per_lang}, {"min_applicable", min_applicable},
          {"p_del", p_del},                 {"p_sub", p_sub},
          {"p_ins", p_ins},                 {"max_attempts", max_attempts},
          {"seed", seed}};
}

Rule gen_ling_rule(const std::vector<TokenizedWord>& protos, const LingSpec& spec, const Inventory& inventory,
                   Rng& rng, LingSlotStats* stats) {
  spec.validate();
  if (inventory.feature_count() == 0) throw GenerationError("LING rules need feature vectors");
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const std::size_t pre = gaussian_length(rng), seq = gaussian_length(rng), post = gaussian_length(rng);
    const std::size_t len = pre + seq + post;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < protos.size(); ++i) {
      if (protos[i].phone_count() >= len) eligible.push_back(i);
    }
    std::vector<FeatureRequirements> reqs(len);
    const TokenizedWord* anchor = eligible.empty() ? nullptr : &protos[eligible[pick(rng, eligible.size())]];
    const std::size_t start = anchor ? pick(rng, anchor->phone_count() - len + 1) : 0;
    for (std::size_t p = 0; p < len; ++p) {
      const Phone* phone = anchor ? inventory.find(anchor->phones()[start + p]) : nullptr;
      for (std::size_t f = 0; f < inventory.feature_count(); ++f) {
        const double z = gauss(rng);
        if (z > -1.0 && z < 1.0) continue;
        if (!phone) {
          reqs[p][f] = z >= 1.0;
        } else if (phone->features[f] != -1) {
          reqs[p][f] = phone->features[f] == 1;
        }
      }
    }

    std::map<std::size_t, MappingFn> changes;
    const auto insert_at = [&](std::size_t slot, const std::string& phone) {
      auto it = changes.find(slot);
      if (it == changes.end()) {
        changes.emplace(slot, mappings::Insert{{phone}});
      } else {
        std::get<mappings::Insert>(it->second).phones.push_back(phone);
      }
    };
    std::vector<std::pair<std::size_t, std::string>> before, after;
    for (std::size_t j = 0; j < seq; ++j) {
      const std::size_t pos = pre + j;
      const bool del = coin(rng, spec.p_del);
      const bool sub = coin(rng, spec.p_sub);
      FeatureRequirements target;
      if (sub) {
        for (std::size_t f = 0; f < inventory.feature_count(); ++f) {
          const double z = gauss(rng);
          if (z <= -1.0) target[f] = false;
          if (z >= 1.0) target[f] = true;
        }
      }
      const bool ins_before = coin(rng, spec.p_ins);
      const bool ins_after = coin(rng, spec.p_ins);
      if (stats) {
        ++stats->slots;
        stats->deletions += del;
        stats->substitutions += sub;
        stats->insert_before += ins_before;
        stats->insert_after += ins_after;
      }
      if (ins_before) before.emplace_back(2 * pos - 1, random_symbol(inventory, rng));
      if (ins_after) after.emplace_back(2 * pos + 1, random_symbol(inventory, rng));
      if (del) {
        changes.emplace(2 * pos, mappings::Delete{});
      } else if (sub && !target.empty()) {
        mappings::Substitute map;
        for (const auto& q : inventory.phones()) {
          if (!feature_match(q, reqs[pos])) continue;
          const Phone& r = realize_feature_change(q, target, inventory);
          if (r.symbol != q.symbol) map.map[q.symbol] = {r.symbol};
        }
        if (!map.map.empty()) changes.emplace(2 * pos, std::move(map));
      }
    }
    // Slot 2*pos+1 after phone j is also the slot before phone j+1.
    std::vector<std::pair<std::size_t, std::string>> inserts;
    std::size_t bi = 0, ai = 0;
    while (bi < before.size() || ai < after.size()) {
      if (ai < after.size() && (bi == before.size() || after[ai].first <= before[bi].first)) {
        inserts.push_back(after[ai++]);
      } else {
        inserts.push_back(before[bi++]);
      }
    }
    for (const auto& [slot, phone] : inserts) insert_at(slot, phone);
    if (changes.empty()) continue;

    Rule rule;
    for (std::size_t p = 0; p < len; ++p) {
      if (p) rule.predicates.push_back(Predicate::nothing());
      rule.predicates.push_back(Predicate::features(reqs[p]));
    }
    for (auto& [slot, fn] : changes) {
      rule.change_pos.push_back(slot);
      rule.mappings.push_back(std::move(fn));
    }
    rule.validate(inventory);

    std::size_t changed = 0;
    bool ok = true;
    for (const auto& w : protos) {
      const TokenizedWord out = apply_rule(rule, w, inventory);
      if (out == w) continue;
      ++changed;
      if (!is_round_trip_stable(out, inventory)) {
        ok = false;
        break;
      }
    }
    if (ok && changed >= spec.min_applicable) return rule;
  }
  throw GenerationError("no applicable rule found after " + std::to_string(spec.max_attempts) + " attempts");
}

SynthCase gen_ling_language(const LingSpec& spec, const Inventory& inventory, const NonceGenerator& nonces, Rng& rng,
                            LingSlotStats* stats) {
  spec.validate();
  const std::size_t profile = pick(rng, nonces.profile_count());
  std::vector<TokenizedWord> protos;
  std::set<TokenizedWord> seen;
  for (std::size_t tries = 0; protos.size() < spec.protoforms_per_lang; ++tries) {
    TokenizedWord w = nonces.word(profile, rng);
    if (seen.insert(w).second || tries > 50 * spec.protoforms_per_lang) protos.push_back(std::move(w));
  }

  SynthCase out;
  std::vector<TokenizedWord> current = protos;
  for (std::size_t k = 0; k < spec.rules_per_lang; ++k) {
    Rule rule = gen_ling_rule(current, spec, inventory, rng, stats);
    rule.name = "ling-" + std::to_string(k + 1);
    for (auto& w : current) w = apply_rule(rule, w, inventory);
    out.ground_truth.push_back(std::move(rule));
  }
  for (std::size_t i = 0; i < protos.size(); ++i) {
    out.dataset.pairs.push_back({protos[i], current[i], "w" + std::to_string(i)});
  }
  out.dataset.language = nonces.profile_name(profile);
  out.provenance = {{"generator", "ling"}, {"profile", nonces.profile_name(profile)}};
  out.verify(inventory);
  return out;
}

// ---------------------------------------------------------------------------

void MultilawSpec::validate() const {
  if (sets == 0 || rules_per_set == 0 || words_per_set == 0) {
    throw std::invalid_argument("multilaw spec needs sets, rules and words >= 1");
  }
}

nlohmann::json MultilawSpec::to_json() const {
  return {{"sets", sets},
          {"rules_per_set", rules_per_set},
          {"words_per_set", words_per_set},
          {"max_draws", max_draws},
          {"seed", seed}};
}

std::vector<SynthCase> gen_multilaw_evalset(const Cascade& pool, const MultilawSpec& spec, const Inventory& inventory,
                                            const NonceGenerator& nonces, Rng& rng) {
  spec.validate();
  if (pool.size() < spec.rules_per_set) {
    throw std::invalid_argument("rule pool has " + std::to_string(pool.size()) + " rules, fewer than " +
                                std::to_string(spec.rules_per_set));
  }
  std::vector<SynthCase> out;
  for (std::size_t set = 0; set < spec.sets; ++set) {
    auto picked = sample_distinct(rng, pool.size(), spec.rules_per_set);
    std::sort(picked.begin(), picked.end());
    Cascade cascade;
    for (std::size_t i : picked) cascade.push_back(pool[i]);
    const std::size_t profile = pick(rng, nonces.profile_count());

    const std::size_t want_unchanged = (spec.words_per_set + 1) / 2;
    const std::size_t want_changed = spec.words_per_set - want_unchanged;
    std::size_t have_unchanged = 0, have_changed = 0;
    std::set<TokenizedWord> seen;
    SynthCase c;
    std::size_t draws = 0;
    for (; draws < spec.max_draws && have_unchanged + have_changed < spec.words_per_set; ++draws) {
      std::vector<std::string> phones;
      if (draws % 2 == 0) {
        const Rule& rule = cascade[pick(rng, cascade.size())];
        if (!anchored_start(rule)) {
          for (std::size_t k = pick(rng, 3); k > 0; --k) append(phones, nonces.syllable(profile, rng));
        }
        append(phones, environment_string(rule, inventory));
        if (!anchored_end(rule)) {
          for (std::size_t k = pick(rng, 3); k > 0; --k) append(phones, nonces.syllable(profile, rng));
        }
      } else {
        phones = nonces.word(profile, rng).phones();
      }
      if (phones.empty()) continue;
      TokenizedWord source(std::move(phones));
      if (!is_round_trip_stable(source, inventory) || seen.count(source)) continue;
      TokenizedWord target = run_cascade(cascade, source, inventory);
      if (!is_round_trip_stable(target, inventory)) continue;
      const bool changed = source != target;
      if (changed ? have_changed >= want_changed : have_unchanged >= want_unchanged) continue;
      (changed ? have_changed : have_unchanged) += 1;
      seen.insert(source);
      c.dataset.pairs.push_back({std::move(source), std::move(target), "w" + std::to_string(c.dataset.pairs.size())});
    }
    if (have_unchanged + have_changed < spec.words_per_set) {
      throw GenerationError("multilaw set " + std::to_string(set) + ": draw budget of " +
                            std::to_string(spec.max_draws) + " exhausted with " + std::to_string(have_changed) +
                            "/" + std::to_string(want_changed) + " changed and " + std::to_string(have_unchanged) +
                            "/" + std::to_string(want_unchanged) + " unchanged words");
    }
    c.ground_truth = std::move(cascade);
    c.dataset.name = "set_" + std::to_string(set);
    c.dataset.language = nonces.profile_name(profile);
    c.provenance = {{"generator", "multilaw"}, {"set", set}, {"pool_indices", picked}, {"draws", draws}};
    c.verify(inventory);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cascade_forge
