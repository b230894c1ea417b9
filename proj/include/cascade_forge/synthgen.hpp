#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cascade_forge/metrics.hpp"
#include "cascade_forge/phonology.hpp"
#include "cascade_forge/rule.hpp"

namespace cascade_forge {

using Rng = std::mt19937_64;

/// Independent stream for task `index` under `root`.
Rng derive_rng(std::uint64_t root, std::uint64_t index);

struct SynthCase {
  Cascade ground_truth;
  Dataset dataset;
  nlohmann::json provenance;

  /// Throws std::logic_error unless the ground truth maps every source to its
  /// target.
  void verify(const Inventory& inventory) const;
};

// ---------------------------------------------------------------------------
// String-manipulation laws

enum class BoundaryCondition { Start, End, NotStart, NotEnd, None };
enum class SmpOp { Add, Del, Sub };

std::string to_string(BoundaryCondition bc);
std::string to_string(SmpOp op);

struct SmpSpec {
  std::size_t n = 50;
  std::array<double, 3> env_weights{0.7, 0.2, 0.1};
  std::array<double, 5> boundary_weights{1.0 / 16, 1.0 / 16, 1.0 / 16, 1.0 / 16, 3.0 / 4};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on weights that do not sum to 1 or n not
  /// divisible by 10.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SmpLaw {
  Rule rule;
  std::size_t env_size = 0;
  BoundaryCondition boundary = BoundaryCondition::None;
  std::vector<std::string> env_phones;
  std::vector<std::size_t> change_phones;  // indices into env_phones
  std::vector<SmpOp> ops;                  // parallel to change_phones
};

SmpLaw gen_smp_law(const SmpSpec& spec, const Inventory& inventory, Rng& rng);

/// Protoform quotas 3n/5 random, then n/10 each of prefix, suffix, double and
/// triple environment occurrences. Pair ids are "<category>-<i>".
SynthCase gen_smp_examples(const Rule& rule, std::size_t n, const Inventory& inventory, Rng& rng);

/// A random word of Uniform[1,6] phones drawn uniformly from the inventory.
std::vector<std::string> random_phones(const Inventory& inventory, Rng& rng);

/// The phones a rule's environment spells out: the smallest symbol of each
/// phone set, the first inventory phone meeting each feature requirement.
/// Separator, boundary and negated slots contribute nothing.
std::vector<std::string> environment_string(const Rule& rule, const Inventory& inventory);

// ---------------------------------------------------------------------------
// Nonce protoforms

/// CV(C) syllable generator with seven fixed phonotactic profiles.
class NonceGenerator {
 public:
  explicit NonceGenerator(const Inventory& inventory);

  std::size_t profile_count() const noexcept { return profiles_.size(); }
  const std::string& profile_name(std::size_t i) const { return profiles_.at(i).name; }

  /// One to three syllables; always round-trip stable under the inventory.
  TokenizedWord word(std::size_t profile, Rng& rng) const;
  std::vector<std::string> syllable(std::size_t profile, Rng& rng) const;

 private:
  struct Profile {
    std::string name;
    std::vector<std::string> onsets, nuclei, codas;
    double onset_prob, coda_prob;
  };
  const Inventory* inventory_;
  std::vector<Profile> profiles_;
};

// ---------------------------------------------------------------------------
// Feature-driven laws

struct LingSpec {
  std::size_t num_langs = 2000;
  std::size_t rules_per_lang = 3;
  std::size_t protoforms_per_lang = 50;
  std::size_t min_applicable = 3;
  double p_del = 1.0 / 8;
  double p_sub = 1.0 / 8;
  double p_ins = 1.0 / 16;
  std::size_t max_attempts = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Draw counts over the changing-sequence phones of every sampled attempt.
struct LingSlotStats {
  std::size_t slots = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::size_t insert_before = 0;
  std::size_t insert_after = 0;
};

/// Throws GenerationError ("no applicable rule found") when max_attempts
/// candidates all fail to change at least min_applicable protoforms.
Rule gen_ling_rule(const std::vector<TokenizedWord>& protos, const LingSpec& spec, const Inventory& inventory,
                   Rng& rng, LingSlotStats* stats = nullptr);

SynthCase gen_ling_language(const LingSpec& spec, const Inventory& inventory, const NonceGenerator& nonces, Rng& rng,
                            LingSlotStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Multi-law evaluation sets

struct MultilawSpec {
  std::size_t sets = 10;
  std::size_t rules_per_set = 5;
  std::size_t words_per_set = 50;
  std::size_t max_draws = 50000;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Each set subsamples rules_per_set pool rules in pool order and draws
/// protoforms until at least half are unchanged by the sampled cascade.
std::vector<SynthCase> gen_multilaw_evalset(const Cascade& pool, const MultilawSpec& spec, const Inventory& inventory,
                                            const NonceGenerator& nonces, Rng& rng);

}  // namespace cascade_forge
