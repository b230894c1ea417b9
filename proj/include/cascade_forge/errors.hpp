#pragma once

#include <stdexcept>
#include <string>

namespace cascade_forge {

// Input that does not parse: inventory files, rule JSON, pairs files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A surface string that cannot be segmented into inventory phones.
class TokenizationError : public std::runtime_error {
 public:
  TokenizationError(const std::string& word, std::size_t offset, const std::string& context = "")
      : std::runtime_error(context + "cannot segment \"" + word + "\" at byte offset " +
                           std::to_string(offset)),
        word_(word),
        offset_(offset) {}

  const std::string& word() const noexcept { return word_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string word_;
  std::size_t offset_;
};

// A rule whose structure violates the engine's invariants.
class RuleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A proposer that cannot be started at all.
class ProposerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A generator that ran out of its rejection-sampling budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cascade_forge
