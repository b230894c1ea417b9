#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cascade_forge/metrics.hpp"
#include "cascade_forge/phonology.hpp"
#include "cascade_forge/rule.hpp"

namespace cascade_forge::io {

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of `content`.
std::string sha256_hex(std::string_view content);

/// Pairs file: UTF-8, `protoform<TAB>reflex` per line, `%` starts a comment
/// line. A field that contains spaces is read as space-separated phones
/// instead of being segmented greedily. Pair ids are "L<line number>".
/// Throws ParseError or TokenizationError (with the line number).
Dataset parse_pairs(std::string_view text, const Inventory& inventory, const std::string& name = "");

/// One word per line (extra tab-separated columns are ignored).
std::vector<std::pair<std::string, TokenizedWord>> parse_word_list(std::string_view text,
                                                                  const Inventory& inventory);

/// Writes `source<TAB>target` with phones concatenated.
std::string format_pairs(const Dataset& dataset);

/// One row of the shipped sound-law conformance corpus.
struct ConformanceRow {
  std::string language;
  std::string law;
  Rule rule;
  std::vector<std::pair<std::string, std::string>> examples;  // surface input -> expected output
};

std::vector<ConformanceRow> parse_conformance_corpus(std::string_view text);
const std::vector<ConformanceRow>& builtin_conformance_corpus();

/// The corpus rules in file order, usable as a rule pool.
Cascade conformance_cascade();

}  // namespace cascade_forge::io
