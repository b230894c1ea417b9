#include "cascade_forge/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/resources.hpp"
#include "cascade_forge/rule_json.hpp"

namespace cascade_forge::io {
namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    std::string_view line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

TokenizedWord read_field(std::string_view field, const Inventory& inventory, std::size_t line) {
  const std::string context = "line " + std::to_string(line) + ": ";
  field = trim(field);
  if (field.find(' ') == std::string_view::npos) {
    try {
      return tokenize(field, inventory);
    } catch (const TokenizationError& e) {
      throw TokenizationError(e.word(), e.offset(), context);
    }
  }
  std::vector<std::string> phones;
  std::size_t offset = 0;
  while (offset < field.size()) {
    const auto next = field.find(' ', offset);
    const std::string_view piece = field.substr(offset, next == std::string_view::npos ? next : next - offset);
    if (!piece.empty()) {
      if (!inventory.contains(piece)) throw TokenizationError(std::string(field), offset, context);
      phones.emplace_back(piece);
    }
    if (next == std::string_view::npos) break;
    offset = next + 1;
  }
  return TokenizedWord(std::move(phones));
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

Dataset parse_pairs(std::string_view text, const Inventory& inventory, const std::string& name) {
  Dataset ds;
  ds.name = name;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (blank(line) || trim(line).front() == '%') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected protoform<TAB>reflex");
    }
    std::string_view second = line.substr(tab + 1);
    if (second.find('\t') != std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": more than two columns");
    }
    ExamplePair pair{read_field(line.substr(0, tab), inventory, line_no), read_field(second, inventory, line_no),
                     "L" + std::to_string(line_no)};
    ds.pairs.push_back(std::move(pair));
  }
  if (ds.pairs.empty()) throw ParseError("pairs file contains no pairs");
  return ds;
}

std::vector<std::pair<std::string, TokenizedWord>> parse_word_list(std::string_view text,
                                                                  const Inventory& inventory) {
  std::vector<std::pair<std::string, TokenizedWord>> out;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (blank(line) || trim(line).front() == '%') continue;
    const std::string_view first = line.substr(0, line.find('\t'));
    out.emplace_back(std::string(trim(first)), read_field(first, inventory, line_no));
  }
  return out;
}

std::string format_pairs(const Dataset& dataset) {
  std::string out;
  for (const auto& p : dataset.pairs) {
    out += detokenize(p.source);
    out += '\t';
    out += detokenize(p.target);
    out += '\n';
  }
  return out;
}

std::vector<ConformanceRow> parse_conformance_corpus(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("conformance corpus: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("conformance corpus: expected an array");
  std::vector<ConformanceRow> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string ptr = "/" + std::to_string(i);
    if (!r.is_object() || !r.contains("rule") || !r.contains("examples")) {
      throw ParseError(ptr + ": expected {language, law, rule, examples}");
    }
    ConformanceRow row;
    row.language = r.value("language", "");
    row.law = r.value("law", "");
    row.rule = rule_from_json(r.at("rule"), ptr + "/rule");
    if (row.rule.name.empty()) row.rule.name = row.language + ": " + row.law;
    for (const auto& ex : r.at("examples")) {
      if (!ex.is_array() || ex.size() != 2 || !ex[0].is_string() || !ex[1].is_string()) {
        throw ParseError(ptr + "/examples: expected [input, output] string pairs");
      }
      row.examples.emplace_back(ex[0].get<std::string>(), ex[1].get<std::string>());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<ConformanceRow>& builtin_conformance_corpus() {
  static const std::vector<ConformanceRow> rows = parse_conformance_corpus(resources::conformance_corpus_source());
  return rows;
}

Cascade conformance_cascade() {
  Cascade out;
  for (const auto& row : builtin_conformance_corpus()) out.push_back(row.rule);
  return out;
}

}  // namespace cascade_forge::io
