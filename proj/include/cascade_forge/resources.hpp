#pragma once

#include <string_view>

namespace cascade_forge::resources {

// Text of data/default_inventory.tsv, compiled into the library.
std::string_view default_inventory_source();

// Text of data/conformance_rules.json, compiled into the library.
std::string_view conformance_corpus_source();

}  // namespace cascade_forge::resources
