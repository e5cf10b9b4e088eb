#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "varlm/corpus.hpp"

namespace varlm {

/// A generated corpus together with the family -> group mapping it is meant for.
struct Fixture {
  std::vector<Document> documents;
  GroupMapping mapping;
};

/// "abab..." prose documents (one family, one group "ABAB"), total_chars split evenly.
Fixture make_alternating_fixture(std::size_t total_chars = 4000, std::size_t documents = 20);

/// Rich variety R (20 letters, large flat lexicon) and impoverished variety S
/// (8-letter subset, small peaked lexicon drawn from R's). Groups "R" and "S".
Fixture make_rich_simple_fixture(std::uint64_t seed, std::size_t docs_per_group = 12,
                                 std::size_t chars_per_doc = 400);

/// Nested varieties A > B > C: each alphabet and lexicon contains the next. Groups "A", "B", "C".
Fixture make_nested_fixture(std::uint64_t seed, std::size_t docs_per_group = 12,
                            std::size_t chars_per_doc = 400);

/// Four groups named like the default period mapping, built from families of
/// that mapping, with the first group the most heterogeneous.
Fixture make_period_fixture(std::uint64_t seed, std::size_t docs_per_group = 8,
                            std::size_t chars_per_doc = 400);

/// Dispatch by name: alternating, rich-simple, nested, periods.
Fixture make_fixture(const std::string& kind, std::uint64_t seed);

}  // namespace varlm
