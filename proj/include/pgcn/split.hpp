#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pgcn/graph.hpp"

namespace pgcn {

enum class SplitProtocol { kPerClass602020, kRandom502525, kFixedFile };

std::string_view split_protocol_name(SplitProtocol p);
SplitProtocol split_protocol_from_name(std::string_view name);

struct Split {
  std::vector<std::int64_t> train, val, test;  // disjoint, ascending
  std::uint64_t seed = 0;
  SplitProtocol protocol = SplitProtocol::kPerClass602020;

  void validate(std::int64_t n) const;  // disjointness, bounds, train nonempty
};

// Stratified 60/20/20 within each class (floor rounding, remainder to train)
// or a global 50/25/25 sample; deterministic in the seed.
Split make_split(const LabelVector& y, SplitProtocol protocol, std::uint64_t seed);

}  // namespace pgcn
