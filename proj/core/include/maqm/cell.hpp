#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace maqm {

enum class MemoryId : std::uint8_t { maqm1 = 0, maqm2 = 1 };

/// One micro-ensemble in a memory grid. Indices are 0-based; x selects the
/// column (X-axis AOD ramp), y the row (Y-axis AOD ramp).
struct CellAddress {
  MemoryId memory = MemoryId::maqm1;
  int x = 0;
  int y = 0;

  auto operator<=>(const CellAddress&) const = default;
};

std::string to_string(MemoryId id);
std::string to_string(const CellAddress& cell);

}  // namespace maqm
