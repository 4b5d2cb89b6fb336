#pragma once

#include <string>

namespace maqm {

/// printf("%.6g") with negative zero folded to "0"; used for every number that
/// lands in golden files.
std::string format_sig6(double value);

}  // namespace maqm
