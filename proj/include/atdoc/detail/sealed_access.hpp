#pragma once

#include "atdoc/data.hpp"

namespace atdoc {

/// The one gate to sealed evaluation labels. Included only by the data
/// module (split construction, CSV output) and by evalkit; training code
/// has no path to these values.
struct SealedAccess {
  static const std::vector<int>& labels(const SealedLabels& sealed) { return sealed.labels_; }
};

}  // namespace atdoc
