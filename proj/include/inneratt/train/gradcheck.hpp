#ifndef INNERATT_TRAIN_GRADCHECK_HPP_
#define INNERATT_TRAIN_GRADCHECK_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace inneratt::train {

struct GradcheckEntry {
  std::string graph;  // which loss
  std::string name;   // parameter array
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed(double tolerance = 1e-4) const { return max_rel_error < tolerance; }
};

// Compares tape gradients with central differences for the learned-attention
// critic regression loss (every entry at reduced width, a sample at the
// default width) and for both policy losses (every entry).
GradcheckReport run_gradcheck(std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_GRADCHECK_HPP_
