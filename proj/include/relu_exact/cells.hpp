#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace relu_exact {

// Bit i of a cell mask is set when row i is on the positive side
// (constrained active). Bits are packed so that comparing mask words
// numerically, word 0 first, equals lexicographic order over
// (bit 0, bit 1, ...) with false < true.
inline int mask_words(int rows) { return (rows + 63) / 64; }

inline void mask_set(std::vector<std::uint64_t>& mask, int i) {
  mask[i >> 6] |= std::uint64_t{1} << (63 - (i & 63));
}

inline bool mask_test(const std::vector<std::uint64_t>& mask, int i) {
  return (mask[i >> 6] >> (63 - (i & 63))) & 1;
}

struct CellEnumResult {
  bool budget_exceeded = false;
  int rows = 0;
  // Sign vectors of all full-dimensional cones of the central arrangement
  // {v : <v, z_i> = 0}, sorted lexicographically.
  std::vector<std::vector<std::uint64_t>> cells;
};

// Enumerates realizable strict sign vectors of the rows of Z (rows x d).
// Rows listed in forced_inactive (when nonempty, one flag per row) only
// ever appear on the nonpositive side; cells whose mask would set them are
// not produced. Zero rows always carry bit 0.
CellEnumResult enumerate_activation_cells(
    const Eigen::MatrixXd& Z, const std::vector<std::uint8_t>& forced_inactive,
    std::size_t max_cells, std::size_t max_nodes = 50'000'000);

}  // namespace relu_exact
