#pragma once

#include <cstdint>
#include <vector>

#include "rsfl/errors.hpp"

namespace rsfl {

enum class CellKind : uint8_t { Message, Randomness };

struct Cell {
  CellKind kind = CellKind::Randomness;
  uint32_t index = 0;  // position within the instance's message or randomness vector

  bool operator==(const Cell& o) const { return kind == o.kind && index == o.index; }
};

// Symmetric D x D fill pattern behind one coded instance. Mirrored positions
// share one cell, so the grid holds D(D+1)/2 distinct cells split into B
// message cells and R randomness cells.
struct OmegaLayout {
  uint32_t D = 0;
  uint32_t lambda = 0;
  uint32_t extra = 0;  // message cells beyond the secure block
  uint32_t B = 0;
  uint32_t R = 0;
  std::vector<Cell> cells;  // D*D entries, row-major, symmetric

  const Cell& at(uint32_t d1, uint32_t d2) const {  // 1-based coordinates
    return cells[(d1 - 1) * D + (d2 - 1)];
  }

  // Largest min(i,j) over message cells: the number of leading columns a
  // reader must solve to cover every message cell.
  uint32_t max_message_row() const;

  // 1-based columns whose D cells are all messages; these are the columns the
  // write phase must protect with routing-side common randomness.
  std::vector<uint32_t> all_message_columns() const;

  // Symbols a reader downloads for one instance: column c from D-c+1 rows.
  uint32_t download_count() const;

  bool operator==(const OmegaLayout& o) const {
    return D == o.D && lambda == o.lambda && extra == o.extra && cells == o.cells;
  }
};

// Fill order: upper-left (D-lambda) square's upper triangle row-major, then
// the ramp strip row-major, then the lower-right triangle row-major. The
// first `extra` strip/triangle cells become messages, the rest randomness.
OmegaLayout build_layout(uint32_t D, uint32_t lambda, uint32_t extra);

}  // namespace rsfl
