#include "rsfl/omega.hpp"

#include <string>

namespace rsfl {

uint32_t OmegaLayout::max_message_row() const {
  uint32_t m = 0;
  for (uint32_t i = 1; i <= D; ++i) {
    for (uint32_t j = i; j <= D; ++j) {
      if (at(i, j).kind == CellKind::Message && i > m) m = i;
    }
  }
  return m;
}

std::vector<uint32_t> OmegaLayout::all_message_columns() const {
  std::vector<uint32_t> out;
  for (uint32_t c = 1; c <= D; ++c) {
    bool all = true;
    for (uint32_t r = 1; r <= D; ++r) {
      if (at(r, c).kind != CellKind::Message) {
        all = false;
        break;
      }
    }
    if (all) out.push_back(c);
  }
  return out;
}

uint32_t OmegaLayout::download_count() const {
  uint32_t m = max_message_row();
  return m * D - m * (m - 1) / 2;
}

OmegaLayout build_layout(uint32_t D, uint32_t lambda, uint32_t extra) {
  if (D < 2 || lambda == 0 || lambda >= D) {
    fail(ErrorCode::BadRampParams,
         "D=" + std::to_string(D) + " lambda=" + std::to_string(lambda));
  }
  uint32_t block = (D - lambda) * (D - lambda + 1) / 2;
  uint32_t total = D * (D + 1) / 2;
  if (extra > total - block) {
    fail(ErrorCode::BadRampParams, "extra=" + std::to_string(extra));
  }

  OmegaLayout out;
  out.D = D;
  out.lambda = lambda;
  out.extra = extra;
  out.B = block + extra;
  out.R = total - out.B;
  out.cells.assign(static_cast<size_t>(D) * D, Cell{});

  auto set_cell = [&](uint32_t i, uint32_t j, Cell c) {
    out.cells[(i - 1) * D + (j - 1)] = c;
    out.cells[(j - 1) * D + (i - 1)] = c;
  };

  uint32_t msg = 0, rnd = 0, budget = extra;
  auto place = [&](uint32_t i, uint32_t j, bool in_block) {
    if (in_block || budget > 0) {
      if (!in_block) --budget;
      set_cell(i, j, Cell{CellKind::Message, msg++});
    } else {
      set_cell(i, j, Cell{CellKind::Randomness, rnd++});
    }
  };

  for (uint32_t i = 1; i <= D - lambda; ++i) {
    for (uint32_t j = i; j <= D - lambda; ++j) place(i, j, true);
  }
  for (uint32_t i = D - lambda + 1; i <= D; ++i) {
    for (uint32_t j = 1; j <= D - lambda; ++j) place(i, j, false);
  }
  for (uint32_t i = D - lambda + 1; i <= D; ++i) {
    for (uint32_t j = i; j <= D; ++j) place(i, j, false);
  }
  return out;
}

}  // namespace rsfl
