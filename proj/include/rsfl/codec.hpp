#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rsfl/matrix.hpp"
#include "rsfl/omega.hpp"
#include "rsfl/rational.hpp"

namespace rsfl {

struct OmegaInstance {
  OmegaLayout layout;
  std::vector<uint32_t> message_values;     // length layout.B
  std::vector<uint32_t> randomness_values;  // length layout.R
};

struct CodedRow {
  uint32_t db_index = 0;  // 1-based; the row was encoded with this database's psi
  uint32_t instance_id = 0;
  std::vector<uint32_t> symbols;  // D entries
};

struct CostTriple {
  Rat c1, c2, s;

  bool operator==(const CostTriple& o) const {
    return c1 == o.c1 && c2 == o.c2 && s == o.s;
  }
};

// Two-layout time share. Stream order is count_a instances of layout_a
// followed by count_b of layout_b; counts are gcd-reduced.
struct RsrcPlan {
  uint32_t D = 0;
  uint32_t lambda = 0;
  Rat target_leak;
  OmegaLayout layout_a, layout_b;
  uint64_t count_a = 0, count_b = 0;

  uint64_t instance_count() const { return count_a + count_b; }
  const OmegaLayout& layout_of(uint64_t u) const {
    return u < count_a ? layout_a : layout_b;
  }
  uint32_t sum_b() const {
    return static_cast<uint32_t>(count_a * layout_a.B + count_b * layout_b.B);
  }
};

// Default evaluation points psi_j = j for databases 1..n.
std::vector<uint32_t> default_psis(uint32_t n);

Mat assemble_omega(const Field& f, const OmegaInstance& inst);

// One CodedRow per psi row; row j carries psi_j^T * Omega.
std::vector<CodedRow> encode_instance(const Field& f, const OmegaInstance& inst,
                                      const Mat& psi, uint32_t instance_id);

struct Reconstructed {
  std::vector<uint32_t> messages;  // length layout.B
  // (db_index, 1-based column) of each symbol actually consumed; size is the
  // layout's download_count().
  std::vector<std::pair<uint32_t, uint32_t>> consumed;
};

// Decodes from exactly D rows of distinct databases. Unused redundant symbols
// are recomputed and compared, so a corrupted row surfaces as
// InconsistentRows rather than a silently wrong message.
Reconstructed reconstruct(const Field& f, const std::vector<CodedRow>& rows,
                          const OmegaLayout& layout,
                          const std::vector<uint32_t>& psis);

uint32_t repair_share(const Field& f, const CodedRow& row,
                      const std::vector<uint32_t>& psis, uint32_t failed_db);

// Rebuilds the failed row from D helper shares (Omega psi_f read back through
// the helpers' evaluation points; symmetry turns it into the stored row).
CodedRow repair_assemble(const Field& f,
                         const std::vector<std::pair<uint32_t, uint32_t>>& shares,
                         const std::vector<uint32_t>& psis, uint32_t failed_db,
                         uint32_t D, uint32_t instance_id);

CostTriple theorem2_bounds(uint32_t D, uint32_t lambda, Rat leak);

RsrcPlan plan_time_sharing(uint32_t D, uint32_t lambda, Rat leak);

// Degenerate plan running one fixed layout; target_leak is the layout's own
// lambda-subset leakage fraction.
RsrcPlan plan_single_layout(const OmegaLayout& layout);

CostTriple realized_costs(const RsrcPlan& plan);

// A payload of L symbols rides ceil(L / sum_b) passes over the plan's
// instances; the tail is zero-padded up to padded_len.
struct ChunkMap {
  uint32_t passes = 0;
  uint32_t padded_len = 0;
};
ChunkMap chunk_map(const RsrcPlan& plan, uint32_t L);

// Exact leaked-fraction of the message symbols carried by `layouts` when the
// rows of `observed_dbs` are exposed: (rank[A|B] - rank[B]) / sum of B.
Rat leakage_fraction(const Field& f, const std::vector<OmegaLayout>& layouts,
                     const std::vector<uint32_t>& psis,
                     const std::vector<uint32_t>& observed_dbs);
Rat leakage_fraction(const Field& f, const RsrcPlan& plan,
                     const std::vector<uint32_t>& psis,
                     const std::vector<uint32_t>& observed_dbs);

}  // namespace rsfl
