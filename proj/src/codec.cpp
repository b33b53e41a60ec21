#include "rsfl/codec.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace rsfl {
namespace {

uint32_t cell_value(const Field& f, const OmegaInstance& inst, uint32_t d1, uint32_t d2) {
  (void)f;
  const Cell& c = inst.layout.at(d1, d2);
  return c.kind == CellKind::Message ? inst.message_values[c.index]
                                     : inst.randomness_values[c.index];
}

uint64_t gcd_u64(uint64_t a, uint64_t b) { return std::gcd(a, b); }

}  // namespace

std::vector<uint32_t> default_psis(uint32_t n) {
  std::vector<uint32_t> p(n);
  for (uint32_t j = 0; j < n; ++j) p[j] = j + 1;
  return p;
}

Mat assemble_omega(const Field& f, const OmegaInstance& inst) {
  const OmegaLayout& lay = inst.layout;
  if (inst.message_values.size() != lay.B || inst.randomness_values.size() != lay.R) {
    fail(ErrorCode::DimensionMismatch, "instance value lengths");
  }
  Mat m(lay.D, lay.D);
  for (uint32_t i = 1; i <= lay.D; ++i) {
    for (uint32_t j = 1; j <= lay.D; ++j) {
      m.at(i - 1, j - 1) = cell_value(f, inst, i, j);
    }
  }
  return m;
}

std::vector<CodedRow> encode_instance(const Field& f, const OmegaInstance& inst,
                                      const Mat& psi, uint32_t instance_id) {
  if (psi.cols != inst.layout.D) {
    fail(ErrorCode::DimensionMismatch, "psi columns vs layout dimension");
  }
  Mat omega = assemble_omega(f, inst);
  Mat coded = mat_mul(f, psi, omega);
  std::vector<CodedRow> rows(psi.rows);
  for (size_t j = 0; j < psi.rows; ++j) {
    rows[j].db_index = static_cast<uint32_t>(j + 1);
    rows[j].instance_id = instance_id;
    rows[j].symbols.resize(inst.layout.D);
    for (size_t c = 0; c < inst.layout.D; ++c) rows[j].symbols[c] = coded.at(j, c);
  }
  return rows;
}

Reconstructed reconstruct(const Field& f, const std::vector<CodedRow>& rows,
                          const OmegaLayout& layout,
                          const std::vector<uint32_t>& psis) {
  const uint32_t D = layout.D;
  if (rows.size() < D) {
    fail(ErrorCode::NotEnoughRows,
         std::to_string(rows.size()) + " rows, need " + std::to_string(D));
  }
  std::set<uint32_t> dbs;
  for (const CodedRow& r : rows) {
    if (r.symbols.size() != D) fail(ErrorCode::InconsistentRows, "row symbol count");
    if (r.instance_id != rows.front().instance_id) {
      fail(ErrorCode::InconsistentRows, "mixed instance ids");
    }
    if (r.db_index == 0 || r.db_index > psis.size() || !dbs.insert(r.db_index).second) {
      fail(ErrorCode::NotEnoughRows, "rows must come from distinct databases");
    }
  }
  if (rows.size() != D) {
    fail(ErrorCode::NotEnoughRows, "expected exactly D rows");
  }

  const uint32_t m = layout.max_message_row();
  // omega[(d1,c)] for solved columns c in [1..m], 1-based keys.
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> omega;
  Reconstructed out;

  for (uint32_t c = 1; c <= m; ++c) {
    // Unknowns of column c are rows d1 in [c..D]; rows d1 < c mirror cells
    // (d1, c) = (c, d1) already solved in column d1.
    uint32_t unknowns = D - c + 1;
    Mat a(unknowns, unknowns);
    std::vector<uint32_t> b(unknowns);
    for (uint32_t t = 0; t < unknowns; ++t) {
      const CodedRow& r = rows[t];
      uint32_t psi = psis[r.db_index - 1];
      uint32_t rhs = r.symbols[c - 1];
      for (uint32_t d1 = 1; d1 < c; ++d1) {
        uint32_t known = omega.at({std::min(d1, c), std::max(d1, c)});
        rhs = f.sub(rhs, f.mul(f.pow(psi, d1 - 1), known));
      }
      b[t] = rhs;
      for (uint32_t d1 = c; d1 <= D; ++d1) {
        a.at(t, d1 - c) = f.pow(psi, d1 - 1);
      }
      out.consumed.emplace_back(r.db_index, c);
    }
    std::vector<uint32_t> x;
    try {
      x = solve(f, a, b);
    } catch (const FslError&) {
      fail(ErrorCode::InconsistentRows, "column system singular");
    }
    for (uint32_t d1 = c; d1 <= D; ++d1) omega[{c, d1}] = x[d1 - c];
  }

  // Redundant positions must agree with the solved columns.
  for (uint32_t c = 1; c <= m; ++c) {
    for (uint32_t t = D - c + 1; t < D; ++t) {
      const CodedRow& r = rows[t];
      uint32_t psi = psis[r.db_index - 1];
      uint32_t predicted = 0;
      for (uint32_t d1 = 1; d1 <= D; ++d1) {
        uint32_t v = omega.at({std::min(d1, c), std::max(d1, c)});
        predicted = f.add(predicted, f.mul(f.pow(psi, d1 - 1), v));
      }
      if (predicted != r.symbols[c - 1]) {
        fail(ErrorCode::InconsistentRows,
             "db " + std::to_string(r.db_index) + " column " + std::to_string(c));
      }
    }
  }

  out.messages.assign(layout.B, 0);
  for (uint32_t i = 1; i <= layout.D; ++i) {
    for (uint32_t j = i; j <= layout.D; ++j) {
      const Cell& cell = layout.at(i, j);
      if (cell.kind == CellKind::Message) out.messages[cell.index] = omega.at({i, j});
    }
  }
  return out;
}

uint32_t repair_share(const Field& f, const CodedRow& row,
                      const std::vector<uint32_t>& psis, uint32_t failed_db) {
  if (row.db_index == failed_db) {
    fail(ErrorCode::SelfRepair, "db " + std::to_string(failed_db));
  }
  if (failed_db == 0 || failed_db > psis.size()) {
    fail(ErrorCode::BadRampParams, "failed index " + std::to_string(failed_db));
  }
  uint32_t psi_f = psis[failed_db - 1];
  uint32_t acc = 0;
  for (size_t d = 0; d < row.symbols.size(); ++d) {
    acc = f.add(acc, f.mul(row.symbols[d], f.pow(psi_f, d)));
  }
  return acc;
}

CodedRow repair_assemble(const Field& f,
                         const std::vector<std::pair<uint32_t, uint32_t>>& shares,
                         const std::vector<uint32_t>& psis, uint32_t failed_db,
                         uint32_t D, uint32_t instance_id) {
  std::set<uint32_t> seen;
  std::vector<std::pair<uint32_t, uint32_t>> use;
  for (const auto& [db, value] : shares) {
    if (db == failed_db) fail(ErrorCode::SelfRepair, "helper equals failed db");
    if (seen.insert(db).second && use.size() < D) use.emplace_back(db, value);
  }
  if (use.size() < D) {
    fail(ErrorCode::NotEnoughHelpers,
         std::to_string(use.size()) + " distinct helpers, need " + std::to_string(D));
  }
  // share_j = psi_j^T (Omega psi_f): D unknowns, one evaluation per helper.
  Mat a(D, D);
  std::vector<uint32_t> b(D);
  for (uint32_t t = 0; t < D; ++t) {
    uint32_t psi = psis[use[t].first - 1];
    for (uint32_t p = 0; p < D; ++p) a.at(t, p) = f.pow(psi, p);
    b[t] = use[t].second;
  }
  CodedRow row;
  row.db_index = failed_db;
  row.instance_id = instance_id;
  row.symbols = solve(f, a, b);
  return row;
}

CostTriple theorem2_bounds(uint32_t D, uint32_t lambda, Rat leak) {
  if (D < 2 || lambda == 0 || lambda >= D) fail(ErrorCode::BadRampParams, "D/lambda");
  if (leak < Rat(0) || leak > Rat(1)) fail(ErrorCode::BadRampParams, "leak range");
  Rat bp1(2 * static_cast<int64_t>(lambda), static_cast<int64_t>(D) + lambda + 1);
  Rat bp2(2 * static_cast<int64_t>(lambda) * D - static_cast<int64_t>(lambda) * (lambda - 1),
          static_cast<int64_t>(D) * (D + 1));
  Rat one(1);
  CostTriple out;
  out.c1 = leak <= bp1
               ? Rat(static_cast<int64_t>(D) + lambda + 1, static_cast<int64_t>(D) - lambda + 1) * (one - leak)
               : one;
  out.c2 = leak <= bp2
               ? Rat(2 * static_cast<int64_t>(D),
                     (static_cast<int64_t>(D) - lambda) * (static_cast<int64_t>(D) - lambda + 1)) *
                     (one - leak)
               : Rat(2, static_cast<int64_t>(D) + 1);
  out.s = out.c2 * Rat(D);
  return out;
}

RsrcPlan plan_time_sharing(uint32_t D, uint32_t lambda, Rat leak) {
  if (D < 2 || lambda == 0 || lambda >= D) fail(ErrorCode::BadRampParams, "D/lambda");
  if (leak < Rat(0) || leak > Rat(1)) fail(ErrorCode::BadRampParams, "leak range");
  const int64_t Dl = D, ll = lambda;
  const int64_t p1 = leak.num(), p2 = leak.den();
  Rat bp1(2 * ll, Dl + ll + 1);
  Rat bp2(2 * ll * Dl - ll * (ll - 1), Dl * (Dl + 1));

  RsrcPlan plan;
  plan.D = D;
  plan.lambda = lambda;
  plan.target_leak = leak;

  const uint32_t strip = lambda * (D - lambda);
  const uint32_t full = D * (D + 1) / 2 - (D - lambda) * (D - lambda + 1) / 2;
  int64_t qa = 0, qb = 0;
  if (leak <= bp1) {
    plan.layout_a = build_layout(D, lambda, 0);
    plan.layout_b = build_layout(D, lambda, strip);
    qa = 2 * ll * (Dl - ll) * p2 - (Dl - ll) * (Dl + ll + 1) * p1;
    qb = (Dl - ll) * (Dl - ll + 1) * p1;
  } else if (leak <= bp2) {
    plan.layout_a = build_layout(D, lambda, strip);
    plan.layout_b = build_layout(D, lambda, full);
    qa = ll * (2 * Dl - ll + 1) * p2 - Dl * (Dl + 1) * p1;
    qb = (Dl - ll) * (Dl + ll + 1) * p1 - 2 * ll * (Dl - ll) * p2;
  } else {
    plan.layout_a = build_layout(D, lambda, full);
    plan.layout_b = plan.layout_a;
    qa = 1;
    qb = 0;
  }
  uint64_t g = gcd_u64(static_cast<uint64_t>(qa), static_cast<uint64_t>(qb));
  if (g == 0) fail(ErrorCode::BadRampParams, "degenerate counts");
  plan.count_a = static_cast<uint64_t>(qa) / g;
  plan.count_b = static_cast<uint64_t>(qb) / g;
  return plan;
}

RsrcPlan plan_single_layout(const OmegaLayout& layout) {
  RsrcPlan plan;
  plan.D = layout.D;
  plan.lambda = layout.lambda;
  plan.target_leak = Rat(layout.extra, layout.B);
  plan.layout_a = layout;
  plan.layout_b = layout;
  plan.count_a = 1;
  plan.count_b = 0;
  return plan;
}

CostTriple realized_costs(const RsrcPlan& plan) {
  int64_t ca = static_cast<int64_t>(plan.count_a);
  int64_t cb = static_cast<int64_t>(plan.count_b);
  int64_t total_b = ca * plan.layout_a.B + cb * plan.layout_b.B;
  if (total_b == 0) fail(ErrorCode::BadRampParams, "plan carries no messages");
  int64_t c1 = ca * plan.layout_a.download_count() + cb * plan.layout_b.download_count();
  int64_t inst = ca + cb;
  CostTriple out;
  out.c1 = Rat(c1, total_b);
  out.c2 = Rat(inst * plan.D, total_b);
  out.s = Rat(inst * plan.D * plan.D, total_b);
  return out;
}

ChunkMap chunk_map(const RsrcPlan& plan, uint32_t L) {
  uint32_t sum = plan.sum_b();
  if (sum == 0) fail(ErrorCode::BadRampParams, "plan carries no messages");
  ChunkMap m;
  m.passes = (L + sum - 1) / sum;
  if (m.passes == 0) m.passes = 1;
  m.padded_len = m.passes * sum;
  return m;
}

namespace {

// Leaked message symbols when the listed database rows of one instance are
// exposed. Exact rank computation over the (message | randomness) split.
uint32_t leaked_symbols(const Field& f, const OmegaLayout& lay,
                        const std::vector<uint32_t>& psis,
                        const std::vector<uint32_t>& observed_dbs) {
  size_t rows_n = observed_dbs.size() * lay.D;
  size_t cols_msg = lay.B, cols_rnd = lay.R;
  Mat full(rows_n, cols_msg + cols_rnd);
  Mat rnd_only(rows_n, cols_rnd == 0 ? 1 : cols_rnd);
  size_t r = 0;
  for (uint32_t db : observed_dbs) {
    uint32_t psi = psis.at(db - 1);
    for (uint32_t c = 1; c <= lay.D; ++c, ++r) {
      for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
        const Cell& cell = lay.at(d1, c);
        uint32_t coef = f.pow(psi, d1 - 1);
        if (cell.kind == CellKind::Message) {
          full.at(r, cell.index) = f.add(full.at(r, cell.index), coef);
        } else {
          full.at(r, cols_msg + cell.index) = f.add(full.at(r, cols_msg + cell.index), coef);
          if (cols_rnd > 0) {
            rnd_only.at(r, cell.index) = f.add(rnd_only.at(r, cell.index), coef);
          }
        }
      }
    }
  }
  size_t rank_full = rank(f, full);
  size_t rank_rnd = cols_rnd == 0 ? 0 : rank(f, rnd_only);
  return static_cast<uint32_t>(rank_full - rank_rnd);
}

}  // namespace

Rat leakage_fraction(const Field& f, const std::vector<OmegaLayout>& layouts,
                     const std::vector<uint32_t>& psis,
                     const std::vector<uint32_t>& observed_dbs) {
  if (observed_dbs.empty()) fail(ErrorCode::BadRampParams, "empty observed set");
  // Instances carry independent symbols, so ranks add across layouts.
  int64_t leaked = 0, total = 0;
  for (const OmegaLayout& lay : layouts) {
    leaked += leaked_symbols(f, lay, psis, observed_dbs);
    total += lay.B;
  }
  if (total == 0) fail(ErrorCode::BadRampParams, "no message symbols");
  return Rat(leaked, total);
}

Rat leakage_fraction(const Field& f, const RsrcPlan& plan,
                     const std::vector<uint32_t>& psis,
                     const std::vector<uint32_t>& observed_dbs) {
  if (observed_dbs.empty()) fail(ErrorCode::BadRampParams, "empty observed set");
  int64_t leaked = 0, total = 0;
  if (plan.count_a > 0) {
    leaked += static_cast<int64_t>(plan.count_a) *
              leaked_symbols(f, plan.layout_a, psis, observed_dbs);
    total += static_cast<int64_t>(plan.count_a) * plan.layout_a.B;
  }
  if (plan.count_b > 0) {
    leaked += static_cast<int64_t>(plan.count_b) *
              leaked_symbols(f, plan.layout_b, psis, observed_dbs);
    total += static_cast<int64_t>(plan.count_b) * plan.layout_b.B;
  }
  if (total == 0) fail(ErrorCode::BadRampParams, "no message symbols");
  return Rat(leaked, total);
}

}  // namespace rsfl
