#include "rsfl/protocol.hpp"

#include <algorithm>

#include "rsfl/matrix.hpp"

namespace rsfl {

namespace {

void push_u32_le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

uint32_t poly_eval(const Field& f, const std::vector<uint32_t>& coeffs, uint32_t x) {
  uint32_t acc = 0;
  for (size_t i = coeffs.size(); i-- > 0;) acc = f.add(f.mul(acc, x), coeffs[i]);
  return acc;
}

bool contains(const std::vector<uint32_t>& v, uint32_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

void SystemParams::validate() const {
  if (n_databases == 0 || n_clients == 0 || n_submodels == 0 || sub_len == 0 ||
      d_reconstruct == 0) {
    fail(ErrorCode::ScenarioInfeasible, "all population sizes must be positive");
  }
  if (!(n_databases > d_reconstruct && d_reconstruct > e_eavesdrop)) {
    fail(ErrorCode::ScenarioInfeasible, "need N > D > E");
  }
  if (e_eavesdrop > j_collude) fail(ErrorCode::ScenarioInfeasible, "need E <= J");
  if (a_adversary > 0) {
    uint32_t floor1 = 2 * a_adversary + d_reconstruct;
    uint32_t floor2 = (j_collude + 1) * (2 * a_adversary + 1);
    if (n_databases < std::max(floor1, floor2)) {
      fail(ErrorCode::ScenarioInfeasible,
           "N too small for the adversarial replication floor");
    }
  }
  if (!Field::is_prime(modulus)) {
    fail(ErrorCode::ScenarioInfeasible, "modulus must be prime");
  }
  if (modulus <= std::max(n_clients, n_databases)) {
    fail(ErrorCode::ScenarioInfeasible, "modulus must exceed max(C, N)");
  }
  if (delta.num() < 0 || delta.num() > delta.den()) {
    fail(ErrorCode::ScenarioInfeasible, "delta must lie in [0, 1]");
  }
  if (group_of.size() != n_clients) {
    fail(ErrorCode::ScenarioInfeasible, "group_of must assign every client");
  }
  for (uint32_t g : group_of) {
    if (g < 1 || g > n_databases) {
      fail(ErrorCode::ScenarioInfeasible, "group_of entries must name a database");
    }
  }
}

std::vector<std::vector<uint32_t>> SystemParams::groups() const {
  std::vector<std::vector<uint32_t>> out(n_databases);
  for (uint32_t i = 1; i <= n_clients; ++i) out[group_of[i - 1] - 1].push_back(i);
  return out;
}

const char* message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::AU1: return "AU1";
    case MessageKind::DU2: return "DU2";
    case MessageKind::AU2: return "AU2";
    case MessageKind::DW1req: return "DW1req";
    case MessageKind::DW1resp: return "DW1resp";
    case MessageKind::AW1: return "AW1";
    case MessageKind::DW2: return "DW2";
    case MessageKind::AW2: return "AW2";
    case MessageKind::RepairShare: return "RepairShare";
    case MessageKind::CrBroadcast: return "CrBroadcast";
    case MessageKind::CrrShare: return "CrrShare";
    case MessageKind::GammaAnnounce: return "GammaAnnounce";
  }
  return "Unknown";
}

std::vector<uint8_t> PhaseMessage::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(16 + 4 * payload.size());
  push_u32_le(out, static_cast<uint32_t>(kind));
  push_u32_le(out, sender);
  push_u32_le(out, receiver);
  push_u32_le(out, static_cast<uint32_t>(payload.size()));
  for (uint32_t v : payload) push_u32_le(out, v);
  return out;
}

std::vector<uint32_t> crg_zero_sum_set(
    const Field& f, const std::vector<std::vector<uint32_t>>& contributions,
    uint32_t contributors) {
  if (contributors == 0 || contributions.size() != contributors) {
    fail(ErrorCode::WrongContributorCount, "expected " + std::to_string(contributors) +
                                               " contribution rows, got " +
                                               std::to_string(contributions.size()));
  }
  size_t drawn = contributions.front().size();
  for (const auto& row : contributions) {
    if (row.size() != drawn) {
      fail(ErrorCode::WrongContributorCount, "contribution rows differ in length");
    }
  }
  std::vector<uint32_t> set(drawn + 1, 0);
  uint32_t total = 0;
  for (const auto& row : contributions) {
    for (size_t i = 0; i < drawn; ++i) {
      set[i] = f.add(set[i], row[i]);
      total = f.add(total, row[i]);
    }
  }
  set[drawn] = f.neg(total);
  return set;
}

uint32_t crg_scalar_c(const Field& f, const std::vector<uint32_t>& contributions) {
  uint32_t c = 1;
  for (uint32_t v : contributions) {
    if (v == 0) fail(ErrorCode::ZeroContribution, "scalar factors must be nonzero");
    c = f.mul(c, v);
  }
  return c;
}

PhaseMessage psu_client_answer(const Field& f, const ClientState& client) {
  if (client.scalar_c == 0 || client.mask_union.empty()) {
    fail(ErrorCode::MissingRandomness,
         "client " + std::to_string(client.id) + " lacks union-phase randomness");
  }
  PhaseMessage msg;
  msg.kind = MessageKind::AU1;
  msg.sender = client_addr(client.id);
  msg.receiver = client.group;
  msg.payload.reserve(client.mask_union.size());
  for (size_t k = 0; k < client.mask_union.size(); ++k) {
    uint32_t y = k < client.incidence.size() ? client.incidence[k] : 0;
    msg.payload.push_back(f.mul(client.scalar_c, f.add(y, client.mask_union[k])));
  }
  return msg;
}

PhaseMessage psu_db_aggregate(const Field& f, const DatabaseState& db,
                              const std::vector<const PhaseMessage*>& answers,
                              uint32_t router_id) {
  if (db.cr_union.empty()) {
    fail(ErrorCode::MissingRandomness,
         "database " + std::to_string(db.id) + " holds no union randomness");
  }
  size_t K = db.cr_union.size();
  PhaseMessage msg;
  msg.kind = MessageKind::DU2;
  msg.sender = db.id;
  msg.receiver = client_addr(router_id);
  msg.payload = db.cr_union;
  for (const PhaseMessage* a : answers) {
    if (a->payload.size() != K) {
      fail(ErrorCode::InconsistentAnswer, "union answer length mismatch");
    }
    for (size_t k = 0; k < K; ++k) msg.payload[k] = f.add(msg.payload[k], a->payload[k]);
  }
  return msg;
}

PhaseMessage psu_route_answer(const Field& f, const ClientState& router,
                              const std::vector<uint32_t>& du2, uint32_t target_db) {
  if (router.club_union.size() != du2.size()) {
    fail(ErrorCode::MissingRandomness,
         "router " + std::to_string(router.id) + " lacks its club slot");
  }
  PhaseMessage msg;
  msg.kind = MessageKind::AU2;
  msg.sender = client_addr(router.id);
  msg.receiver = target_db;
  msg.payload.resize(du2.size());
  for (size_t k = 0; k < du2.size(); ++k) {
    msg.payload[k] = f.add(du2[k], router.club_union[k]);
  }
  return msg;
}

std::vector<uint32_t> psu_decode_union(const Field& f, const DatabaseState& db,
                                       const std::vector<const PhaseMessage*>& answers,
                                       const std::vector<uint32_t>& extra) {
  if (answers.empty()) {
    fail(ErrorCode::MissingRouterAnswer, "no routed union answers arrived");
  }
  size_t K = db.cr_union.size();
  if (!extra.empty() && extra.size() != K) {
    fail(ErrorCode::InconsistentAnswer, "compensation length mismatch");
  }
  uint32_t n = static_cast<uint32_t>(answers.size() % f.q());
  std::vector<uint32_t> gamma;
  for (size_t k = 0; k < K; ++k) {
    uint32_t sum = extra.empty() ? 0 : extra[k];
    for (const PhaseMessage* a : answers) {
      if (a->payload.size() != K) {
        fail(ErrorCode::InconsistentAnswer, "routed answer length mismatch");
      }
      sum = f.add(sum, a->payload[k]);
    }
    if (f.sub(sum, f.mul(n, db.cr_union[k])) != 0) {
      gamma.push_back(static_cast<uint32_t>(k + 1));
    }
  }
  return gamma;
}

std::vector<SpanRef> instance_spans(const RsrcPlan& plan, uint32_t passes) {
  std::vector<SpanRef> spans;
  spans.reserve(passes * plan.instance_count());
  uint32_t offset = 0;
  for (uint32_t p = 0; p < passes; ++p) {
    for (uint64_t u = 0; u < plan.instance_count(); ++u) {
      const OmegaLayout& lay = plan.layout_of(u);
      spans.push_back({&lay, offset});
      offset += lay.B;
    }
  }
  return spans;
}

std::vector<ReadPosition> write_read_positions(const RsrcPlan& plan, uint32_t passes,
                                               const std::vector<uint32_t>& gamma,
                                               const std::vector<uint32_t>& live_dbs,
                                               uint32_t a_adversary) {
  std::vector<ReadPosition> out;
  if (gamma.empty()) return out;
  uint32_t D = plan.D;
  uint32_t need = a_adversary > 0 ? D + 2 * a_adversary : D;
  if (live_dbs.size() < need) {
    fail(ErrorCode::NotEnoughDatabases,
         "download needs " + std::to_string(need) + " databases, have " +
             std::to_string(live_dbs.size()));
  }
  auto spans = instance_spans(plan, passes);
  for (uint32_t k : gamma) {
    for (uint32_t g = 0; g < spans.size(); ++g) {
      uint32_t m = spans[g].layout->max_message_row();
      for (uint32_t c = 1; c <= m; ++c) {
        uint32_t rows = a_adversary > 0 ? D + 2 * a_adversary : D - c + 1;
        for (uint32_t t = 0; t < rows; ++t) out.push_back({live_dbs[t], k, g, c});
      }
    }
  }
  return out;
}

DecodedInstance write_decode_instance(const Field& f, const OmegaLayout& layout,
                                      const std::vector<ColumnSamples>& columns,
                                      uint32_t a_adversary) {
  DecodedInstance dec;
  dec.messages.assign(layout.B, 0);
  dec.randomness.assign(layout.R, 0);
  std::vector<bool> have_msg(layout.B, false), have_rnd(layout.R, false);
  uint32_t D = layout.D;

  auto cell_value = [&](const Cell& cell) -> uint32_t {
    return cell.kind == CellKind::Message ? dec.messages[cell.index]
                                          : dec.randomness[cell.index];
  };
  auto cell_known = [&](const Cell& cell) -> bool {
    return cell.kind == CellKind::Message ? have_msg[cell.index]
                                          : have_rnd[cell.index];
  };
  auto set_cell = [&](const Cell& cell, uint32_t v) {
    if (cell_known(cell) && cell_value(cell) != v) {
      fail(ErrorCode::InconsistentAnswer, "mirrored cells decoded to different values");
    }
    if (cell.kind == CellKind::Message) {
      dec.messages[cell.index] = v;
      have_msg[cell.index] = true;
    } else {
      dec.randomness[cell.index] = v;
      have_rnd[cell.index] = true;
    }
  };

  std::vector<ColumnSamples> cols = columns;
  std::sort(cols.begin(), cols.end(),
            [](const ColumnSamples& a, const ColumnSamples& b) {
              return a.column < b.column;
            });

  for (const ColumnSamples& cs : cols) {
    uint32_t c = cs.column;
    if (c < 1 || c > D) fail(ErrorCode::InconsistentAnswer, "column out of range");
    if (a_adversary > 0) {
      auto coeffs = adversary_decode_rs(f, cs.samples, D, a_adversary);
      for (uint32_t d1 = 1; d1 <= D; ++d1) set_cell(layout.at(d1, c), coeffs[d1 - 1]);
      continue;
    }
    // Rows above the diagonal mirror cells solved by earlier columns, so the
    // unknowns are rows c..D and exactly D-c+1 samples pin them down.
    uint32_t unknowns = D - c + 1;
    if (cs.samples.size() != unknowns) {
      fail(ErrorCode::InconsistentAnswer, "column sample count mismatch");
    }
    Mat a(unknowns, unknowns);
    std::vector<uint32_t> rhs(unknowns);
    for (uint32_t s = 0; s < unknowns; ++s) {
      uint32_t psi = cs.samples[s].first;
      uint32_t value = cs.samples[s].second;
      for (uint32_t d1 = 1; d1 < c; ++d1) {
        const Cell& mirror = layout.at(d1, c);
        if (!cell_known(mirror)) {
          fail(ErrorCode::InconsistentAnswer, "mirror cell missing; columns skipped");
        }
        value = f.sub(value, f.mul(f.pow(psi, d1 - 1), cell_value(mirror)));
      }
      rhs[s] = value;
      for (uint32_t j = 0; j < unknowns; ++j) a.at(s, j) = f.pow(psi, c - 1 + j);
    }
    auto solved = solve(f, a, rhs);
    for (uint32_t j = 0; j < unknowns; ++j) set_cell(layout.at(c + j, c), solved[j]);
  }
  return dec;
}

PhaseMessage write_client_answer(const Field& f, const ClientState& client,
                                 const std::vector<uint32_t>& gamma, uint32_t l_star) {
  PhaseMessage msg;
  msg.kind = MessageKind::AW1;
  msg.sender = client_addr(client.id);
  msg.receiver = client.group;
  msg.payload.reserve(gamma.size() * l_star);
  for (uint32_t k : gamma) {
    auto mit = client.mask_write.find(k);
    if (mit == client.mask_write.end() || mit->second.size() != l_star) {
      fail(ErrorCode::MissingRandomness,
           "client " + std::to_string(client.id) + " lacks write randomness for " +
               std::to_string(k));
    }
    const std::vector<uint32_t>* delta = nullptr;
    auto dit = client.increments.find(k);
    if (dit != client.increments.end() && contains(client.gamma, k)) {
      if (dit->second.size() != l_star) {
        fail(ErrorCode::DimensionMismatch, "increment span mismatch");
      }
      delta = &dit->second;
    }
    for (uint32_t l = 0; l < l_star; ++l) {
      uint32_t d = delta ? (*delta)[l] : 0;
      msg.payload.push_back(f.add(d, mit->second[l]));
    }
  }
  return msg;
}

PhaseMessage write_db_aggregate(const Field& f, const DatabaseState& db,
                                const std::vector<const PhaseMessage*>& answers,
                                const std::vector<uint32_t>& gamma, uint32_t l_star,
                                uint32_t router_id) {
  PhaseMessage msg;
  msg.kind = MessageKind::DW2;
  msg.sender = db.id;
  msg.receiver = client_addr(router_id);
  msg.payload.reserve(gamma.size() * l_star);
  for (size_t ki = 0; ki < gamma.size(); ++ki) {
    uint32_t k = gamma[ki];
    if (k < 1 || k > db.cr_write.size() || db.cr_write[k - 1].size() < l_star) {
      fail(ErrorCode::MissingRandomness,
           "database " + std::to_string(db.id) + " holds no write randomness for " +
               std::to_string(k));
    }
    for (uint32_t l = 0; l < l_star; ++l) {
      msg.payload.push_back(db.cr_write[k - 1][l]);
    }
  }
  for (const PhaseMessage* a : answers) {
    if (a->payload.size() != msg.payload.size()) {
      fail(ErrorCode::InconsistentAnswer, "write answer length mismatch");
    }
    for (size_t p = 0; p < msg.payload.size(); ++p) {
      msg.payload[p] = f.add(msg.payload[p], a->payload[p]);
    }
  }
  return msg;
}

std::vector<PhaseMessage> write_route_answer(
    const Field& f, const ClientState& router, const RsrcPlan& plan, uint32_t passes,
    const std::vector<uint32_t>& gamma, const std::vector<uint32_t>& dw2,
    bool embed_model, const std::vector<std::pair<uint32_t, uint32_t>>& targets,
    Rng& fresh, const std::vector<uint32_t>& riders, uint32_t replacement_db) {
  auto spans = instance_spans(plan, passes);
  uint32_t l_star = passes * plan.sum_b();
  if (dw2.size() != gamma.size() * l_star) {
    fail(ErrorCode::InconsistentAnswer, "aggregated write answer span mismatch");
  }

  // One fresh draw per randomness cell, shared across every target database so
  // the committed rows stay mutually consistent. Draw order is fixed:
  // submodel, then instance, then cell index.
  std::vector<std::vector<std::vector<uint32_t>>> fresh_cells(gamma.size());
  for (size_t ki = 0; ki < gamma.size(); ++ki) {
    fresh_cells[ki].resize(spans.size());
    for (size_t g = 0; g < spans.size(); ++g) {
      fresh_cells[ki][g].resize(spans[g].layout->R);
      for (uint32_t r = 0; r < spans[g].layout->R; ++r) {
        fresh_cells[ki][g][r] = static_cast<uint32_t>(fresh.below(f.q()));
      }
    }
  }

  std::vector<PhaseMessage> out;
  out.reserve(targets.size());
  for (const auto& [db_id, psi] : targets) {
    PhaseMessage msg;
    msg.kind = MessageKind::AW2;
    msg.sender = client_addr(router.id);
    msg.receiver = db_id;
    for (size_t ki = 0; ki < gamma.size(); ++ki) {
      uint32_t k = gamma[ki];
      const std::vector<uint32_t>* model = nullptr;
      if (embed_model) {
        auto rit = router.recovered.find(k);
        if (rit == router.recovered.end() || rit->second.size() != l_star) {
          fail(ErrorCode::ProtocolAbort,
               "embedding router has not recovered submodel " + std::to_string(k));
        }
        model = &rit->second;
      }
      for (size_t g = 0; g < spans.size(); ++g) {
        const OmegaLayout& lay = *spans[g].layout;
        auto amc = lay.all_message_columns();
        for (uint32_t d2 = 1; d2 <= lay.D; ++d2) {
          uint32_t acc = 0;
          for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
            const Cell& cell = lay.at(d1, d2);
            uint32_t x;
            if (cell.kind == CellKind::Message) {
              uint32_t l = spans[g].offset + cell.index;
              x = dw2[ki * l_star + l];
              if (model) x = f.add(x, (*model)[l]);
            } else {
              x = fresh_cells[ki][g][cell.index];
            }
            acc = f.add(acc, f.mul(f.pow(psi, d1 - 1), x));
          }
          if (contains(amc, d2)) {
            auto cit = router.club_write.find({k, static_cast<uint32_t>(g), d2});
            if (cit == router.club_write.end()) {
              fail(ErrorCode::MissingRandomness,
                   "router " + std::to_string(router.id) +
                       " lacks a club slot for an all-message column");
            }
            acc = f.add(acc, cit->second);
          }
          msg.payload.push_back(acc);
        }
      }
    }
    uint32_t rider_count = 0;
    if (replacement_db != 0 && db_id == replacement_db && !riders.empty()) {
      msg.payload.insert(msg.payload.end(), riders.begin(), riders.end());
      rider_count = static_cast<uint32_t>(riders.size());
    }
    msg.meta = {router.group, rider_count};
    out.push_back(std::move(msg));
  }
  return out;
}

void write_commit_storage(const Field& f, DatabaseState& db,
                          const std::vector<const PhaseMessage*>& answers,
                          const std::vector<uint32_t>& beta, const RsrcPlan& plan,
                          uint32_t passes, const std::vector<uint32_t>& gamma,
                          uint32_t l_star, uint32_t psi) {
  if (answers.empty()) fail(ErrorCode::MissingRouterAnswer, "no coded write answers");
  if (l_star != passes * plan.sum_b()) {
    fail(ErrorCode::DimensionMismatch, "write span does not match the plan");
  }
  auto spans = instance_spans(plan, passes);
  size_t base = gamma.size() * spans.size() * plan.D;
  if (!beta.empty() && beta.size() != base) {
    fail(ErrorCode::InconsistentAnswer, "compensation span mismatch");
  }
  std::vector<uint32_t> sum(base, 0);
  for (const PhaseMessage* a : answers) {
    uint32_t riders = a->meta.size() >= 2 ? a->meta[1] : 0;
    if (a->payload.size() != base + riders) {
      fail(ErrorCode::InconsistentAnswer, "coded write answer span mismatch");
    }
    for (size_t p = 0; p < base; ++p) sum[p] = f.add(sum[p], a->payload[p]);
  }
  if (!beta.empty()) {
    for (size_t p = 0; p < base; ++p) sum[p] = f.add(sum[p], beta[p]);
  }

  uint32_t n = static_cast<uint32_t>(answers.size() % f.q());
  size_t p = 0;
  for (size_t ki = 0; ki < gamma.size(); ++ki) {
    uint32_t k = gamma[ki];
    if (k < 1 || k > db.cr_write.size() || db.cr_write[k - 1].size() < l_star) {
      fail(ErrorCode::MissingRandomness, "commit lacks the server-side randomness");
    }
    if (db.store.size() < k || db.store[k - 1].size() != spans.size()) {
      fail(ErrorCode::InconsistentAnswer, "storage shape mismatch at commit");
    }
    for (size_t g = 0; g < spans.size(); ++g) {
      const OmegaLayout& lay = *spans[g].layout;
      CodedRow& row = db.store[k - 1][g];
      row.db_index = db.id;
      row.instance_id = static_cast<uint32_t>(g);
      row.symbols.resize(lay.D);
      for (uint32_t d2 = 1; d2 <= lay.D; ++d2, ++p) {
        uint32_t corr = 0;
        for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
          const Cell& cell = lay.at(d1, d2);
          if (cell.kind != CellKind::Message) continue;
          uint32_t l = spans[g].offset + cell.index;
          corr = f.add(corr, f.mul(f.pow(psi, d1 - 1), db.cr_write[k - 1][l]));
        }
        row.symbols[d2 - 1] = f.sub(sum[p], f.mul(n, corr));
      }
    }
  }
}

uint32_t crr_refresh(const Field& f, uint32_t share1, uint32_t share2,
                     uint32_t client1, uint32_t client2) {
  if (client1 == client2) {
    fail(ErrorCode::MissingShare, "refresh shares must come from two clients");
  }
  return f.add(share1, share2);
}

std::vector<uint32_t> dropout_compensation_psu(
    const Field& f, uint32_t c,
    const std::vector<const std::vector<uint32_t>*>& dropped_masks,
    uint32_t n_submodels) {
  std::vector<uint32_t> out(n_submodels, 0);
  for (const auto* mask : dropped_masks) {
    if (mask == nullptr || mask->size() != n_submodels) {
      fail(ErrorCode::UnknownDroppedClient, "dropped client's union mask unavailable");
    }
    for (uint32_t k = 0; k < n_submodels; ++k) out[k] = f.add(out[k], (*mask)[k]);
  }
  for (uint32_t k = 0; k < n_submodels; ++k) out[k] = f.mul(c, out[k]);
  return out;
}

std::vector<uint32_t> dropout_compensation_write(
    const Field& f, const RsrcPlan& plan, uint32_t passes,
    const std::vector<uint32_t>& gamma,
    const std::vector<const std::map<uint32_t, std::vector<uint32_t>>*>& dropped_masks,
    uint32_t psi) {
  auto spans = instance_spans(plan, passes);
  uint32_t l_star = passes * plan.sum_b();
  std::vector<std::vector<uint32_t>> combined(gamma.size(),
                                              std::vector<uint32_t>(l_star, 0));
  for (const auto* masks : dropped_masks) {
    if (masks == nullptr) {
      fail(ErrorCode::UnknownDroppedClient, "dropped client's write mask unavailable");
    }
    for (size_t ki = 0; ki < gamma.size(); ++ki) {
      auto it = masks->find(gamma[ki]);
      if (it == masks->end() || it->second.size() != l_star) {
        fail(ErrorCode::UnknownDroppedClient,
             "dropped client's write mask unavailable");
      }
      for (uint32_t l = 0; l < l_star; ++l) {
        combined[ki][l] = f.add(combined[ki][l], it->second[l]);
      }
    }
  }
  std::vector<uint32_t> out;
  out.reserve(gamma.size() * spans.size() * plan.D);
  for (size_t ki = 0; ki < gamma.size(); ++ki) {
    for (size_t g = 0; g < spans.size(); ++g) {
      const OmegaLayout& lay = *spans[g].layout;
      for (uint32_t d2 = 1; d2 <= lay.D; ++d2) {
        uint32_t acc = 0;
        for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
          const Cell& cell = lay.at(d1, d2);
          if (cell.kind != CellKind::Message) continue;
          uint32_t l = spans[g].offset + cell.index;
          acc = f.add(acc, f.mul(f.pow(psi, d1 - 1), combined[ki][l]));
        }
        out.push_back(acc);
      }
    }
  }
  return out;
}

std::vector<uint32_t> db_dropout_compensation(
    const Field& f, uint32_t c,
    const std::vector<const std::vector<uint32_t>*>& group_masks,
    const std::vector<uint32_t>& club, uint32_t n_submodels) {
  if (club.size() != n_submodels) {
    fail(ErrorCode::MissingCompensation, "silent group's club slot unavailable");
  }
  auto out = dropout_compensation_psu(f, c, group_masks, n_submodels);
  for (uint32_t k = 0; k < n_submodels; ++k) out[k] = f.add(out[k], club[k]);
  return out;
}

void repair_failed_database(const Field& f, DatabaseState& replacement,
                            const RsrcPlan& plan, uint32_t passes,
                            uint32_t n_submodels, const std::vector<uint32_t>& gamma,
                            const std::vector<uint32_t>& riders,
                            const std::vector<uint32_t>& helper_dbs,
                            const std::vector<uint32_t>& psis, uint32_t failed_db,
                            uint32_t a_adversary) {
  auto spans = instance_spans(plan, passes);
  uint32_t need = plan.D + 2 * a_adversary;
  if (helper_dbs.size() < need) {
    fail(ErrorCode::NotEnoughHelpers, "repair needs " + std::to_string(need) +
                                          " helpers, have " +
                                          std::to_string(helper_dbs.size()));
  }
  std::vector<uint32_t> stale;
  for (uint32_t k = 1; k <= n_submodels; ++k) {
    if (!contains(gamma, k)) stale.push_back(k);
  }
  size_t per_row = helper_dbs.size();
  if (riders.size() != stale.size() * spans.size() * per_row) {
    fail(ErrorCode::MissingShare, "rider share count mismatch");
  }
  if (replacement.store.size() < n_submodels) {
    replacement.store.resize(n_submodels);
  }
  size_t pos = 0;
  for (uint32_t k : stale) {
    if (replacement.store[k - 1].size() != spans.size()) {
      replacement.store[k - 1].assign(spans.size(), CodedRow{});
    }
    for (size_t g = 0; g < spans.size(); ++g) {
      std::vector<std::pair<uint32_t, uint32_t>> shares;
      shares.reserve(per_row);
      for (uint32_t h : helper_dbs) shares.push_back({h, riders[pos++]});
      CodedRow row;
      if (a_adversary == 0) {
        shares.resize(plan.D);
        row = repair_assemble(f, shares, psis, failed_db, plan.D,
                              static_cast<uint32_t>(g));
      } else {
        // Helper shares evaluate the polynomial whose coefficients are the
        // failed row, so the error-corrected coefficients are the row itself.
        std::vector<std::pair<uint32_t, uint32_t>> samples;
        for (const auto& [h, s] : shares) samples.push_back({psis[h - 1], s});
        row.db_index = failed_db;
        row.instance_id = static_cast<uint32_t>(g);
        row.symbols = adversary_decode_rs(f, samples, plan.D, a_adversary);
      }
      replacement.store[k - 1][g] = row;
    }
  }
  replacement.id = failed_db;
}

std::vector<uint32_t> adversary_decode_repetition(
    const std::vector<std::vector<uint32_t>>& copies, uint32_t a_adversary) {
  if (copies.empty()) fail(ErrorCode::NoMajority, "no copies to vote over");
  size_t len = copies.front().size();
  for (const auto& c : copies) {
    if (c.size() != len) fail(ErrorCode::InconsistentAnswer, "copy length mismatch");
  }
  std::vector<uint32_t> out(len);
  for (size_t i = 0; i < len; ++i) {
    uint32_t best = 0, best_count = 0;
    for (const auto& c : copies) {
      uint32_t count = 0;
      for (const auto& d : copies) count += (d[i] == c[i]);
      if (count > best_count) {
        best_count = count;
        best = c[i];
      }
    }
    if (best_count < a_adversary + 1) {
      fail(ErrorCode::NoMajority, "no symbol value reaches the honest majority");
    }
    out[i] = best;
  }
  return out;
}

std::vector<uint32_t> adversary_decode_rs(
    const Field& f, const std::vector<std::pair<uint32_t, uint32_t>>& samples,
    uint32_t D, uint32_t a_adversary) {
  size_t n = samples.size();
  if (n < D + a_adversary) {
    fail(ErrorCode::DecodingFailure, "too few samples to certify a codeword");
  }
  std::vector<uint32_t> pick(D);
  for (uint32_t i = 0; i < D; ++i) pick[i] = i;
  while (true) {
    Mat a(D, D);
    std::vector<uint32_t> rhs(D);
    bool singular = false;
    for (uint32_t r = 0; r < D; ++r) {
      uint32_t psi = samples[pick[r]].first;
      rhs[r] = samples[pick[r]].second;
      for (uint32_t j = 0; j < D; ++j) a.at(r, j) = f.pow(psi, j);
    }
    std::vector<uint32_t> coeffs;
    try {
      coeffs = solve(f, a, rhs);
    } catch (const FslError&) {
      singular = true;
    }
    if (!singular) {
      size_t agree = 0;
      for (const auto& [psi, value] : samples) {
        agree += (poly_eval(f, coeffs, psi) == value);
      }
      if (agree >= D + a_adversary) return coeffs;
    }
    // Next D-combination of sample indices, lexicographic.
    int i = static_cast<int>(D) - 1;
    while (i >= 0 && pick[i] == n - D + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (uint32_t j = i + 1; j < D; ++j) pick[j] = pick[j - 1] + 1;
  }
  fail(ErrorCode::DecodingFailure, "no polynomial explains enough samples");
}

}  // namespace rsfl
