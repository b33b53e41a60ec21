#include "rsfl/sim.hpp"

#include <algorithm>
#include <tuple>

#include "rsfl/codec.hpp"
#include "rsfl/matrix.hpp"

namespace rsfl {

namespace {

bool contains(const std::vector<uint32_t>& v, uint32_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string lbl(const std::string& base, uint64_t a) { return base + std::to_string(a); }
std::string lbl(const std::string& base, uint64_t a, const std::string& mid, uint64_t b) {
  return base + std::to_string(a) + mid + std::to_string(b);
}

uint64_t fnv_update(uint64_t h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// --- Eavesdropper observation model -----------------------------------------
//
// Every symbol the tapped set observes is an affine form over
//   [ M' (real cells) | nuisance ],
// nuisance being: increments of write-phase answerers, the hidden parts of the
// write masks (zero-sum encoded; the closing participant is eliminated), the
// stored randomness cells, the routers' fresh randomness cells, the hidden
// parts of the routing-club write slots (closing router eliminated), and one
// free column per adversary-corrupted observed symbol. Server-side plain
// randomness and the tapped databases' own randomness-generation contributions
// are constants of the view and fold into the row constant. Every emitted row
// is re-evaluated against the observed symbol; a mismatch aborts the round.
struct Witness {
  const Field* f = nullptr;
  uint32_t K = 0, L = 0;

  uint32_t a_cols = 0;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> delta_col;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> mask_col;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> oldr_col;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t>, uint32_t> fresh_col;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t>, uint32_t> club_col;
  uint32_t b_cols = 0;

  uint32_t elim_writer = 0;  // closing participant of the write-mask sets
  uint32_t elim_group = 0;   // closing router of the club-write sets
  std::vector<uint32_t> writers;     // mask-set participants, ascending
  std::vector<uint32_t> club_groups; // club-set participants, ascending

  std::vector<uint32_t> a_true, b_true;
  // mask/club values known to the tapped set (their own contributions).
  std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> mask_known;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t>, uint32_t> club_known;

  std::vector<std::vector<uint32_t>> rows_a, rows_b;
  std::vector<uint32_t> observed;

  struct Row {
    Witness* w;
    std::vector<uint32_t> a, b;
    uint32_t c = 0;

    void add_model(uint32_t k, uint32_t l, uint32_t coeff) {
      if (l >= w->L) return;  // padded cells are zero constants
      uint32_t col = (k - 1) * w->L + l;
      a[col] = w->f->add(a[col], coeff);
    }
    void add_delta(uint32_t client, uint32_t k, uint32_t l, uint32_t coeff) {
      auto it = w->delta_col.find({client, k, l});
      if (it == w->delta_col.end()) return;  // masked zero or padded cell
      b[it->second] = w->f->add(b[it->second], coeff);
    }
    void add_mask(uint32_t client, uint32_t k, uint32_t l, uint32_t coeff) {
      auto kn = w->mask_known.find({client, k, l});
      if (kn != w->mask_known.end()) c = w->f->add(c, w->f->mul(coeff, kn->second));
      if (client == w->elim_writer) {
        for (uint32_t other : w->writers) {
          if (other == client) continue;
          uint32_t col = w->mask_col.at({other, k, l});
          b[col] = w->f->add(b[col], w->f->neg(coeff));
        }
        return;
      }
      uint32_t col = w->mask_col.at({client, k, l});
      b[col] = w->f->add(b[col], coeff);
    }
    void add_old(uint32_t k, uint32_t g, uint32_t r, uint32_t coeff) {
      uint32_t col = w->oldr_col.at({k, g, r});
      b[col] = w->f->add(b[col], coeff);
    }
    void add_fresh(uint32_t grp, uint32_t k, uint32_t g, uint32_t r, uint32_t coeff) {
      uint32_t col = w->fresh_col.at({grp, k, g, r});
      b[col] = w->f->add(b[col], coeff);
    }
    void add_club(uint32_t grp, uint32_t k, uint32_t g, uint32_t d2, uint32_t coeff) {
      auto kn = w->club_known.find({grp, k, g, d2});
      if (kn != w->club_known.end()) c = w->f->add(c, w->f->mul(coeff, kn->second));
      if (grp == w->elim_group) {
        for (uint32_t other : w->club_groups) {
          if (other == grp) continue;
          uint32_t col = w->club_col.at({other, k, g, d2});
          b[col] = w->f->add(b[col], w->f->neg(coeff));
        }
        return;
      }
      uint32_t col = w->club_col.at({grp, k, g, d2});
      b[col] = w->f->add(b[col], coeff);
    }
    void add_const(uint32_t v) { c = w->f->add(c, v); }

    uint32_t predicted() const {
      uint32_t acc = c;
      for (size_t i = 0; i < a.size(); ++i) acc = w->f->add(acc, w->f->mul(a[i], w->a_true[i]));
      for (size_t i = 0; i < b.size(); ++i) acc = w->f->add(acc, w->f->mul(b[i], w->b_true[i]));
      return acc;
    }
  };

  Row row() {
    Row r;
    r.w = this;
    r.a.assign(a_cols, 0);
    r.b.assign(b_cols, 0);
    return r;
  }

  // `known_to_observer` marks symbols whose deviation from the honest form is
  // the observer's own doing (an adversarial tapped database); any other
  // deviation gets a fresh unconstrained nuisance column. Stored rows may be
  // shorter than b_cols; missing entries read as zero.
  void emit(Row& r, uint32_t value, bool known_to_observer) {
    uint32_t honest = r.predicted();
    if (honest != value) {
      uint32_t delta = f->sub(value, honest);
      if (known_to_observer) {
        r.c = f->add(r.c, delta);
      } else {
        r.b.resize(b_cols, 0);
        r.b.push_back(1);
        b_true.push_back(delta);
        ++b_cols;
      }
    }
    if (r.predicted() != value) {
      fail(ErrorCode::ProtocolAbort, "leakage model disagrees with an observed symbol");
    }
    rows_a.push_back(std::move(r.a));
    rows_b.push_back(std::move(r.b));
    observed.push_back(value);
  }

  LeakageDetail measure() const {
    size_t n = rows_a.size();
    Mat joint(n, a_cols + b_cols), nuis(n, b_cols);
    for (size_t i = 0; i < n; ++i) {
      for (uint32_t j = 0; j < a_cols; ++j) joint.at(i, j) = rows_a[i][j];
      for (size_t j = 0; j < rows_b[i].size(); ++j) {
        joint.at(i, a_cols + j) = rows_b[i][j];
        nuis.at(i, j) = rows_b[i][j];
      }
    }
    LeakageDetail d;
    d.rank_joint = static_cast<uint32_t>(rank(*f, joint));
    d.rank_nuisance = static_cast<uint32_t>(rank(*f, nuis));
    d.rows = static_cast<uint32_t>(n);
    d.model_cols = a_cols;
    d.nuisance_cols = b_cols;
    d.fraction = Rat(d.rank_joint - d.rank_nuisance, static_cast<int64_t>(K) * L);
    return d;
  }
};

// --- Round state --------------------------------------------------------------

struct World {
  ScenarioConfig cfg;  // resolved
  Field f;
  RsrcPlan plan;
  uint32_t passes = 0, l_star = 0, n_inst = 0;
  std::vector<SpanRef> spans;
  std::vector<uint32_t> psis;
  Mat psi_mat;

  std::vector<ClientState> clients;  // id i at [i-1]
  std::vector<DatabaseState> dbs;    // id n at [n-1]
  DatabaseState replacement;

  std::vector<std::vector<uint32_t>> model;                  // K x l_star, padded
  std::vector<std::vector<std::vector<uint32_t>>> old_rand;  // [k-1][g][r]

  uint32_t n_groups = 0;                     // N at A=0, J+1 buckets at A>0
  std::map<uint32_t, std::vector<uint32_t>> group_clients;  // group -> client ids
  std::vector<uint32_t> live_db_list;        // responsive databases, ascending
  std::vector<uint32_t> eligible;            // union-phase participants
  std::vector<uint32_t> senders;             // eligible minus dropped
  std::map<uint32_t, uint32_t> routers;      // group -> selected routing client
  std::vector<uint32_t> answering_groups;    // groups able to relay, ascending
  std::vector<uint32_t> writers;             // write-phase mask participants
  std::vector<uint32_t> committers;          // writers whose answers aggregate
  std::vector<uint32_t> late_writers;
  uint32_t designated_group = 0;             // embeds model + compensations
  uint32_t repair_group = 0;                 // forwards repair riders

  std::vector<uint32_t> gamma;

  CostMeter meter;
  std::vector<TranscriptLine> lines;
  uint64_t thash = 0xcbf29ce484222325ull;
  uint32_t step = 0;
  std::vector<std::string> events;
  std::map<std::pair<uint32_t, uint32_t>, std::vector<uint32_t>> replay_cache;

  bool union_decoded = false;
  bool router_masked_ok = true;  // aggregates equal answer sums plus plain CR
  bool write_committed = false;
  bool repaired = false;

  bool measuring = false;
  std::set<uint32_t> espy;
  Witness wit;

  World() : f(2) {}
};

enum class Phase { Crg, Psu, Write, Crr, Repair };

bool is_client_addr(uint32_t addr) { return addr >= kClientAddrBase; }

uint32_t bucket_width(const World& w) { return 2 * w.cfg.params.a_adversary + 1; }

std::vector<uint32_t> bucket_members(const World& w, uint32_t group) {
  if (w.cfg.params.a_adversary == 0) return {group};
  std::vector<uint32_t> out;
  uint32_t width = bucket_width(w);
  for (uint32_t t = 0; t < width; ++t) out.push_back((group - 1) * width + t + 1);
  return out;
}

bool db_live(const World& w, uint32_t db) {
  return db != w.cfg.faults.failed_db && !w.cfg.faults.dropped_dbs.count(db);
}

bool is_adversary(const World& w, uint32_t db) {
  return w.cfg.faults.adversary_set.count(db) > 0;
}

PhaseCost& bucket_of(World& w, Phase p) {
  switch (p) {
    case Phase::Crg: return w.meter.crg;
    case Phase::Psu: return w.meter.psu;
    case Phase::Write: return w.meter.write;
    case Phase::Crr: return w.meter.crr;
    case Phase::Repair: return w.meter.repair;
  }
  return w.meter.crg;
}

bool kind_corruptible(MessageKind k) {
  switch (k) {
    case MessageKind::DU2:
    case MessageKind::DW2:
    case MessageKind::DW1resp:
    case MessageKind::RepairShare:
    case MessageKind::CrBroadcast:
      return true;
    default:
      return false;
  }
}

// Puts a message on the wire: applies the adversary strategy to outbound
// database traffic, meters the symbols, and appends the transcript record.
// The returned message is what the receiver (and any tap) actually sees.
PhaseMessage send_message(World& w, PhaseMessage msg, Phase phase,
                          uint32_t rider_symbols = 0) {
  if (!is_client_addr(msg.sender) && is_adversary(w, msg.sender) &&
      kind_corruptible(msg.kind) && !msg.payload.empty()) {
    auto key = std::make_pair(msg.sender, static_cast<uint32_t>(msg.kind));
    std::vector<uint32_t> honest = msg.payload;
    switch (w.cfg.faults.strategy) {
      case CorruptionStrategy::Random: {
        Rng r = substream(w.cfg.seed, lbl("adv-d", msg.sender, "-s", w.step));
        for (auto& v : msg.payload) v = static_cast<uint32_t>(r.below(w.f.q()));
        break;
      }
      case CorruptionStrategy::TargetedFlip:
        msg.payload[0] = w.f.add(msg.payload[0], 1);
        break;
      case CorruptionStrategy::Replay: {
        auto it = w.replay_cache.find(key);
        std::vector<uint32_t> prev(msg.payload.size(), 0);
        if (it != w.replay_cache.end()) {
          prev = it->second;
          prev.resize(msg.payload.size(), 0);
        }
        msg.payload = prev;
        break;
      }
    }
    w.replay_cache[key] = honest;
  }

  PhaseCost& cost = bucket_of(w, phase);
  uint64_t n = msg.payload.size() - rider_symbols;
  if (is_client_addr(msg.sender) && !is_client_addr(msg.receiver)) {
    cost.uplink += n;
    if (rider_symbols) w.meter.repair.uplink += rider_symbols;
  } else if (!is_client_addr(msg.sender) && is_client_addr(msg.receiver)) {
    cost.downlink += n;
    if (rider_symbols) w.meter.repair.downlink += rider_symbols;
  }

  TranscriptLine line;
  line.step = ++w.step;
  line.kind = msg.kind;
  line.sender = msg.sender;
  line.receiver = msg.receiver;
  line.length = static_cast<uint32_t>(msg.payload.size());
  auto bytes = msg.serialize();
  line.payload_hash = fnv1a64(bytes.data(), bytes.size());
  uint32_t raw[4] = {line.step, static_cast<uint32_t>(line.kind), line.sender,
                     line.receiver};
  w.thash = fnv_update(w.thash, raw, sizeof(raw));
  w.thash = fnv_update(w.thash, &line.length, sizeof(line.length));
  w.thash = fnv_update(w.thash, &line.payload_hash, sizeof(line.payload_hash));
  if (w.cfg.record_transcript) w.lines.push_back(line);
  return msg;
}

// --- Configuration resolution -------------------------------------------------

void resolve_config(ScenarioConfig& cfg, const Field& f) {
  const SystemParams& p = cfg.params;
  const FaultConfig& ft = cfg.faults;
  if (ft.failed_db > p.n_databases) {
    fail(ErrorCode::ConfigError, "failed database id out of range");
  }
  if (ft.failed_db != 0 && ft.dropped_dbs.count(ft.failed_db)) {
    fail(ErrorCode::ConfigError, "a failed database cannot also be dropped");
  }
  for (uint32_t d : ft.dropped_dbs) {
    if (d < 1 || d > p.n_databases) fail(ErrorCode::ConfigError, "dropped database id out of range");
  }
  for (uint32_t c : ft.dropped_clients) {
    if (c < 1 || c > p.n_clients) fail(ErrorCode::ConfigError, "dropped client id out of range");
  }
  for (uint32_t c : ft.late_clients) {
    if (c < 1 || c > p.n_clients) fail(ErrorCode::ConfigError, "late client id out of range");
    if (ft.dropped_clients.count(c)) {
      fail(ErrorCode::ConfigError, "a client cannot be both dropped and late");
    }
  }
  if (!ft.adversary_set.empty() || p.a_adversary > 0) {
    if (ft.adversary_set.size() != p.a_adversary) {
      fail(ErrorCode::ConfigError, "adversary set size must equal A");
    }
    for (uint32_t d : ft.adversary_set) {
      if (d < 1 || d > p.n_databases) fail(ErrorCode::ConfigError, "adversary id out of range");
    }
  }
  if (!ft.eavesdropper_set.empty()) {
    if (ft.eavesdropper_set.size() != p.e_eavesdrop) {
      fail(ErrorCode::ConfigError, "eavesdropper set size must equal E");
    }
    for (uint32_t d : ft.eavesdropper_set) {
      if (d < 1 || d > p.n_databases) fail(ErrorCode::ConfigError, "eavesdropper id out of range");
    }
  }
  uint32_t live = 0;
  for (uint32_t d = 1; d <= p.n_databases; ++d) {
    if (d != ft.failed_db && !ft.dropped_dbs.count(d)) ++live;
  }
  uint32_t need = p.d_reconstruct + 2 * p.a_adversary;
  if (live < need) {
    fail(ErrorCode::ScenarioInfeasible,
         "fault set leaves fewer than D + 2A live databases");
  }
  if (p.a_adversary > 0) {
    for (uint32_t g : p.group_of) {
      if (g > p.j_collude + 1) {
        fail(ErrorCode::ScenarioInfeasible,
             "with adversaries, groups must map to the J+1 replication buckets");
      }
    }
  }

  // Seeded choices are resolved here so the report can echo them.
  if (!cfg.gammas_given && cfg.gammas.empty()) {
    for (uint32_t i = 1; i <= p.n_clients; ++i) {
      Rng r = substream(cfg.seed, lbl("gamma-c", i));
      std::vector<uint32_t> g;
      for (uint32_t k = 1; k <= p.n_submodels; ++k) {
        if (r.below(2) == 1) g.push_back(k);
      }
      cfg.gammas[i] = g;
    }
  }
  for (auto& [i, g] : cfg.gammas) {
    if (i < 1 || i > p.n_clients) fail(ErrorCode::ConfigError, "gamma client id out of range");
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    for (uint32_t k : g) {
      if (k < 1 || k > p.n_submodels) fail(ErrorCode::ConfigError, "gamma submodel out of range");
    }
  }
  for (uint32_t i = 1; i <= p.n_clients; ++i) {
    auto git = cfg.gammas.find(i);
    if (git == cfg.gammas.end()) continue;
    for (uint32_t k : git->second) {
      auto& per = cfg.increments[i];
      auto dit = per.find(k);
      if (dit == per.end()) {
        Rng r = substream(cfg.seed, lbl("delta-c", i, "-k", k));
        std::vector<uint32_t> d(p.sub_len);
        for (auto& v : d) v = static_cast<uint32_t>(r.below(f.q()));
        per[k] = d;
      } else if (dit->second.size() != p.sub_len) {
        fail(ErrorCode::ConfigError, "increment length must equal L");
      } else {
        for (uint32_t v : dit->second) {
          if (v >= f.q()) fail(ErrorCode::ConfigError, "increment symbol out of field range");
        }
      }
    }
  }
  if (cfg.model.empty()) {
    cfg.model.assign(p.n_submodels, std::vector<uint32_t>(p.sub_len, 0));
    Rng r = substream(cfg.seed, "model");
    for (auto& row : cfg.model) {
      for (auto& v : row) v = static_cast<uint32_t>(r.below(f.q()));
    }
  } else {
    if (cfg.model.size() != p.n_submodels) fail(ErrorCode::ConfigError, "model must have K rows");
    for (auto& row : cfg.model) {
      if (row.size() != p.sub_len) fail(ErrorCode::ConfigError, "model rows must have L symbols");
      for (uint32_t v : row) {
        if (v >= f.q()) fail(ErrorCode::ConfigError, "model symbol out of field range");
      }
    }
  }
}

void setup_world(World& w) {
  const SystemParams& p = w.cfg.params;
  w.f = Field(p.modulus);
  w.plan = plan_from_spec(w.cfg.plan, p.d_reconstruct);
  auto chunks = chunk_map(w.plan, p.sub_len);
  w.passes = chunks.passes;
  w.l_star = chunks.padded_len;
  w.spans = instance_spans(w.plan, w.passes);
  w.n_inst = static_cast<uint32_t>(w.spans.size());
  w.psis = default_psis(p.n_databases);
  w.psi_mat = vandermonde(w.f, w.psis, p.d_reconstruct);

  w.n_groups = p.a_adversary == 0 ? p.n_databases : p.j_collude + 1;

  w.clients.resize(p.n_clients);
  for (uint32_t i = 1; i <= p.n_clients; ++i) {
    ClientState& c = w.clients[i - 1];
    c.id = i;
    c.group = p.group_of[i - 1];
    auto git = w.cfg.gammas.find(i);
    if (git != w.cfg.gammas.end()) c.gamma = git->second;
    c.incidence.assign(p.n_submodels, 0);
    for (uint32_t k : c.gamma) c.incidence[k - 1] = 1;
    for (uint32_t k : c.gamma) {
      std::vector<uint32_t> padded = w.cfg.increments.at(i).at(k);
      padded.resize(w.l_star, 0);
      c.increments[k] = padded;
    }
  }

  // Plain server-side randomness: dealer-initialized, identical on every
  // database; the refresh phase replaces consumed entries at round end.
  std::vector<uint32_t> cr_union(p.n_submodels);
  Rng du = substream(w.cfg.seed, "dealer-union");
  for (auto& v : cr_union) v = static_cast<uint32_t>(du.below(w.f.q()));
  std::vector<std::vector<uint32_t>> cr_write(p.n_submodels,
                                              std::vector<uint32_t>(w.l_star));
  Rng dw = substream(w.cfg.seed, "dealer-write");
  for (auto& row : cr_write) {
    for (auto& v : row) v = static_cast<uint32_t>(dw.below(w.f.q()));
  }

  w.model.assign(p.n_submodels, std::vector<uint32_t>(w.l_star, 0));
  for (uint32_t k = 1; k <= p.n_submodels; ++k) {
    for (uint32_t l = 0; l < p.sub_len; ++l) w.model[k - 1][l] = w.cfg.model[k - 1][l];
  }
  w.old_rand.resize(p.n_submodels);

  w.dbs.resize(p.n_databases);
  for (uint32_t n = 1; n <= p.n_databases; ++n) {
    DatabaseState& db = w.dbs[n - 1];
    db.id = n;
    db.cr_union = cr_union;
    db.cr_write = cr_write;
    db.store.assign(p.n_submodels, {});
  }
  for (uint32_t k = 1; k <= p.n_submodels; ++k) {
    w.old_rand[k - 1].resize(w.n_inst);
    Rng rr = substream(w.cfg.seed, lbl("storage-rand-k", k));
    for (uint32_t g = 0; g < w.n_inst; ++g) {
      const OmegaLayout& lay = *w.spans[g].layout;
      OmegaInstance inst;
      inst.layout = lay;
      inst.message_values.assign(lay.B, 0);
      for (uint32_t b = 0; b < lay.B; ++b) {
        inst.message_values[b] = w.model[k - 1][w.spans[g].offset + b];
      }
      inst.randomness_values.assign(lay.R, 0);
      for (auto& v : inst.randomness_values) v = static_cast<uint32_t>(rr.below(w.f.q()));
      w.old_rand[k - 1][g] = inst.randomness_values;
      auto rows = encode_instance(w.f, inst, w.psi_mat, g);
      for (uint32_t n = 1; n <= p.n_databases; ++n) {
        w.dbs[n - 1].store[k - 1].push_back(rows[n - 1]);
      }
    }
  }

  for (uint32_t d = 1; d <= p.n_databases; ++d) {
    if (db_live(w, d)) w.live_db_list.push_back(d);
  }

  // Union-phase population: the failed database is announced, so its group
  // idles (with buckets a single failure never silences a whole group).
  for (uint32_t i = 1; i <= p.n_clients; ++i) {
    uint32_t g = w.clients[i - 1].group;
    bool functional = true;
    if (p.a_adversary == 0) {
      functional = g != w.cfg.faults.failed_db;
    } else {
      uint32_t alive = 0;
      for (uint32_t m : bucket_members(w, g)) alive += (m != w.cfg.faults.failed_db);
      functional = alive > 0;
    }
    if (functional) {
      w.eligible.push_back(i);
      w.group_clients[g].push_back(i);
      if (!w.cfg.faults.dropped_clients.count(i)) w.senders.push_back(i);
    }
  }

  for (auto& [g, members] : w.group_clients) {
    std::vector<uint32_t> candidates;
    for (uint32_t i : members) {
      if (!w.cfg.faults.dropped_clients.count(i) && !w.cfg.faults.late_clients.count(i)) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) continue;
    auto ov = w.cfg.router_override.find(g);
    if (ov != w.cfg.router_override.end()) {
      if (!contains(candidates, ov->second)) {
        fail(ErrorCode::ConfigError, "router override names an unavailable client");
      }
      w.routers[g] = ov->second;
      continue;
    }
    Rng r = substream(w.cfg.seed, lbl("router-g", g));
    for (size_t t = candidates.size(); t > 1; --t) {
      std::swap(candidates[t - 1], candidates[r.below(t)]);
    }
    w.routers[g] = candidates[0];
  }

  if (w.cfg.faults.failed_db != 0) {
    w.replacement.id = w.cfg.faults.failed_db;
    w.replacement.cr_union = cr_union;
    w.replacement.cr_write = cr_write;
    w.replacement.store.assign(p.n_submodels,
                               std::vector<CodedRow>(w.n_inst, CodedRow{}));
    w.events.push_back("database " + std::to_string(w.cfg.faults.failed_db) +
                       " failed before the round; replacement commissioned");
  }
  for (uint32_t d : w.cfg.faults.dropped_dbs) {
    w.events.push_back("database " + std::to_string(d) + " silent from the union phase on");
  }

  if (!w.cfg.faults.eavesdropper_set.empty() && w.cfg.measure_leakage) {
    w.measuring = true;
    w.espy = w.cfg.faults.eavesdropper_set;
  }
}

// --- Common randomness generation ----------------------------------------------

struct CrgSetPlan {
  // Zero-sum sets over `participants`; each contributor draws |participants|-1
  // symbols per set. Sets are identified by flat index.
  std::vector<uint32_t> participants;
  uint32_t n_sets = 0;
};

// Contributor tapes for one pass: rows[contributor][set] has set_len-1 values,
// club_rows likewise over the club participants, factors only in pass 1.
struct CrgDraws {
  std::vector<uint32_t> contributors;  // group/bucket indices (A>0) or db ids
  std::vector<std::vector<std::vector<uint32_t>>> rows, club_rows;
  std::vector<uint32_t> factors;
};

CrgDraws crg_draw(World& w, uint32_t pass, const CrgSetPlan& sets, const CrgSetPlan& clubs,
                  bool with_scalar, const std::vector<uint32_t>& contributors) {
  CrgDraws d;
  d.contributors = contributors;
  d.rows.resize(contributors.size());
  d.club_rows.resize(contributors.size());
  for (size_t c = 0; c < contributors.size(); ++c) {
    Rng tape = substream(w.cfg.seed, lbl("crg", pass, "-b", contributors[c]));
    d.rows[c].assign(sets.n_sets, {});
    uint32_t width = sets.participants.empty() ? 0
                     : static_cast<uint32_t>(sets.participants.size()) - 1;
    for (uint32_t s = 0; s < sets.n_sets; ++s) {
      d.rows[c][s].resize(width);
      for (auto& v : d.rows[c][s]) v = static_cast<uint32_t>(tape.below(w.f.q()));
    }
    d.club_rows[c].assign(clubs.n_sets, {});
    uint32_t cwidth = clubs.participants.empty() ? 0
                      : static_cast<uint32_t>(clubs.participants.size()) - 1;
    for (uint32_t s = 0; s < clubs.n_sets; ++s) {
      d.club_rows[c][s].resize(cwidth);
      for (auto& v : d.club_rows[c][s]) v = static_cast<uint32_t>(tape.below(w.f.q()));
    }
    if (with_scalar) d.factors.push_back(1 + static_cast<uint32_t>(tape.below(w.f.q() - 1)));
  }
  return d;
}

// Broadcast legs: full rows to every routing client and to the closing
// participant, one symbol per set to everyone else, scalar factors to all.
// With buckets each live member transmits an identical copy.
void crg_distribute(World& w, uint32_t pass, const CrgSetPlan& sets, const CrgSetPlan& clubs,
                    const CrgDraws& d, const std::vector<uint32_t>& router_clients) {
  uint32_t n_part = static_cast<uint32_t>(sets.participants.size());
  for (size_t c = 0; c < d.contributors.size(); ++c) {
    std::vector<uint32_t> srcs;
    if (w.cfg.params.a_adversary == 0) {
      srcs = {d.contributors[c]};
    } else {
      for (uint32_t m : bucket_members(w, d.contributors[c])) {
        bool live_now = m != w.cfg.faults.failed_db &&
                        (pass == 1 || !w.cfg.faults.dropped_dbs.count(m));
        if (live_now) srcs.push_back(m);
      }
    }
    for (uint32_t idx = 0; idx < n_part; ++idx) {
      uint32_t client = sets.participants[idx];
      bool full = contains(router_clients, client) || idx + 1 == n_part;
      PhaseMessage msg;
      msg.kind = MessageKind::CrBroadcast;
      msg.receiver = client_addr(client);
      for (uint32_t s = 0; s < sets.n_sets; ++s) {
        if (full) {
          msg.payload.insert(msg.payload.end(), d.rows[c][s].begin(), d.rows[c][s].end());
        } else if (idx < n_part - 1) {
          msg.payload.push_back(d.rows[c][s][idx]);
        }
      }
      if (contains(router_clients, client)) {
        for (uint32_t s = 0; s < clubs.n_sets; ++s) {
          msg.payload.insert(msg.payload.end(), d.club_rows[c][s].begin(),
                             d.club_rows[c][s].end());
        }
      }
      if (!d.factors.empty()) msg.payload.push_back(d.factors[c]);
      for (uint32_t src : srcs) {
        msg.sender = src;
        send_message(w, msg, Phase::Crg);
      }
    }
  }
}

// The assembled zero-sum sets; element order follows the participant order.
std::vector<std::vector<uint32_t>> crg_assemble(World& w, const CrgSetPlan& plan,
                                                const std::vector<std::vector<std::vector<uint32_t>>>& rows) {
  std::vector<std::vector<uint32_t>> sets(plan.n_sets);
  uint32_t n_contrib = static_cast<uint32_t>(rows.size());
  for (uint32_t s = 0; s < plan.n_sets; ++s) {
    std::vector<std::vector<uint32_t>> contributions;
    for (uint32_t c = 0; c < n_contrib; ++c) contributions.push_back(rows[c][s]);
    sets[s] = crg_zero_sum_set(w.f, contributions, n_contrib);
  }
  return sets;
}

void crg_pass1(World& w) {
  const SystemParams& p = w.cfg.params;
  if (w.eligible.empty()) return;
  std::vector<uint32_t> contributors;
  if (p.a_adversary > 0) {
    for (uint32_t b = 1; b <= p.j_collude + 1; ++b) contributors.push_back(b);
  } else {
    for (uint32_t d = 1; d <= p.n_databases && contributors.size() < p.j_collude + 1; ++d) {
      if (d != w.cfg.faults.failed_db) contributors.push_back(d);
    }
  }
  if (contributors.size() < p.j_collude + 1) {
    fail(ErrorCode::ProtocolAbort, "fewer than J+1 randomness contributors remain");
  }

  CrgSetPlan sets;
  sets.participants = w.eligible;
  sets.n_sets = p.n_submodels;
  CrgSetPlan clubs;
  for (auto& [g, r] : w.routers) clubs.participants.push_back(r);
  clubs.n_sets = p.n_submodels;

  auto draws = crg_draw(w, 1, sets, clubs, true, contributors);
  crg_distribute(w, 1, sets, clubs, draws, clubs.participants);

  auto mask_sets = crg_assemble(w, sets, draws.rows);
  for (uint32_t idx = 0; idx < sets.participants.size(); ++idx) {
    ClientState& c = w.clients[sets.participants[idx] - 1];
    c.mask_union.assign(p.n_submodels, 0);
    for (uint32_t k = 0; k < p.n_submodels; ++k) c.mask_union[k] = mask_sets[k][idx];
    c.scalar_c = crg_scalar_c(w.f, draws.factors);
  }
  auto club_sets = crg_assemble(w, clubs, draws.club_rows);
  uint32_t ridx = 0;
  for (auto& [g, r] : w.routers) {
    ClientState& c = w.clients[r - 1];
    c.club_union.assign(p.n_submodels, 0);
    for (uint32_t k = 0; k < p.n_submodels; ++k) c.club_union[k] = club_sets[k][ridx];
    ++ridx;
  }
}

void crg_pass2(World& w) {
  const SystemParams& p = w.cfg.params;
  if (w.gamma.empty() || w.writers.empty()) return;
  std::vector<uint32_t> contributors;
  if (p.a_adversary > 0) {
    for (uint32_t b = 1; b <= p.j_collude + 1; ++b) contributors.push_back(b);
  } else {
    for (uint32_t d : w.live_db_list) {
      if (contributors.size() < p.j_collude + 1) contributors.push_back(d);
    }
  }
  if (contributors.size() < p.j_collude + 1) {
    fail(ErrorCode::ProtocolAbort, "fewer than J+1 randomness contributors remain");
  }

  CrgSetPlan sets;
  sets.participants = w.writers;
  sets.n_sets = static_cast<uint32_t>(w.gamma.size()) * w.l_star;
  CrgSetPlan clubs;
  for (uint32_t g : w.answering_groups) clubs.participants.push_back(w.routers.at(g));
  uint32_t amc_total = 0;
  for (uint32_t g = 0; g < w.n_inst; ++g) {
    amc_total += static_cast<uint32_t>(w.spans[g].layout->all_message_columns().size());
  }
  clubs.n_sets = static_cast<uint32_t>(w.gamma.size()) * amc_total;

  auto draws = crg_draw(w, 2, sets, clubs, false, contributors);
  crg_distribute(w, 2, sets, clubs, draws, clubs.participants);

  auto mask_sets = crg_assemble(w, sets, draws.rows);
  for (uint32_t idx = 0; idx < sets.participants.size(); ++idx) {
    ClientState& c = w.clients[sets.participants[idx] - 1];
    for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
      std::vector<uint32_t> m(w.l_star);
      for (uint32_t l = 0; l < w.l_star; ++l) {
        m[l] = mask_sets[ki * w.l_star + l][idx];
      }
      c.mask_write[w.gamma[ki]] = m;
    }
  }
  auto club_sets = crg_assemble(w, clubs, draws.club_rows);
  for (uint32_t ridx = 0; ridx < clubs.participants.size(); ++ridx) {
    ClientState& c = w.clients[clubs.participants[ridx] - 1];
    uint32_t s = 0;
    for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        for (uint32_t d2 : w.spans[g].layout->all_message_columns()) {
          c.club_write[{w.gamma[ki], g, d2}] = club_sets[s][ridx];
          ++s;
        }
      }
    }
  }

  if (w.measuring) {
    // Split each participant's mask into the part the tapped set can derive
    // from its own contributions and the hidden remainder.
    std::vector<size_t> known;
    for (size_t c = 0; c < contributors.size(); ++c) {
      bool tapped = false;
      if (p.a_adversary == 0) {
        tapped = w.espy.count(contributors[c]) > 0;
      } else {
        for (uint32_t m : bucket_members(w, contributors[c])) tapped |= w.espy.count(m) > 0;
      }
      if (tapped) known.push_back(c);
    }
    if (!known.empty()) {
      auto part_value = [&](const CrgSetPlan& sp,
                            const std::vector<std::vector<std::vector<uint32_t>>>& rows,
                            uint32_t s, uint32_t idx) {
        uint32_t v = 0;
        for (size_t c : known) {
          if (idx + 1 < sp.participants.size()) {
            v = w.f.add(v, rows[c][s][idx]);
          } else {
            for (uint32_t u = 0; u + 1 < sp.participants.size(); ++u) {
              v = w.f.sub(v, rows[c][s][u]);
            }
          }
        }
        return v;
      };
      for (uint32_t idx = 0; idx < sets.participants.size(); ++idx) {
        for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
          for (uint32_t l = 0; l < w.l_star; ++l) {
            w.wit.mask_known[{sets.participants[idx], w.gamma[ki], l}] =
                part_value(sets, draws.rows, static_cast<uint32_t>(ki) * w.l_star + l, idx);
          }
        }
      }
      for (uint32_t ridx = 0; ridx < clubs.participants.size(); ++ridx) {
        uint32_t grp = w.answering_groups[ridx];
        uint32_t s = 0;
        for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
          for (uint32_t g = 0; g < w.n_inst; ++g) {
            for (uint32_t d2 : w.spans[g].layout->all_message_columns()) {
              w.wit.club_known[{grp, w.gamma[ki], g, d2}] =
                  part_value(clubs, draws.club_rows, s, ridx);
              ++s;
            }
          }
        }
      }
    }
  }
}

// --- Union phase ----------------------------------------------------------------

void psu_phase(World& w) {
  const SystemParams& p = w.cfg.params;
  if (w.senders.empty() && w.cfg.faults.late_clients.empty()) {
    w.events.push_back("no responsive clients; skipping the round");
    return;
  }

  // AU1: answers to every (live or silently dropped) group database.
  std::map<uint32_t, std::vector<PhaseMessage>> arrived;  // db -> answers in time
  std::vector<uint32_t> late_senders;
  for (uint32_t i : w.eligible) {
    if (w.cfg.faults.dropped_clients.count(i)) continue;
    if (w.cfg.faults.late_clients.count(i)) {
      late_senders.push_back(i);
      continue;
    }
    PhaseMessage base = psu_client_answer(w.f, w.clients[i - 1]);
    for (uint32_t m : bucket_members(w, w.clients[i - 1].group)) {
      if (m == w.cfg.faults.failed_db) continue;
      PhaseMessage msg = base;
      msg.receiver = m;
      PhaseMessage wire = send_message(w, msg, Phase::Psu);
      if (db_live(w, m)) arrived[m].push_back(wire);
    }
  }

  // DU2: each live group member aggregates what arrived in time.
  std::map<uint32_t, std::vector<std::vector<uint32_t>>> du2_copies;  // group -> copies
  std::map<uint32_t, uint32_t> first_live_member;
  for (auto& [g, router] : w.routers) {
    for (uint32_t m : bucket_members(w, g)) {
      if (!db_live(w, m)) continue;
      if (!first_live_member.count(g)) first_live_member[g] = m;
      std::vector<const PhaseMessage*> ptrs;
      for (const auto& a : arrived[m]) ptrs.push_back(&a);
      PhaseMessage du2 = psu_db_aggregate(w.f, w.dbs[m - 1], ptrs, router);
      PhaseMessage wire = send_message(w, du2, Phase::Psu);
      du2_copies[g].push_back(wire.payload);
    }
  }

  // Late answers reach the wire after the aggregation read.
  if (!late_senders.empty()) {
    w.step += w.cfg.faults.late_delay;
    for (uint32_t i : late_senders) {
      PhaseMessage base = psu_client_answer(w.f, w.clients[i - 1]);
      for (uint32_t m : bucket_members(w, w.clients[i - 1].group)) {
        if (m == w.cfg.faults.failed_db) continue;
        PhaseMessage msg = base;
        msg.receiver = m;
        send_message(w, msg, Phase::Psu);
      }
      w.events.push_back("client " + std::to_string(i) +
                         " answered after aggregation; treated as dropped");
    }
  }

  for (auto& [g, copies] : du2_copies) {
    if (!copies.empty()) w.answering_groups.push_back(g);
  }
  std::sort(w.answering_groups.begin(), w.answering_groups.end());
  if (w.answering_groups.empty()) {
    w.events.push_back("no group aggregate reached a routing client; empty union");
    return;
  }
  w.designated_group = w.answering_groups.front();
  w.repair_group = w.answering_groups.back();

  // AU2: voted aggregate plus club slot; the router also folds in the masks of
  // its own group's silent clients, and the designated router covers wholly
  // silent groups, so the zero sums close without extra traffic.
  uint32_t scalar_c = w.clients[w.eligible.front() - 1].scalar_c;
  std::map<uint32_t, std::vector<PhaseMessage>> au2_inbox;  // db -> answers
  for (uint32_t g : w.answering_groups) {
    uint32_t router = w.routers.at(g);
    std::vector<uint32_t> du2 =
        adversary_decode_repetition(du2_copies[g], p.a_adversary);

    {
      // The voted aggregate must equal the in-time answers plus plain CR.
      uint32_t m0 = first_live_member.at(g);
      std::vector<uint32_t> expect = w.dbs[m0 - 1].cr_union;
      for (const auto& a : arrived[m0]) {
        for (uint32_t k = 0; k < p.n_submodels; ++k) {
          expect[k] = w.f.add(expect[k], a.payload[k]);
        }
      }
      if (expect != du2) w.router_masked_ok = false;
    }

    std::vector<const std::vector<uint32_t>*> missing;
    for (uint32_t i : w.group_clients[g]) {
      if (w.cfg.faults.dropped_clients.count(i) || w.cfg.faults.late_clients.count(i)) {
        missing.push_back(&w.clients[i - 1].mask_union);
        w.events.push_back("router " + std::to_string(router) +
                           " compensated silent client " + std::to_string(i));
      }
    }
    std::vector<uint32_t> comp =
        dropout_compensation_psu(w.f, scalar_c, missing, p.n_submodels);

    if (g == w.designated_group) {
      for (auto& [sg, members] : w.group_clients) {
        if (contains(w.answering_groups, sg)) continue;
        std::vector<const std::vector<uint32_t>*> grp;
        for (uint32_t i : members) grp.push_back(&w.clients[i - 1].mask_union);
        auto rit = w.routers.find(sg);
        std::vector<uint32_t> extra;
        if (rit != w.routers.end()) {
          extra = db_dropout_compensation(w.f, scalar_c, grp,
                                          w.clients[rit->second - 1].club_union,
                                          p.n_submodels);
        } else {
          extra = dropout_compensation_psu(w.f, scalar_c, grp, p.n_submodels);
        }
        for (uint32_t k = 0; k < p.n_submodels; ++k) comp[k] = w.f.add(comp[k], extra[k]);
        w.events.push_back("router " + std::to_string(router) +
                           " compensated silent group " + std::to_string(sg));
      }
    }

    for (uint32_t target : w.live_db_list) {
      PhaseMessage au2 = psu_route_answer(w.f, w.clients[router - 1], du2, target);
      for (uint32_t k = 0; k < p.n_submodels; ++k) {
        au2.payload[k] = w.f.add(au2.payload[k], comp[k]);
      }
      PhaseMessage wire = send_message(w, au2, Phase::Psu);
      au2_inbox[target].push_back(wire);
    }
  }

  bool first = true;
  for (uint32_t d : w.live_db_list) {
    std::vector<const PhaseMessage*> ptrs;
    for (const auto& a : au2_inbox[d]) ptrs.push_back(&a);
    std::vector<uint32_t> g = psu_decode_union(w.f, w.dbs[d - 1], ptrs);
    if (first) {
      w.gamma = g;
      first = false;
    } else if (g != w.gamma) {
      fail(ErrorCode::ProtocolAbort, "databases decoded different unions");
    }
  }
  w.union_decoded = true;

  // Union announcement: metadata only, no symbols.
  for (auto& [g, members] : w.group_clients) {
    uint32_t speaker = 0;
    for (uint32_t m : bucket_members(w, g)) {
      if (db_live(w, m)) { speaker = m; break; }
    }
    if (speaker == 0) continue;
    for (uint32_t i : members) {
      PhaseMessage ann;
      ann.kind = MessageKind::GammaAnnounce;
      ann.sender = speaker;
      ann.receiver = client_addr(i);
      ann.meta = w.gamma;
      send_message(w, ann, Phase::Psu);
    }
  }
  if (w.cfg.faults.failed_db != 0) {
    PhaseMessage ann;
    ann.kind = MessageKind::GammaAnnounce;
    ann.sender = client_addr(w.routers.at(w.repair_group));
    ann.receiver = w.cfg.faults.failed_db;
    ann.meta = w.gamma;
    send_message(w, ann, Phase::Psu);
  }

  // Write-phase population: groups that answered, minus clients already
  // observed silent during the union phase.
  for (uint32_t g : w.answering_groups) {
    for (uint32_t i : w.group_clients[g]) {
      if (w.cfg.faults.dropped_clients.count(i)) continue;
      w.writers.push_back(i);
      if (w.cfg.faults.late_clients.count(i)) {
        w.late_writers.push_back(i);
      } else {
        w.committers.push_back(i);
      }
    }
  }
  std::sort(w.writers.begin(), w.writers.end());
  std::sort(w.committers.begin(), w.committers.end());
  std::sort(w.late_writers.begin(), w.late_writers.end());
}

// --- Witness assembly helpers ---------------------------------------------------

void witness_init(World& w) {
  Witness& wit = w.wit;
  wit.f = &w.f;
  wit.K = w.cfg.params.n_submodels;
  wit.L = w.cfg.params.sub_len;
  wit.a_cols = wit.K * wit.L;
  wit.a_true.assign(wit.a_cols, 0);
  for (uint32_t k = 1; k <= wit.K; ++k) {
    for (uint32_t l = 0; l < wit.L; ++l) {
      uint32_t v = w.model[k - 1][l];
      for (uint32_t i : w.committers) {
        const ClientState& c = w.clients[i - 1];
        if (contains(c.gamma, k) && contains(w.gamma, k)) {
          v = w.f.add(v, c.increments.at(k)[l]);
        }
      }
      wit.a_true[(k - 1) * wit.L + l] = v;
    }
  }

  auto add_b = [&](uint32_t value) {
    wit.b_true.push_back(value);
    return wit.b_cols++;
  };
  for (uint32_t i : w.writers) {
    const ClientState& c = w.clients[i - 1];
    for (uint32_t k : w.gamma) {
      if (!contains(c.gamma, k)) continue;
      for (uint32_t l = 0; l < wit.L; ++l) {
        wit.delta_col[{i, k, l}] = add_b(c.increments.at(k)[l]);
      }
    }
  }
  wit.writers = w.writers;
  wit.elim_writer = w.writers.empty() ? 0 : w.writers.back();
  for (uint32_t i : w.writers) {
    if (i == wit.elim_writer) continue;
    const ClientState& c = w.clients[i - 1];
    for (uint32_t k : w.gamma) {
      for (uint32_t l = 0; l < w.l_star; ++l) {
        uint32_t hidden = c.mask_write.at(k)[l];
        auto kn = wit.mask_known.find({i, k, l});
        if (kn != wit.mask_known.end()) hidden = w.f.sub(hidden, kn->second);
        wit.mask_col[{i, k, l}] = add_b(hidden);
      }
    }
  }
  for (uint32_t k = 1; k <= wit.K; ++k) {
    for (uint32_t g = 0; g < w.n_inst; ++g) {
      for (uint32_t r = 0; r < w.spans[g].layout->R; ++r) {
        wit.oldr_col[{k, g, r}] = add_b(w.old_rand[k - 1][g][r]);
      }
    }
  }
  wit.club_groups = w.answering_groups;
  wit.elim_group = w.answering_groups.empty() ? 0 : w.answering_groups.back();
  // Fresh router randomness columns are registered when the write phase draws
  // them; club columns exist for every non-closing answering router.
  for (uint32_t g : w.answering_groups) {
    if (g == wit.elim_group) continue;
    const ClientState& r = w.clients[w.routers.at(g) - 1];
    for (uint32_t k : w.gamma) {
      for (uint32_t u = 0; u < w.n_inst; ++u) {
        for (uint32_t d2 : w.spans[u].layout->all_message_columns()) {
          uint32_t hidden = r.club_write.at({k, u, d2});
          auto kn = wit.club_known.find({g, k, u, d2});
          if (kn != wit.club_known.end()) hidden = w.f.sub(hidden, kn->second);
          wit.club_col[{g, k, u, d2}] = add_b(hidden);
        }
      }
    }
  }
}

// Affine form of one stored pre-round symbol (row psi, instance g, column d2).
void stored_row_terms(World& w, Witness::Row& r, uint32_t k, uint32_t g, uint32_t d2,
                      uint32_t psi, uint32_t scale) {
  const OmegaLayout& lay = *w.spans[g].layout;
  for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
    uint32_t coeff = w.f.mul(scale, w.f.pow(psi, d1 - 1));
    const Cell& cell = lay.at(d1, d2);
    if (cell.kind == CellKind::Message) {
      uint32_t l = w.spans[g].offset + cell.index;
      r.add_model(k, l, coeff);
      if (contains(w.gamma, k)) {
        for (uint32_t i : w.committers) {
          r.add_delta(i, k, l, w.f.neg(coeff));
        }
      }
    } else {
      r.add_old(k, g, cell.index, coeff);
    }
  }
}

void witness_snapshot(World& w, bool start) {
  for (uint32_t d : w.espy) {
    bool replacement_tap = d == w.cfg.faults.failed_db;
    if (replacement_tap && (start || !w.repaired)) continue;  // nothing stored yet
    const DatabaseState& db = replacement_tap ? w.replacement : w.dbs[d - 1];
    // Dropped databases miss the commit; their end snapshot repeats the start
    // form. The repaired rows of the replacement carry the failed database's
    // original content, so the start form applies there too.
    bool committed = !start && w.write_committed &&
                     (db_live(w, d) || replacement_tap);
    for (uint32_t k = 1; k <= w.cfg.params.n_submodels; ++k) {
      bool updated = committed && contains(w.gamma, k);
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        const OmegaLayout& lay = *w.spans[g].layout;
        for (uint32_t d2 = 1; d2 <= lay.D; ++d2) {
          Witness::Row r = w.wit.row();
          if (!updated) {
            stored_row_terms(w, r, k, g, d2, w.psis[d - 1], 1);
          } else {
            // Committed symbol: message cells now carry M', randomness cells
            // the sum of the answering routers' fresh draws.
            for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
              uint32_t coeff = w.f.pow(w.psis[d - 1], d1 - 1);
              const Cell& cell = lay.at(d1, d2);
              if (cell.kind == CellKind::Message) {
                r.add_model(k, w.spans[g].offset + cell.index, coeff);
              } else {
                for (uint32_t ag : w.answering_groups) {
                  r.add_fresh(ag, k, g, cell.index, coeff);
                }
              }
            }
          }
          w.wit.emit(r, db.store[k - 1][g].symbols[d2 - 1], false);
        }
      }
    }
  }
}

// --- Write phase ------------------------------------------------------------------

struct WriteState {
  std::map<uint32_t, std::vector<PhaseMessage>> aw1_arrived;  // db -> in-time answers
  std::map<uint32_t, std::vector<uint32_t>> aw1_senders;      // db -> client ids
  std::map<uint32_t, std::vector<uint32_t>> dw2;              // group -> voted aggregate
  std::map<uint32_t, std::vector<PhaseMessage>> aw2_inbox;    // db -> coded answers
  std::vector<uint32_t> riders;
  std::vector<uint32_t> helper_dbs;
};

void write_downloads(World& w) {
  const SystemParams& p = w.cfg.params;
  auto positions = write_read_positions(w.plan, w.passes, w.gamma, w.live_db_list,
                                        p.a_adversary);
  std::vector<uint32_t> readers = w.writers;
  for (uint32_t i : readers) {
    // One request/response bundle per database touched by the schedule.
    std::map<uint32_t, std::vector<ReadPosition>> per_db;
    for (const auto& pos : positions) per_db[pos.db].push_back(pos);
    std::map<std::tuple<uint32_t, uint32_t, uint32_t>, std::vector<std::pair<uint32_t, uint32_t>>>
        samples;  // (k, g, column) -> (psi, value)
    for (auto& [d, list] : per_db) {
      PhaseMessage req;
      req.kind = MessageKind::DW1req;
      req.sender = client_addr(i);
      req.receiver = d;
      for (const auto& pos : list) {
        req.meta.push_back(pos.submodel);
        req.meta.push_back(pos.instance);
        req.meta.push_back(pos.column);
      }
      send_message(w, req, Phase::Write);

      PhaseMessage resp;
      resp.kind = MessageKind::DW1resp;
      resp.sender = d;
      resp.receiver = client_addr(i);
      const DatabaseState& db = w.dbs[d - 1];
      for (const auto& pos : list) {
        resp.payload.push_back(db.store[pos.submodel - 1][pos.instance].symbols[pos.column - 1]);
      }
      PhaseMessage wire = send_message(w, resp, Phase::Write);
      for (size_t t = 0; t < list.size(); ++t) {
        const auto& pos = list[t];
        samples[{pos.submodel, pos.instance, pos.column}].push_back(
            {w.psis[d - 1], wire.payload[t]});
        if (w.measuring && w.espy.count(d)) {
          Witness::Row r = w.wit.row();
          stored_row_terms(w, r, pos.submodel, pos.instance, pos.column, w.psis[d - 1], 1);
          w.wit.emit(r, wire.payload[t], w.espy.count(d) && is_adversary(w, d));
        }
      }
    }
    ClientState& c = w.clients[i - 1];
    for (uint32_t k : w.gamma) {
      std::vector<uint32_t> recovered(w.l_star, 0);
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        const OmegaLayout& lay = *w.spans[g].layout;
        std::vector<ColumnSamples> cols;
        for (uint32_t cidx = 1; cidx <= lay.max_message_row(); ++cidx) {
          auto it = samples.find({k, g, cidx});
          if (it == samples.end()) continue;
          cols.push_back({cidx, it->second});
        }
        DecodedInstance dec = write_decode_instance(w.f, lay, cols, p.a_adversary);
        for (uint32_t b = 0; b < lay.B; ++b) recovered[w.spans[g].offset + b] = dec.messages[b];
      }
      c.recovered[k] = recovered;
    }
  }
}

void write_uploads(World& w, WriteState& ws) {
  const SystemParams& p = w.cfg.params;
  std::vector<uint32_t> late;
  for (uint32_t i : w.writers) {
    if (contains(w.late_writers, i)) {
      late.push_back(i);
      continue;
    }
    PhaseMessage base = write_client_answer(w.f, w.clients[i - 1], w.gamma, w.l_star);
    for (uint32_t m : bucket_members(w, w.clients[i - 1].group)) {
      if (m == w.cfg.faults.failed_db) continue;
      PhaseMessage msg = base;
      msg.receiver = m;
      PhaseMessage wire = send_message(w, msg, Phase::Write);
      if (db_live(w, m)) {
        ws.aw1_arrived[m].push_back(wire);
        ws.aw1_senders[m].push_back(i);
      }
      if (w.measuring && w.espy.count(m) && db_live(w, m)) {
        size_t t = 0;
        for (uint32_t k : w.gamma) {
          for (uint32_t l = 0; l < w.l_star; ++l, ++t) {
            Witness::Row r = w.wit.row();
            r.add_delta(i, k, l, 1);
            r.add_mask(i, k, l, 1);
            w.wit.emit(r, wire.payload[t], false);
          }
        }
      }
    }
  }

  // DW2 before the late deliveries: the aggregate reads its buffer first.
  std::map<uint32_t, std::vector<std::vector<uint32_t>>> copies;
  std::map<uint32_t, uint32_t> first_live_member;
  for (uint32_t g : w.answering_groups) {
    uint32_t router = w.routers.at(g);
    for (uint32_t m : bucket_members(w, g)) {
      if (!db_live(w, m)) continue;
      if (!first_live_member.count(g)) first_live_member[g] = m;
      std::vector<const PhaseMessage*> ptrs;
      for (const auto& a : ws.aw1_arrived[m]) ptrs.push_back(&a);
      PhaseMessage dw2 = write_db_aggregate(w.f, w.dbs[m - 1], ptrs, w.gamma, w.l_star, router);
      PhaseMessage wire = send_message(w, dw2, Phase::Write);
      copies[g].push_back(wire.payload);
    }
  }
  for (uint32_t g : w.answering_groups) {
    ws.dw2[g] = adversary_decode_repetition(copies[g], p.a_adversary);
    uint32_t m0 = first_live_member.at(g);
    std::vector<uint32_t> expect;
    for (uint32_t k : w.gamma) {
      const auto& row = w.dbs[m0 - 1].cr_write[k - 1];
      expect.insert(expect.end(), row.begin(), row.end());
    }
    for (const auto& a : ws.aw1_arrived[m0]) {
      for (size_t t = 0; t < expect.size(); ++t) {
        expect[t] = w.f.add(expect[t], a.payload[t]);
      }
    }
    if (expect != ws.dw2[g]) w.router_masked_ok = false;
  }

  if (!late.empty()) {
    w.step += w.cfg.faults.late_delay;
    for (uint32_t i : late) {
      PhaseMessage base = write_client_answer(w.f, w.clients[i - 1], w.gamma, w.l_star);
      for (uint32_t m : bucket_members(w, w.clients[i - 1].group)) {
        if (m == w.cfg.faults.failed_db) continue;
        PhaseMessage msg = base;
        msg.receiver = m;
        PhaseMessage wire = send_message(w, msg, Phase::Write);
        if (w.measuring && w.espy.count(m) && db_live(w, m)) {
          size_t t = 0;
          for (uint32_t k : w.gamma) {
            for (uint32_t l = 0; l < w.l_star; ++l, ++t) {
              Witness::Row r = w.wit.row();
              r.add_delta(i, k, l, 1);
              r.add_mask(i, k, l, 1);
              w.wit.emit(r, wire.payload[t], false);
            }
          }
        }
      }
      w.events.push_back("client " + std::to_string(i) +
                         " wrote after aggregation; masks compensated");
    }
  }
}

void fetch_repair_shares(World& w, WriteState& ws) {
  if (w.cfg.faults.failed_db == 0) return;
  if (w.answering_groups.empty()) {
    w.events.push_back("no routing client available; repair deferred to a later round");
    return;
  }
  const SystemParams& p = w.cfg.params;
  uint32_t need = p.d_reconstruct + 2 * p.a_adversary;
  for (uint32_t d : w.live_db_list) {
    if (ws.helper_dbs.size() < need) ws.helper_dbs.push_back(d);
  }
  if (ws.helper_dbs.size() < need) {
    fail(ErrorCode::ProtocolAbort, "not enough live databases to repair");
  }
  uint32_t router = w.routers.at(w.repair_group);
  std::vector<uint32_t> stale;
  for (uint32_t k = 1; k <= p.n_submodels; ++k) {
    if (!contains(w.gamma, k)) stale.push_back(k);
  }
  // helper-major bundles on the wire, rider order (k, instance, helper).
  std::map<std::pair<uint32_t, uint32_t>, std::vector<uint32_t>> by_cell;
  for (uint32_t h : ws.helper_dbs) {
    PhaseMessage msg;
    msg.kind = MessageKind::RepairShare;
    msg.sender = h;
    msg.receiver = client_addr(router);
    for (uint32_t k : stale) {
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        msg.payload.push_back(
            repair_share(w.f, w.dbs[h - 1].store[k - 1][g], w.psis, w.cfg.faults.failed_db));
      }
    }
    PhaseMessage wire = send_message(w, msg, Phase::Repair);
    size_t t = 0;
    for (uint32_t k : stale) {
      for (uint32_t g = 0; g < w.n_inst; ++g, ++t) {
        by_cell[{k, g}].push_back(wire.payload[t]);
        if (w.measuring && w.espy.count(h)) {
          Witness::Row r = w.wit.row();
          const OmegaLayout& lay = *w.spans[g].layout;
          uint32_t psi_f = w.psis[w.cfg.faults.failed_db - 1];
          for (uint32_t d2 = 1; d2 <= lay.D; ++d2) {
            stored_row_terms(w, r, k, g, d2, w.psis[h - 1], w.f.pow(psi_f, d2 - 1));
          }
          w.wit.emit(r, wire.payload[t], w.espy.count(h) && is_adversary(w, h));
        }
      }
    }
  }
  for (uint32_t k : stale) {
    for (uint32_t g = 0; g < w.n_inst; ++g) {
      const auto& v = by_cell[{k, g}];
      ws.riders.insert(ws.riders.end(), v.begin(), v.end());
    }
  }
}

void write_coded_answers(World& w, WriteState& ws) {
  const SystemParams& p = w.cfg.params;
  std::vector<std::pair<uint32_t, uint32_t>> targets;
  for (uint32_t d : w.live_db_list) targets.push_back({d, w.psis[d - 1]});
  if (w.cfg.faults.failed_db != 0) {
    targets.push_back({w.cfg.faults.failed_db, w.psis[w.cfg.faults.failed_db - 1]});
  }
  size_t base = w.gamma.size() * w.n_inst * p.d_reconstruct;

  for (uint32_t g : w.answering_groups) {
    uint32_t router_id = w.routers.at(g);
    ClientState& router = w.clients[router_id - 1];
    bool embed = g == w.designated_group;
    Rng fresh = substream(w.cfg.seed, lbl("aw2-fresh-g", g));
    Rng capture = fresh;
    std::vector<uint32_t> riders;
    uint32_t repl = 0;
    if (g == w.repair_group && w.cfg.faults.failed_db != 0 && !ws.riders.empty()) {
      riders = ws.riders;
      repl = w.cfg.faults.failed_db;
    }
    auto msgs = write_route_answer(w.f, router, w.plan, w.passes, w.gamma, ws.dw2[g],
                                   embed, targets, fresh, riders, repl);

    // The same fresh draws, re-read for the observation model and the
    // committed-row self-checks.
    if (w.measuring) {
      for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
        for (uint32_t u = 0; u < w.n_inst; ++u) {
          for (uint32_t r = 0; r < w.spans[u].layout->R; ++r) {
            uint32_t v = static_cast<uint32_t>(capture.below(w.f.q()));
            w.wit.fresh_col[{g, w.gamma[ki], u, r}] = w.wit.b_cols;
            w.wit.b_true.push_back(v);
            ++w.wit.b_cols;
          }
        }
      }
    }

    // Late writers' masks ride the designated router's answer.
    std::vector<std::vector<uint32_t>> beta_per_target;
    if (embed && !w.late_writers.empty()) {
      std::vector<const std::map<uint32_t, std::vector<uint32_t>>*> masks;
      for (uint32_t i : w.late_writers) masks.push_back(&w.clients[i - 1].mask_write);
      for (auto& [db, psi] : targets) {
        beta_per_target.push_back(
            dropout_compensation_write(w.f, w.plan, w.passes, w.gamma, masks, psi));
      }
    }

    for (size_t t = 0; t < targets.size(); ++t) {
      PhaseMessage msg = msgs[t];
      if (!beta_per_target.empty()) {
        for (size_t q = 0; q < base; ++q) {
          msg.payload[q] = w.f.add(msg.payload[q], beta_per_target[t][q]);
        }
      }
      uint32_t rider_syms = msg.meta.size() >= 2 ? msg.meta[1] : 0;
      PhaseMessage wire = send_message(w, msg, Phase::Write, rider_syms);
      uint32_t target_db = targets[t].first;
      ws.aw2_inbox[target_db].push_back(wire);

      if (w.measuring && w.espy.count(target_db)) {
        uint32_t psi = targets[t].second;
        size_t pos = 0;
        for (size_t ki = 0; ki < w.gamma.size(); ++ki) {
          uint32_t k = w.gamma[ki];
          for (uint32_t u = 0; u < w.n_inst; ++u) {
            const OmegaLayout& lay = *w.spans[u].layout;
            auto amc = lay.all_message_columns();
            for (uint32_t d2 = 1; d2 <= lay.D; ++d2, ++pos) {
              Witness::Row r = w.wit.row();
              for (uint32_t d1 = 1; d1 <= lay.D; ++d1) {
                uint32_t coeff = w.f.pow(psi, d1 - 1);
                const Cell& cell = lay.at(d1, d2);
                if (cell.kind == CellKind::Message) {
                  uint32_t l = w.spans[u].offset + cell.index;
                  r.add_const(w.f.mul(coeff, w.dbs[w.live_db_list.front() - 1]
                                                 .cr_write[k - 1][l]));
                  for (uint32_t m : bucket_members(w, g)) {
                    if (!db_live(w, m)) continue;
                    for (uint32_t i : ws.aw1_senders[m]) {
                      r.add_delta(i, k, l, coeff);
                      r.add_mask(i, k, l, coeff);
                    }
                    break;  // voted copies agree; one member's view suffices
                  }
                  if (embed) {
                    r.add_model(k, l, coeff);
                    for (uint32_t i : w.committers) r.add_delta(i, k, l, w.f.neg(coeff));
                    for (uint32_t i : w.late_writers) r.add_mask(i, k, l, coeff);
                  }
                } else {
                  r.add_fresh(g, k, u, cell.index, coeff);
                }
              }
              if (std::find(amc.begin(), amc.end(), d2) != amc.end()) {
                r.add_club(g, k, u, d2, 1);
              }
              w.wit.emit(r, wire.payload[pos], false);
            }
          }
        }
        // Riders duplicate the repair shares already modeled on their way in.
        for (size_t q = base; q < wire.payload.size(); ++q) {
          uint32_t idx = static_cast<uint32_t>(q - base);
          uint32_t per_cell = static_cast<uint32_t>(ws.helper_dbs.size());
          uint32_t cell = idx / per_cell, h = idx % per_cell;
          uint32_t n_stale = static_cast<uint32_t>(
              (w.cfg.params.n_submodels - w.gamma.size()));
          (void)n_stale;
          uint32_t k_pos = cell / w.n_inst, u = cell % w.n_inst;
          uint32_t k = 0, seen = 0;
          for (uint32_t kk = 1; kk <= w.cfg.params.n_submodels; ++kk) {
            if (!contains(w.gamma, kk)) {
              if (seen == k_pos) { k = kk; break; }
              ++seen;
            }
          }
          Witness::Row r = w.wit.row();
          const OmegaLayout& lay = *w.spans[u].layout;
          uint32_t psi_f = w.psis[w.cfg.faults.failed_db - 1];
          uint32_t helper = ws.helper_dbs[h];
          for (uint32_t d2 = 1; d2 <= lay.D; ++d2) {
            stored_row_terms(w, r, k, u, d2, w.psis[helper - 1], w.f.pow(psi_f, d2 - 1));
          }
          w.wit.emit(r, wire.payload[q], is_adversary(w, helper) && w.espy.count(helper));
        }
      }
    }
  }
}

void commit_phase(World& w, WriteState& ws) {
  std::vector<uint32_t> commit_targets = w.live_db_list;
  if (w.cfg.faults.failed_db != 0) commit_targets.push_back(w.cfg.faults.failed_db);
  for (uint32_t d : commit_targets) {
    DatabaseState& db = d == w.cfg.faults.failed_db ? w.replacement : w.dbs[d - 1];
    std::vector<const PhaseMessage*> ptrs;
    for (const auto& a : ws.aw2_inbox[d]) ptrs.push_back(&a);
    write_commit_storage(w.f, db, ptrs, {}, w.plan, w.passes, w.gamma, w.l_star,
                         w.psis[d - 1]);
  }
  w.write_committed = true;
}

void repair_phase(World& w, WriteState& ws) {
  if (w.cfg.faults.failed_db == 0 || w.answering_groups.empty()) return;
  const SystemParams& p = w.cfg.params;
  if (w.gamma.empty()) {
    // No write stream to ride: the shares travel in a standalone message.
    uint32_t router = w.routers.at(w.repair_group);
    PhaseMessage msg;
    msg.kind = MessageKind::RepairShare;
    msg.sender = client_addr(router);
    msg.receiver = w.cfg.faults.failed_db;
    msg.payload = ws.riders;
    send_message(w, msg, Phase::Repair);
  }
  repair_failed_database(w.f, w.replacement, w.plan, w.passes, p.n_submodels, w.gamma,
                         ws.riders, ws.helper_dbs, w.psis, w.cfg.faults.failed_db,
                         p.a_adversary);
  w.repaired = true;
  w.events.push_back("replacement database rebuilt from " +
                     std::to_string(ws.helper_dbs.size()) + " helpers");
}

// --- Server randomness refresh -------------------------------------------------

void crr_phase(World& w) {
  const SystemParams& p = w.cfg.params;
  if (w.committers.size() < 2) {
    w.events.push_back("fewer than two active clients; server randomness not refreshed");
    return;
  }
  bool failure = w.cfg.faults.failed_db != 0;
  // Consumed entries: every union symbol, plus the write symbols exposed this
  // round (all of them after a failure).
  std::vector<std::pair<uint32_t, uint32_t>> symbols;  // (k, 0) union; (k, l+1) write
  for (uint32_t k = 1; k <= p.n_submodels; ++k) symbols.push_back({k, 0});
  if (failure) {
    for (uint32_t k = 1; k <= p.n_submodels; ++k) {
      for (uint32_t l = 0; l < w.l_star; ++l) symbols.push_back({k, l + 1});
    }
  } else {
    for (uint32_t k : w.gamma) {
      for (uint32_t l = 0; l < w.l_star; ++l) symbols.push_back({k, l + 1});
    }
  }

  std::vector<uint32_t> receivers = w.live_db_list;
  if (w.repaired) receivers.push_back(w.cfg.faults.failed_db);

  uint32_t n_pairs = static_cast<uint32_t>(w.committers.size() / 2);
  size_t n_sym = symbols.size();
  size_t cursor = 0;
  for (uint32_t t = 0; t < n_pairs; ++t) {
    uint32_t c1 = w.committers[2 * t], c2 = w.committers[2 * t + 1];
    size_t block = n_sym / n_pairs + (t < n_sym % n_pairs ? 1 : 0);
    if (block == 0) continue;
    Rng r1 = substream(w.cfg.seed, lbl("crr-c", c1));
    Rng r2 = substream(w.cfg.seed, lbl("crr-c", c2));
    std::vector<uint32_t> s1(block), s2(block);
    for (auto& v : s1) v = static_cast<uint32_t>(r1.below(w.f.q()));
    for (auto& v : s2) v = static_cast<uint32_t>(r2.below(w.f.q()));
    for (uint32_t d : receivers) {
      for (auto [cl, sh] : {std::pair<uint32_t, const std::vector<uint32_t>*>{c1, &s1},
                            {c2, &s2}}) {
        PhaseMessage msg;
        msg.kind = MessageKind::CrrShare;
        msg.sender = client_addr(cl);
        msg.receiver = d;
        msg.payload = *sh;
        send_message(w, msg, Phase::Crr);
      }
      DatabaseState& db = d == w.cfg.faults.failed_db ? w.replacement : w.dbs[d - 1];
      for (size_t b = 0; b < block; ++b) {
        auto [k, l1] = symbols[cursor + b];
        uint32_t fresh = crr_refresh(w.f, s1[b], s2[b], c1, c2);
        if (l1 == 0) {
          db.cr_union[k - 1] = fresh;
        } else {
          db.cr_write[k - 1][l1 - 1] = fresh;
        }
      }
    }
    cursor += block;
  }
}

// --- Verdicts and report ---------------------------------------------------------

void add_verdict(RoundReport& rep, const std::string& name, bool pass,
                 const std::string& actual, const std::string& bound,
                 const std::string& note = "") {
  rep.verdicts.push_back({name, pass, false, actual, bound, note});
}

void skip_verdict(RoundReport& rep, const std::string& name, const std::string& note) {
  rep.verdicts.push_back({name, false, true, "", "", note});
}

void cost_verdicts(World& w, RoundReport& rep) {
  const SystemParams& p = w.cfg.params;
  uint64_t K = p.n_submodels, C = p.n_clients, N = p.n_databases;
  uint64_t G = w.gamma.size(), Ls = w.l_star, J1 = p.j_collude + 1;
  uint64_t n_live = w.live_db_list.size();

  // Structural expectations, recomputed from the population arithmetic.
  auto crg_pass_cost = [&](const std::vector<uint32_t>& participants,
                           uint64_t n_sets, uint64_t club_sets, uint64_t n_routers,
                           bool scalar, uint64_t copies) {
    uint64_t n_e = participants.size();
    if (n_e == 0) return static_cast<uint64_t>(0);
    uint64_t full_targets = n_routers;
    uint64_t last_is_router = 0;
    // The closing participant is the highest id; routers are known.
    for (auto& [g, r] : w.routers) {
      if (r == participants.back()) last_is_router = 1;
    }
    uint64_t singles = n_e - n_routers - (last_is_router ? 0 : 1);
    uint64_t per_contrib = n_sets * ((full_targets + (last_is_router ? 0 : 1)) * (n_e - 1) + singles) +
                           club_sets * n_routers * (n_routers > 0 ? n_routers - 1 : 0) +
                           (scalar ? n_e : 0);
    return per_contrib * J1 * copies;
  };

  uint64_t crg_expect = 0;
  {
    uint64_t n_routers = w.routers.size();
    if (p.a_adversary == 0) {
      crg_expect += crg_pass_cost(w.eligible, K, K, n_routers, true, 1);
    } else {
      uint64_t per = crg_pass_cost(w.eligible, K, K, n_routers, true, 1) / J1;
      for (uint32_t b = 1; b <= p.j_collude + 1; ++b) {
        uint64_t live_members = 0;
        for (uint32_t m : bucket_members(w, b)) live_members += (m != w.cfg.faults.failed_db);
        crg_expect += per * live_members;
      }
    }
    if (!w.gamma.empty() && !w.writers.empty()) {
      uint64_t amc_total = 0;
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        amc_total += w.spans[g].layout->all_message_columns().size();
      }
      uint64_t n_ans = w.answering_groups.size();
      std::vector<uint32_t> wr = w.writers;
      uint64_t last_router = 0;
      for (uint32_t g : w.answering_groups) {
        if (w.routers.at(g) == wr.back()) last_router = 1;
      }
      uint64_t singles = wr.size() - n_ans - (last_router ? 0 : 1);
      uint64_t per = (G * Ls) * ((n_ans + (last_router ? 0 : 1)) * (wr.size() - 1) + singles) +
                     (G * amc_total) * n_ans * (n_ans ? n_ans - 1 : 0);
      if (p.a_adversary == 0) {
        crg_expect += per * J1;
      } else {
        for (uint32_t b = 1; b <= p.j_collude + 1; ++b) {
          uint64_t live_members = 0;
          for (uint32_t m : bucket_members(w, b)) live_members += db_live(w, m) ? 1 : 0;
          crg_expect += per * live_members;
        }
      }
    }
  }
  add_verdict(rep, "crg_cost_exact", w.meter.crg.total() == crg_expect,
              std::to_string(w.meter.crg.total()), std::to_string(crg_expect));

  // Closed-form ceiling, evaluated at the padded length.
  if (p.a_adversary == 0) {
    uint64_t ceiling = J1 * N * (N - 1) * (K + p.d_reconstruct * G * Ls) +
                       J1 * (N + 2) * (C - 1) * (K + G * Ls);
    add_verdict(rep, "crg_cost_bound", w.meter.crg.total() <= ceiling,
                std::to_string(w.meter.crg.total()), "<= " + std::to_string(ceiling));
  } else {
    skip_verdict(rep, "crg_cost_bound",
                 "replicated contributors exceed the base closed form; exactness checked instead");
  }

  // Late answers still hit the wire, so every non-dropped eligible client
  // pays the blind-send cost toward its non-failed group members.
  uint64_t senders_cost = 0;
  for (uint32_t i : w.senders) {
    uint64_t m = 0;
    for (uint32_t b : bucket_members(w, w.clients[i - 1].group)) {
      m += (b != w.cfg.faults.failed_db) ? 1 : 0;
    }
    senders_cost += m * K;
  }
  uint64_t du2_cost = 0;
  for (uint32_t g : w.answering_groups) {
    for (uint32_t m : bucket_members(w, g)) du2_cost += db_live(w, m) ? K : 0;
  }
  uint64_t au2_cost = static_cast<uint64_t>(w.answering_groups.size()) * n_live * K;
  uint64_t psu_expect = senders_cost + du2_cost + au2_cost;
  add_verdict(rep, "psu_cost_exact", w.meter.psu.total() == psu_expect,
              std::to_string(w.meter.psu.total()), std::to_string(psu_expect));

  bool fault_free = w.cfg.faults.dropped_clients.empty() &&
                    w.cfg.faults.late_clients.empty() &&
                    w.cfg.faults.dropped_dbs.empty() && w.cfg.faults.failed_db == 0 &&
                    p.a_adversary == 0;
  bool all_groups = w.routers.size() == w.n_groups;
  if (fault_free && all_groups) {
    uint64_t closed = (C + N + N * N) * K;
    add_verdict(rep, "psu_cost_closed_form", w.meter.psu.total() == closed,
                std::to_string(w.meter.psu.total()), std::to_string(closed));
  } else {
    skip_verdict(rep, "psu_cost_closed_form",
                 "requires a fault-free round with every group populated");
  }

  uint64_t write_expect = 0;
  if (!w.gamma.empty() && !w.writers.empty()) {
    uint64_t per_k_reads = 0;
    for (uint32_t g = 0; g < w.n_inst; ++g) {
      uint32_t m = w.spans[g].layout->max_message_row();
      for (uint32_t c = 1; c <= m; ++c) {
        per_k_reads += p.a_adversary > 0 ? p.d_reconstruct + 2 * p.a_adversary
                                         : p.d_reconstruct - c + 1;
      }
    }
    write_expect += static_cast<uint64_t>(w.writers.size()) * G * per_k_reads;
    for (uint32_t i : w.writers) {
      uint64_t m = 0;
      for (uint32_t b : bucket_members(w, w.clients[i - 1].group)) {
        m += (b != w.cfg.faults.failed_db) ? 1 : 0;
      }
      write_expect += m * G * Ls;
    }
    uint64_t dw2 = 0;
    for (uint32_t g : w.answering_groups) {
      for (uint32_t m : bucket_members(w, g)) dw2 += db_live(w, m) ? G * Ls : 0;
    }
    write_expect += dw2;
    uint64_t targets = n_live + (w.cfg.faults.failed_db != 0 ? 1 : 0);
    write_expect += static_cast<uint64_t>(w.answering_groups.size()) * targets * G *
                    w.n_inst * p.d_reconstruct;
  }
  add_verdict(rep, "write_cost_exact", w.meter.write.total() == write_expect,
              std::to_string(w.meter.write.total()), std::to_string(write_expect));

  if (p.a_adversary == 0) {
    CostTriple rc = realized_costs(w.plan);
    Rat ceiling = rc.c1 * Rat(static_cast<int64_t>(C * G * Ls)) +
                  Rat(static_cast<int64_t>((C + N) * G * Ls)) +
                  Rat(static_cast<int64_t>(N * N * p.d_reconstruct * G * Ls));
    Rat actual(static_cast<int64_t>(w.meter.write.total()));
    add_verdict(rep, "write_cost_bound", actual <= ceiling,
                std::to_string(w.meter.write.total()), "<= " + ceiling.str());
  } else {
    skip_verdict(rep, "write_cost_bound",
                 "error-corrected reads exceed the base closed form; exactness checked instead");
  }

  bool failure = w.cfg.faults.failed_db != 0;
  uint64_t crr_expect = 0;
  if (w.committers.size() >= 2) {
    uint64_t n_sym = K + (failure ? K * Ls : G * Ls);
    uint64_t receivers = n_live + (w.repaired ? 1 : 0);
    crr_expect = 2 * receivers * n_sym;
  }
  add_verdict(rep, "crr_cost_exact", w.meter.crr.total() == crr_expect,
              std::to_string(w.meter.crr.total()), std::to_string(crr_expect));
  if (!failure && w.committers.size() >= 2 && w.cfg.faults.dropped_dbs.empty()) {
    uint64_t closed = 2 * N * (K + G * Ls);
    add_verdict(rep, "crr_cost_closed_form", w.meter.crr.total() == closed,
                std::to_string(w.meter.crr.total()), std::to_string(closed));
  } else {
    skip_verdict(rep, "crr_cost_closed_form",
                 failure ? "failure rounds refresh the full server-side pool"
                         : "requires a failure-free round with two active clients");
  }

  uint64_t repair_expect = 0;
  if (failure && w.repaired) {
    uint64_t H = p.d_reconstruct + 2 * p.a_adversary;
    repair_expect = 2 * H * (K - G) * w.n_inst;
  }
  add_verdict(rep, "repair_cost_exact", w.meter.repair.total() == repair_expect,
              std::to_string(w.meter.repair.total()), std::to_string(repair_expect));

  uint64_t stored_total = 0;
  for (auto& [d, s] : w.meter.stored) stored_total += s;
  CostTriple rc = realized_costs(w.plan);
  Rat per_db = rc.s * Rat(static_cast<int64_t>(K * Ls)) +
               Rat(static_cast<int64_t>(K)) + Rat(static_cast<int64_t>(K * Ls));
  Rat ceiling = per_db * Rat(static_cast<int64_t>(N));
  Rat actual(static_cast<int64_t>(stored_total));
  add_verdict(rep, "storage_cost_bound", actual <= ceiling, std::to_string(stored_total),
              "<= " + ceiling.str());
}

void reliability_verdicts(World& w, RoundReport& rep) {
  const SystemParams& p = w.cfg.params;
  // Exact consistency: solve the symmetric fill from D live rows, then check
  // every other row (including the replacement) against its evaluation point.
  bool consistent = true;
  std::vector<uint32_t> holders = w.live_db_list;
  if (w.repaired) holders.push_back(w.cfg.faults.failed_db);
  for (uint32_t k = 1; k <= p.n_submodels && consistent; ++k) {
    for (uint32_t g = 0; g < w.n_inst && consistent; ++g) {
      const OmegaLayout& lay = *w.spans[g].layout;
      uint32_t D = lay.D;
      std::vector<uint32_t> base_dbs(w.live_db_list.begin(), w.live_db_list.begin() + D);
      Mat v(D, D);
      for (uint32_t s = 0; s < D; ++s) {
        for (uint32_t j = 0; j < D; ++j) {
          v.at(s, j) = w.f.pow(w.psis[base_dbs[s] - 1], j);
        }
      }
      Mat omega(D, D);
      for (uint32_t d2 = 1; d2 <= D; ++d2) {
        std::vector<uint32_t> rhs(D);
        for (uint32_t s = 0; s < D; ++s) {
          rhs[s] = w.dbs[base_dbs[s] - 1].store[k - 1][g].symbols[d2 - 1];
        }
        std::vector<uint32_t> col = solve(w.f, v, rhs);
        for (uint32_t d1 = 1; d1 <= D; ++d1) omega.at(d1 - 1, d2 - 1) = col[d1 - 1];
      }
      for (uint32_t d1 = 1; d1 <= D && consistent; ++d1) {
        for (uint32_t d2 = d1 + 1; d2 <= D; ++d2) {
          if (omega.at(d1 - 1, d2 - 1) != omega.at(d2 - 1, d1 - 1)) consistent = false;
        }
      }
      for (uint32_t d : holders) {
        const DatabaseState& db = d == w.cfg.faults.failed_db ? w.replacement : w.dbs[d - 1];
        for (uint32_t d2 = 1; d2 <= D && consistent; ++d2) {
          uint32_t acc = 0;
          for (uint32_t d1 = 1; d1 <= D; ++d1) {
            acc = w.f.add(acc, w.f.mul(w.f.pow(w.psis[d - 1], d1 - 1),
                                       omega.at(d1 - 1, d2 - 1)));
          }
          if (acc != db.store[k - 1][g].symbols[d2 - 1]) consistent = false;
        }
      }
    }
  }
  add_verdict(rep, "reliability_storage_consistent", consistent,
              consistent ? "all live rows lie on one symmetric fill" : "mismatch", "");

  if (w.repaired) {
    add_verdict(rep, "reliability_replacement", consistent,
                consistent ? "replacement rows agree with the survivors" : "mismatch", "");
  } else if (w.cfg.faults.failed_db != 0) {
    skip_verdict(rep, "reliability_replacement", "repair deferred; no routing client");
  } else {
    skip_verdict(rep, "reliability_replacement", "no database failed this round");
  }

  // Plain common randomness identical across receivers.
  bool cr_same = true;
  const DatabaseState* ref = nullptr;
  std::vector<uint32_t> receivers = w.live_db_list;
  if (w.repaired) receivers.push_back(w.cfg.faults.failed_db);
  for (uint32_t d : receivers) {
    const DatabaseState& db = d == w.cfg.faults.failed_db ? w.replacement : w.dbs[d - 1];
    if (!ref) {
      ref = &db;
      continue;
    }
    if (db.cr_union != ref->cr_union || db.cr_write != ref->cr_write) cr_same = false;
  }
  add_verdict(rep, "reliability_plain_cr_consistent", cr_same,
              cr_same ? "identical on every live database" : "mismatch", "");
}

void privacy_verdicts(World& w, RoundReport& rep) {
  const SystemParams& p = w.cfg.params;
  bool zero = true;
  for (uint32_t k = 0; k < p.n_submodels; ++k) {
    uint32_t s = 0;
    for (uint32_t i : w.eligible) s = w.f.add(s, w.clients[i - 1].mask_union[k]);
    if (s != 0) zero = false;
    uint32_t club = 0;
    for (auto& [g, r] : w.routers) club = w.f.add(club, w.clients[r - 1].club_union[k]);
    if (club != 0) zero = false;
  }
  for (uint32_t k : w.gamma) {
    for (uint32_t l = 0; l < w.l_star; ++l) {
      uint32_t s = 0;
      for (uint32_t i : w.writers) s = w.f.add(s, w.clients[i - 1].mask_write.at(k)[l]);
      if (s != 0) zero = false;
    }
  }
  if (!w.gamma.empty()) {
    for (uint32_t ki = 0; ki < w.gamma.size(); ++ki) {
      for (uint32_t g = 0; g < w.n_inst; ++g) {
        for (uint32_t d2 : w.spans[g].layout->all_message_columns()) {
          uint32_t s = 0;
          for (uint32_t ag : w.answering_groups) {
            s = w.f.add(s, w.clients[w.routers.at(ag) - 1].club_write.at(
                               {w.gamma[ki], g, d2}));
          }
          if (s != 0) zero = false;
        }
      }
    }
  }
  add_verdict(rep, "privacy_cr_zero_sums", zero,
              zero ? "every masking set sums to zero" : "a masking set fails to cancel", "");
}

void stored_counts(World& w) {
  const SystemParams& p = w.cfg.params;
  std::vector<uint32_t> holders = w.live_db_list;
  if (w.repaired) holders.push_back(w.cfg.faults.failed_db);
  for (uint32_t d : holders) {
    uint64_t coded = static_cast<uint64_t>(p.n_submodels) * w.n_inst * p.d_reconstruct;
    uint64_t plain = p.n_submodels + static_cast<uint64_t>(p.n_submodels) * w.l_star;
    w.meter.stored[d] = coded + plain;
  }
}

}  // namespace

const char* corruption_strategy_name(CorruptionStrategy s) {
  switch (s) {
    case CorruptionStrategy::Random: return "random";
    case CorruptionStrategy::TargetedFlip: return "targeted-flip";
    case CorruptionStrategy::Replay: return "replay";
  }
  return "unknown";
}

RsrcPlan plan_from_spec(const PlanSpec& spec, uint32_t d_reconstruct) {
  if (spec.single) {
    return plan_single_layout(build_layout(d_reconstruct, spec.lambda, spec.extra));
  }
  return plan_time_sharing(d_reconstruct, spec.lambda, spec.leak);
}

RoundReport run_round(const ScenarioConfig& cfg_in) {
  World w;
  w.cfg = cfg_in;
  w.cfg.params.validate();
  w.cfg.gammas_given = !w.cfg.gammas.empty();
  {
    Field f(w.cfg.params.modulus);
    resolve_config(w.cfg, f);
  }
  setup_world(w);

  RoundReport rep;

  crg_pass1(w);
  psu_phase(w);

  bool no_op = w.senders.empty() && w.cfg.faults.late_clients.empty();
  if (!no_op) {
    crg_pass2(w);
    if (w.measuring) {
      witness_init(w);
      witness_snapshot(w, true);
    }
    WriteState ws;
    fetch_repair_shares(w, ws);
    if (!w.gamma.empty() && !w.writers.empty()) {
      write_downloads(w);
      write_uploads(w, ws);
      write_coded_answers(w, ws);
      commit_phase(w, ws);
    } else if (!w.gamma.empty()) {
      w.events.push_back("union nonempty but no writers; write skipped");
    } else {
      w.events.push_back("empty union; write phase skipped");
    }
    repair_phase(w, ws);
    crr_phase(w);
    if (w.measuring) witness_snapshot(w, false);
  } else if (w.measuring) {
    witness_init(w);
    witness_snapshot(w, true);
    witness_snapshot(w, false);
  }

  stored_counts(w);

  rep.config = w.cfg;
  rep.decoded_union = w.gamma;
  rep.routers = w.routers;
  rep.embedder_group = w.designated_group;
  rep.events = w.events;
  rep.transcript = w.lines;
  rep.transcript_hash = w.thash;

  // Reconstructed model after the round, from the first D live rows.
  const SystemParams& p = w.cfg.params;
  rep.model_after.assign(p.n_submodels, std::vector<uint32_t>(p.sub_len, 0));
  for (uint32_t k = 1; k <= p.n_submodels; ++k) {
    for (uint32_t g = 0; g < w.n_inst; ++g) {
      const OmegaLayout& lay = *w.spans[g].layout;
      std::vector<CodedRow> rows;
      for (uint32_t t = 0; t < lay.D; ++t) {
        rows.push_back(w.dbs[w.live_db_list[t] - 1].store[k - 1][g]);
      }
      Reconstructed rec = reconstruct(w.f, rows, lay, w.psis);
      for (uint32_t b = 0; b < lay.B; ++b) {
        uint32_t l = w.spans[g].offset + b;
        if (l < p.sub_len) rep.model_after[k - 1][l] = rec.messages[b];
      }
    }
  }

  if (w.union_decoded) {
    add_verdict(rep, "union_agreement", true,
                "all live databases decoded one union", "");
    std::vector<uint32_t> expected;
    for (uint32_t i : w.committers) {
      for (uint32_t k : w.clients[i - 1].gamma) {
        if (!contains(expected, k)) expected.push_back(k);
      }
    }
    std::sort(expected.begin(), expected.end());
    auto join = [](const std::vector<uint32_t>& v) {
      std::string s = "{";
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
      }
      return s + "}";
    };
    add_verdict(rep, "union_expected", expected == w.gamma, join(w.gamma),
                join(expected),
                "decoded union must equal the answering clients' desired sets");
  } else {
    skip_verdict(rep, "union_agreement", "no union decoded this round");
    skip_verdict(rep, "union_expected", "no union decoded this round");
  }
  add_verdict(rep, "inter_client_router_masked", w.router_masked_ok,
              w.router_masked_ok ? "aggregates equal answer sums plus plain CR"
                                 : "an aggregate strayed from its masked form",
              "");

  cost_verdicts(w, rep);
  reliability_verdicts(w, rep);
  privacy_verdicts(w, rep);

  if (w.measuring) {
    LeakageDetail d = w.wit.measure();
    rep.leakage = d;
    bool ok = d.fraction <= w.cfg.params.delta;
    add_verdict(rep, "eavesdropper_leakage", ok, d.fraction.str(),
                "<= " + w.cfg.params.delta.str());
  } else {
    skip_verdict(rep, "eavesdropper_leakage",
                 w.cfg.faults.eavesdropper_set.empty() ? "no tapped set configured"
                                                       : "measurement disabled");
  }

  rep.costs = w.meter;
  return rep;
}

}  // namespace rsfl
