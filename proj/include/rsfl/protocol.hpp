#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "rsfl/codec.hpp"
#include "rsfl/field.hpp"
#include "rsfl/rational.hpp"
#include "rsfl/rng.hpp"

namespace rsfl {

// Databases are addressed by their 1-based id; clients live above this base
// so both sides share one address space in transcripts.
constexpr uint32_t kClientAddrBase = 1000;

inline uint32_t client_addr(uint32_t client_id) { return kClientAddrBase + client_id; }

struct SystemParams {
  uint32_t n_databases = 0;    // N
  uint32_t n_clients = 0;      // C
  uint32_t n_submodels = 0;    // K
  uint32_t sub_len = 0;        // L, symbols per submodel
  uint32_t d_reconstruct = 0;  // D
  uint32_t j_collude = 0;      // J
  uint32_t e_eavesdrop = 0;    // E
  uint32_t a_adversary = 0;    // A
  Rat delta;
  uint32_t modulus = 0;
  std::vector<uint32_t> group_of;  // client i (entry i-1) -> database id

  // Raises ScenarioInfeasible unless N > D > E, E <= J, the A > 0 bound
  // N >= max(2A+D, (J+1)(2A+1)) holds, q is a prime above max(C, N), delta is
  // in [0, 1], and group_of partitions the clients over databases in [N].
  void validate() const;

  // groups()[j-1] lists the client ids of database j's group, ascending.
  std::vector<std::vector<uint32_t>> groups() const;
};

enum class MessageKind : uint32_t {
  AU1 = 1,
  DU2,
  AU2,
  DW1req,
  DW1resp,
  AW1,
  DW2,
  AW2,
  RepairShare,
  CrBroadcast,
  CrrShare,
  GammaAnnounce,
};

const char* message_kind_name(MessageKind kind);

struct PhaseMessage {
  MessageKind kind = MessageKind::AU1;
  uint32_t sender = 0;
  uint32_t receiver = 0;
  std::vector<uint32_t> payload;
  std::vector<uint32_t> meta;  // kind-specific ids (group, rider count, ...)

  // 16-byte little-endian header (kind, sender, receiver, payload length)
  // followed by the payload as little-endian u32 residues.
  std::vector<uint8_t> serialize() const;
};

struct ClientState {
  uint32_t id = 0;
  uint32_t group = 0;                 // database this client answers to
  std::vector<uint32_t> gamma;        // desired submodel ids, ascending
  std::vector<uint32_t> incidence;    // K entries in {0,1}
  std::map<uint32_t, std::vector<uint32_t>> increments;  // k -> L* values

  uint32_t scalar_c = 0;              // 0 means not yet distributed
  std::vector<uint32_t> mask_union;   // w<i>_k, K entries
  std::map<uint32_t, std::vector<uint32_t>> mask_write;  // k -> L* entries

  // Routing-only state. club_union holds this router's slot of the zero-sum
  // set per submodel; club_write holds the slot appended on all-message
  // columns, keyed by (submodel, instance, column).
  std::vector<uint32_t> club_union;
  std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> club_write;
  std::map<uint32_t, std::vector<uint32_t>> recovered;  // k -> L* messages
};

struct DatabaseState {
  uint32_t id = 0;
  std::vector<std::vector<CodedRow>> store;     // [k-1][instance]
  std::vector<uint32_t> cr_union;               // \hat R_k, K entries
  std::vector<std::vector<uint32_t>> cr_write;  // \hat R_{k,l}, K x L*
};

// --- Common randomness generation -----------------------------------------

// contributions holds one row per contributor, each of length set_len - 1.
// Element i of the result sums column i; the closing element forces the total
// to zero. Raises WrongContributorCount unless exactly `contributors` rows of
// equal length arrive.
std::vector<uint32_t> crg_zero_sum_set(
    const Field& f, const std::vector<std::vector<uint32_t>>& contributions,
    uint32_t contributors);

// Product of nonzero contributions; ZeroContribution guards the group law.
uint32_t crg_scalar_c(const Field& f, const std::vector<uint32_t>& contributions);

// --- Private set union ------------------------------------------------------

PhaseMessage psu_client_answer(const Field& f, const ClientState& client);

// Element-wise sum of the collected group answers plus \hat R_k, addressed to
// the group's routing client.
PhaseMessage psu_db_aggregate(const Field& f, const DatabaseState& db,
                              const std::vector<const PhaseMessage*>& answers,
                              uint32_t router_id);

PhaseMessage psu_route_answer(const Field& f, const ClientState& router,
                              const std::vector<uint32_t>& du2, uint32_t target_db);

// k joins the union when the router sum minus (#answers) * \hat R_k is
// nonzero. `extra` carries per-k compensation values already summed.
std::vector<uint32_t> psu_decode_union(const Field& f, const DatabaseState& db,
                                       const std::vector<const PhaseMessage*>& answers,
                                       const std::vector<uint32_t>& extra = {});

// --- Coded write-back -------------------------------------------------------

// Message-slot bases of the plan's instances across `passes` passes; entry g
// pairs instance g's layout with its offset into the padded span.
struct SpanRef {
  const OmegaLayout* layout = nullptr;
  uint32_t offset = 0;
};
std::vector<SpanRef> instance_spans(const RsrcPlan& plan, uint32_t passes);

struct ReadPosition {
  uint32_t db = 0;
  uint32_t submodel = 0;
  uint32_t instance = 0;  // 0-based global instance
  uint32_t column = 0;    // 1-based
};

// Download schedule recovering every submodel in gamma: with no adversary,
// column c of each instance comes from the first D-c+1 live databases; with A
// adversaries every needed column is read from D+2A databases.
std::vector<ReadPosition> write_read_positions(const RsrcPlan& plan, uint32_t passes,
                                               const std::vector<uint32_t>& gamma,
                                               const std::vector<uint32_t>& live_dbs,
                                               uint32_t a_adversary);

struct DecodedInstance {
  std::vector<uint32_t> messages;    // layout.B entries
  std::vector<uint32_t> randomness;  // layout.R entries
};

// One downloaded column: (psi, symbol) samples in database order.
struct ColumnSamples {
  uint32_t column = 0;
  std::vector<std::pair<uint32_t, uint32_t>> samples;
};

// Peel-decodes the sampled leading columns (mirror cells substitute across
// columns); with a_adversary > 0 each column is instead error-corrected as a
// Reed-Solomon word. Cells outside the sampled columns stay zero.
DecodedInstance write_decode_instance(const Field& f, const OmegaLayout& layout,
                                      const std::vector<ColumnSamples>& columns,
                                      uint32_t a_adversary);

PhaseMessage write_client_answer(const Field& f, const ClientState& client,
                                 const std::vector<uint32_t>& gamma, uint32_t l_star);

PhaseMessage write_db_aggregate(const Field& f, const DatabaseState& db,
                                const std::vector<const PhaseMessage*>& answers,
                                const std::vector<uint32_t>& gamma, uint32_t l_star,
                                uint32_t router_id);

// One coded answer per target database. The embedding router adds the
// recovered messages into message cells; every router fills randomness cells
// with fresh draws shared across targets, and appends its club slot on
// all-message columns. `riders` lands at the tail of the replacement's
// payload only (meta records the rider count).
std::vector<PhaseMessage> write_route_answer(
    const Field& f, const ClientState& router, const RsrcPlan& plan, uint32_t passes,
    const std::vector<uint32_t>& gamma, const std::vector<uint32_t>& dw2,
    bool embed_model, const std::vector<std::pair<uint32_t, uint32_t>>& targets,
    Rng& fresh, const std::vector<uint32_t>& riders = {}, uint32_t replacement_db = 0);

// Element-wise sum of the router answers plus `beta` compensation, minus
// (#answers) * psi-weighted \hat R over message cells; the result replaces the
// stored rows for every submodel in gamma. Raises MissingRouterAnswer when no
// answer arrived and InconsistentAnswer on payload-shape mismatches.
void write_commit_storage(const Field& f, DatabaseState& db,
                          const std::vector<const PhaseMessage*>& answers,
                          const std::vector<uint32_t>& beta, const RsrcPlan& plan,
                          uint32_t passes, const std::vector<uint32_t>& gamma,
                          uint32_t l_star, uint32_t psi);

// --- Server randomness refresh ----------------------------------------------

// \hat R' = share1 + share2; MissingShare rejects a self-paired client.
uint32_t crr_refresh(const Field& f, uint32_t share1, uint32_t share2,
                     uint32_t client1, uint32_t client2);

// --- Robustness remedies ----------------------------------------------------

// c * sum of the dropped clients' union masks, per submodel. A null mask
// raises UnknownDroppedClient.
std::vector<uint32_t> dropout_compensation_psu(
    const Field& f, uint32_t c,
    const std::vector<const std::vector<uint32_t>*>& dropped_masks,
    uint32_t n_submodels);

// Beta correction for one target database: per (k, instance, column), the
// psi-weighted sum over message cells of the dropped clients' write masks.
std::vector<uint32_t> dropout_compensation_write(
    const Field& f, const RsrcPlan& plan, uint32_t passes,
    const std::vector<uint32_t>& gamma,
    const std::vector<const std::map<uint32_t, std::vector<uint32_t>>*>& dropped_masks,
    uint32_t psi);

// Compensation for a silent database's whole group: c * sum of the group's
// union masks plus the group's router club slot, per submodel. An empty club
// vector raises MissingCompensation.
std::vector<uint32_t> db_dropout_compensation(
    const Field& f, uint32_t c,
    const std::vector<const std::vector<uint32_t>*>& group_masks,
    const std::vector<uint32_t>& club, uint32_t n_submodels);

// Rebuilds the replacement's rows for every submodel outside gamma from rider
// repair shares ordered (k ascending, instance, helper). Updated submodels are
// expected to arrive through write_commit_storage instead.
void repair_failed_database(const Field& f, DatabaseState& replacement,
                            const RsrcPlan& plan, uint32_t passes,
                            uint32_t n_submodels, const std::vector<uint32_t>& gamma,
                            const std::vector<uint32_t>& riders,
                            const std::vector<uint32_t>& helper_dbs,
                            const std::vector<uint32_t>& psis, uint32_t failed_db,
                            uint32_t a_adversary);

// Per-symbol majority over 2A+1 copies; NoMajority signals too many
// corruptions.
std::vector<uint32_t> adversary_decode_repetition(
    const std::vector<std::vector<uint32_t>>& copies, uint32_t a_adversary);

// Unique degree-(D-1) polynomial through at least D+A of the D+2A samples,
// returned as its D coefficients; DecodingFailure when none qualifies.
std::vector<uint32_t> adversary_decode_rs(
    const Field& f, const std::vector<std::pair<uint32_t, uint32_t>>& samples,
    uint32_t D, uint32_t a_adversary);

}  // namespace rsfl
