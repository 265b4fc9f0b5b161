#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "codedfl/galois.hpp"

namespace codedfl::dnc {

/// 0/1 link indicators, one byte per link.
using LinkVector = std::vector<std::uint8_t>;

/// Finite-field representation of one client's quantized update.
struct Message {
    std::vector<gf::Symbol> symbols;

    friend bool operator==(const Message&, const Message&) = default;
};

/**
 * Systematic diversity-network-code matrix A = [I_M | A_1 | ... | A_M].
 *
 * A is M x M^2. Column block m (0-based) of width M-1 holds the coefficients
 * client m uses for its M-1 relay codewords. The parity part is a Cauchy
 * matrix, so every M-column submatrix of A is nonsingular.
 */
class EncodingMatrix {
public:
    EncodingMatrix(std::size_t clients, gf::SymbolMatrix matrix);

    std::size_t clients() const { return clients_; }
    const gf::SymbolMatrix& matrix() const { return matrix_; }

    /// M x (M-1) relay block of `client`.
    gf::SymbolMatrix block(std::size_t client) const;

    /// Column of A carrying relay slot `slot` (0-based, < M-1) of `client`.
    std::size_t relay_column(std::size_t client, std::size_t slot) const {
        return clients_ + client * (clients_ - 1) + slot;
    }

private:
    std::size_t clients_;
    gf::SymbolMatrix matrix_;
};

/// Work limit (masked minors) under which build_encoding_matrix searches point sets.
inline constexpr std::uint64_t kMaskSearchBudget = 1'000'000;
inline constexpr std::uint64_t kMaskSearchCandidates = 64;

/**
 * Builds [I_M | P] with P[i][j] = 1 / (x_i - y_j) for M^2 distinct field
 * points x_0..x_{M-1}, y_0..y_{M(M-1)-1}. Needs field order >= M^2.
 *
 * Candidate 0 takes the points 0, 1, ..., M^2-1. Any Cauchy choice is MDS,
 * but after clients zero the rows of messages they missed some choices
 * leave masked minors singular where generic coefficients would not. When
 * check_mask_genericity is affordable the first candidate with no such
 * minor is used (candidate c >= 1 draws points from seed c), falling back
 * to the candidate with the fewest. Otherwise candidate 0. Deterministic.
 */
EncodingMatrix build_encoding_matrix(std::size_t clients, const gf::GaloisField& field);

struct MaskVerdict {
    bool exhaustive = true;            ///< false: too expensive, nothing checked
    std::uint64_t minors_checked = 0;  ///< structurally nonsingular masked minors
    std::uint64_t singular = 0;        ///< of those, numerically singular
};

/**
 * Enumerates every square submatrix of the relay part of `code` under every
 * client mask (a client keeps its own row, may zero any other, and one mask
 * applies to all of that client's columns). Counts minors whose zero pattern
 * admits a nonzero determinant but whose value is singular. With zero such
 * minors the rank of every PS-side matrix equals its term rank, so the code
 * recovers exactly what generic coefficients would.
 */
MaskVerdict check_mask_genericity(const EncodingMatrix& code, const gf::GaloisField& field,
                                  std::uint64_t budget = kMaskSearchBudget);

struct MdsVerdict {
    bool pass = true;
    bool exhaustive = true;
    std::uint64_t subsets_checked = 0;
    std::optional<std::vector<std::size_t>> counterexample;  ///< column ids of a singular subset
};

/**
 * Checks that every `rows`-column submatrix of `matrix` is nonsingular.
 *
 * Exhaustive when C(cols, rows) <= budget, otherwise `budget` uniformly
 * random subsets drawn from `seed`.
 */
MdsVerdict verify_mds(const gf::SymbolMatrix& matrix, const gf::GaloisField& field, std::uint64_t budget,
                      std::uint64_t seed = 1);

inline MdsVerdict verify_mds(const EncodingMatrix& code, const gf::GaloisField& field, std::uint64_t budget,
                             std::uint64_t seed = 1) {
    return verify_mds(code.matrix(), field, budget, seed);
}

/// Client block after zeroing the rows of messages the client failed to decode.
struct MaskedBlock {
    std::size_t client = 0;
    gf::SymbolMatrix block;  ///< M x (M-1)
};

/// Zeroes row z of `block` wherever tau_in[z] == 0. A client always holds
/// its own message, so tau_in[client] must be 1 (std::invalid_argument otherwise).
MaskedBlock mask_client_block(const gf::SymbolMatrix& block, std::size_t client, const LinkVector& tau_in);

/**
 * Relay codewords of `masked.client`: codeword s is sum_z block(z, s) * U_z.
 *
 * `messages` is indexed by client; entries for masked (zero) rows are never
 * read, so a client passes only what it decoded. All used messages must
 * have the same length.
 */
std::vector<Message> relay_codewords(const MaskedBlock& masked, std::span<const Message> messages,
                                     const gf::GaloisField& field);

/// Where a column of the PS-side matrix was transmitted from.
struct ColumnSource {
    std::size_t client = 0;
    std::size_t slot = 0;  ///< 0 = first-slot direct transmission, s >= 1 = relay codeword s
    bool is_direct() const { return slot == 0; }
};

/// Encoding matrix of everything the PS received in one attempt.
struct PsMatrix {
    gf::SymbolMatrix a_hat;              ///< M x M^2
    std::vector<ColumnSource> sources;   ///< one per column
};

/**
 * Assembles [I_M Diag(tau_direct), masked_1 . tau_relay_1, ..., masked_M . tau_relay_M].
 *
 * `masked` holds one block per client in client order; tau_relay[m] has M-1
 * entries, one per relay slot of client m.
 */
PsMatrix assemble_ps_matrix(const std::vector<MaskedBlock>& masked, const LinkVector& tau_direct,
                            const std::vector<LinkVector>& tau_relay);

/// PS-side system with all-zero rows and columns removed.
struct PrunedSystem {
    std::vector<std::size_t> clients;  ///< W: nonzero rows of a_hat, ascending
    std::vector<std::size_t> columns;  ///< V: nonzero columns of a_hat, ascending
    gf::SymbolMatrix a_bar;            ///< a_hat(W, V)
    std::vector<ColumnSource> sources; ///< provenance of each column in V
};

PrunedSystem prune(const PsMatrix& ps);

class Undecodable : public std::runtime_error {
public:
    Undecodable(std::size_t rank, std::size_t unknowns);
    std::size_t rank() const { return rank_; }
    std::size_t unknowns() const { return unknowns_; }

private:
    std::size_t rank_;
    std::size_t unknowns_;
};

/// True iff rank(a_bar) == |W| and W is non-empty.
bool is_decodable(const PrunedSystem& sys, const gf::GaloisField& field);

/// Clients m in W whose message alone is recoverable, i.e. e_m lies in the
/// column space of a_bar. Equals W when the whole system is decodable.
std::vector<std::size_t> recoverable_clients(const PrunedSystem& sys, const gf::GaloisField& field);

/**
 * Recovers every message in W.
 *
 * `received` holds one row per received codeword, in the order of
 * sys.columns, each row `message length` symbols long. Throws Undecodable
 * when rank(a_bar) < |W|, gf::Inconsistent when a codeword outside the
 * solved basis disagrees with the result.
 */
std::map<std::size_t, Message> decode_messages(const PrunedSystem& sys, const gf::SymbolMatrix& received,
                                               const gf::GaloisField& field);

}  // namespace codedfl::dnc
