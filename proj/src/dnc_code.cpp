#include "codedfl/dnc_code.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "codedfl/random.hpp"

namespace codedfl::dnc {

EncodingMatrix::EncodingMatrix(std::size_t clients, gf::SymbolMatrix matrix)
    : clients_(clients), matrix_(std::move(matrix)) {
    if (clients_ == 0 || matrix_.rows() != clients_ || matrix_.cols() != clients_ * clients_) {
        throw std::invalid_argument(fmt::format("encoding matrix for {} clients must be {}x{}, got {}x{}", clients_,
                                                clients_, clients_ * clients_, matrix_.rows(), matrix_.cols()));
    }
}

gf::SymbolMatrix EncodingMatrix::block(std::size_t client) const {
    const std::size_t width = clients_ - 1;
    gf::SymbolMatrix out(clients_, width);
    for (std::size_t r = 0; r < clients_; ++r) {
        for (std::size_t s = 0; s < width; ++s) {
            out(r, s) = matrix_(r, relay_column(client, s));
        }
    }
    return out;
}

namespace {

// C(n, k), saturating at `cap` + 1.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (n-k+i) / i is exact; divide out gcd first to avoid overflow.
        const std::uint64_t g = std::gcd(result, i);
        const std::uint64_t factor = (n - k + i) / (i / g);
        result /= g;
        if (result > cap / factor) {
            return cap + 1;
        }
        result *= factor;
    }
    return result;
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

// Row-major nonzero pattern of a square matrix has a perfect matching.
bool structurally_nonsingular(const std::vector<std::vector<bool>>& nonzero) {
    const std::size_t n = nonzero.size();
    std::vector<std::size_t> match(n, n);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (!nonzero[r][c] || seen[c]) {
                continue;
            }
            seen[c] = true;
            if (match[c] == n || augment(match[c])) {
                match[c] = r;
                return true;
            }
        }
        return false;
    };
    for (std::size_t r = 0; r < n; ++r) {
        seen.assign(n, false);
        if (!augment(r)) {
            return false;
        }
    }
    return true;
}

// Upper bound on the number of masked minors check_mask_genericity visits.
std::uint64_t masked_minor_work(std::size_t clients, std::uint64_t cap) {
    const std::uint64_t parity = std::uint64_t{clients} * (clients - 1);
    std::uint64_t total = 0;
    for (std::uint64_t t = 2; t <= clients; ++t) {
        if (t * t >= 63) {
            return cap + 1;
        }
        const std::uint64_t rows = binomial_capped(clients, t, cap);
        const std::uint64_t cols = binomial_capped(parity, t, cap);
        const std::uint64_t masks = std::uint64_t{1} << (t * t);
        if (rows > cap || cols > cap || rows > cap / cols || rows * cols > cap / masks) {
            return cap + 1;
        }
        total += rows * cols * masks;
        if (total > cap) {
            return cap + 1;
        }
    }
    return total;
}

std::vector<gf::Symbol> cauchy_points(std::size_t count, const gf::GaloisField& field, std::uint64_t candidate) {
    std::vector<gf::Symbol> points;
    points.reserve(count);
    if (candidate == 0) {
        for (std::size_t i = 0; i < count; ++i) {
            points.push_back(field.symbol(i));
        }
        return points;
    }
    Rng rng = Rng::stream(candidate, StreamKind::monte_carlo, {field.order(), count});
    std::vector<bool> used;
    const bool dense = field.order() <= (std::uint64_t{1} << 20);
    if (dense) {
        used.assign(field.order(), false);
    }
    while (points.size() < count) {
        const gf::Symbol s(static_cast<std::uint32_t>(rng.below(field.order())));
        const bool taken = dense ? used[s.value()] : std::find(points.begin(), points.end(), s) != points.end();
        if (!taken) {
            if (dense) {
                used[s.value()] = true;
            }
            points.push_back(s);
        }
    }
    return points;
}

EncodingMatrix cauchy_code(std::size_t clients, const gf::GaloisField& field, std::uint64_t candidate) {
    const auto points = cauchy_points(clients * clients, field, candidate);
    gf::SymbolMatrix a(clients, clients * clients);
    for (std::size_t i = 0; i < clients; ++i) {
        a(i, i) = field.one();
    }
    const std::size_t parity = clients * (clients - 1);
    for (std::size_t i = 0; i < clients; ++i) {
        for (std::size_t j = 0; j < parity; ++j) {
            a(i, clients + j) = field.inv(field.sub(points[i], points[clients + j]));
        }
    }
    return EncodingMatrix(clients, std::move(a));
}

}  // namespace

EncodingMatrix build_encoding_matrix(std::size_t clients, const gf::GaloisField& field) {
    if (clients == 0) {
        throw std::invalid_argument("encoding matrix needs at least one client");
    }
    const std::uint64_t needed = std::uint64_t{clients} * clients;
    if (field.order() < needed) {
        throw std::invalid_argument(fmt::format("{} has order {} but {} clients need at least {}",
                                                field.spec().describe(), field.order(), clients, needed));
    }
    if (masked_minor_work(clients, kMaskSearchBudget) > kMaskSearchBudget) {
        return cauchy_code(clients, field, 0);
    }
    std::optional<EncodingMatrix> best;
    std::uint64_t best_singular = 0;
    for (std::uint64_t candidate = 0; candidate < kMaskSearchCandidates; ++candidate) {
        EncodingMatrix code = cauchy_code(clients, field, candidate);
        const auto verdict = check_mask_genericity(code, field, kMaskSearchBudget);
        if (verdict.singular == 0) {
            return code;
        }
        if (!best || verdict.singular < best_singular) {
            best = std::move(code);
            best_singular = verdict.singular;
        }
    }
    return std::move(*best);
}

MaskVerdict check_mask_genericity(const EncodingMatrix& code, const gf::GaloisField& field, std::uint64_t budget) {
    MaskVerdict verdict;
    const std::size_t m = code.clients();
    if (masked_minor_work(m, budget) > budget) {
        verdict.exhaustive = false;
        return verdict;
    }
    const std::size_t parity = m * (m - 1);
    const auto owner = [&](std::size_t j) { return j / (m - 1); };
    const gf::SymbolMatrix& a = code.matrix();
    for (std::size_t t = 2; t <= m; ++t) {
        std::vector<std::size_t> rows(t);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        do {
            std::vector<std::size_t> cols(t);
            std::iota(cols.begin(), cols.end(), std::size_t{0});
            do {
                std::vector<std::size_t> owners;
                for (std::size_t c : cols) {
                    owners.push_back(owner(c));
                }
                owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
                // A client may miss any message except its own; all columns of one
                // client share that client's mask.
                std::vector<std::vector<std::size_t>> free_rows(owners.size());
                std::size_t bits = 0;
                for (std::size_t o = 0; o < owners.size(); ++o) {
                    for (std::size_t r = 0; r < t; ++r) {
                        if (rows[r] != owners[o]) {
                            free_rows[o].push_back(r);
                        }
                    }
                    bits += free_rows[o].size();
                }
                // mask 0 is a plain Cauchy minor, nonsingular by construction.
                for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << bits); ++mask) {
                    std::vector<std::vector<bool>> zeroed(owners.size(), std::vector<bool>(t, false));
                    std::size_t bit = 0;
                    for (std::size_t o = 0; o < owners.size(); ++o) {
                        for (std::size_t r : free_rows[o]) {
                            zeroed[o][r] = ((mask >> bit++) & 1U) != 0;
                        }
                    }
                    gf::SymbolMatrix minor(t, t);
                    std::vector<std::vector<bool>> nonzero(t, std::vector<bool>(t, false));
                    for (std::size_t c = 0; c < t; ++c) {
                        const auto o = static_cast<std::size_t>(
                            std::find(owners.begin(), owners.end(), owner(cols[c])) - owners.begin());
                        for (std::size_t r = 0; r < t; ++r) {
                            if (!zeroed[o][r]) {
                                minor(r, c) = a(rows[r], m + cols[c]);
                                nonzero[r][c] = true;
                            }
                        }
                    }
                    if (!structurally_nonsingular(nonzero)) {
                        continue;
                    }
                    ++verdict.minors_checked;
                    if (gf::rank(field, minor) < t) {
                        ++verdict.singular;
                    }
                }
            } while (next_combination(cols, parity));
        } while (next_combination(rows, m));
    }
    return verdict;
}

MdsVerdict verify_mds(const gf::SymbolMatrix& matrix, const gf::GaloisField& field, std::uint64_t budget,
                      std::uint64_t seed) {
    MdsVerdict verdict;
    const std::size_t k = matrix.rows();
    const std::size_t n = matrix.cols();
    if (k == 0 || n < k) {
        verdict.pass = n >= k;
        return verdict;
    }

    auto singular = [&](const std::vector<std::size_t>& cols) {
        return gf::rank(field, matrix.select_cols(cols)) < k;
    };

    const std::uint64_t total = binomial_capped(n, k, budget);
    if (total <= budget) {
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        do {
            ++verdict.subsets_checked;
            if (singular(idx)) {
                verdict.pass = false;
                verdict.counterexample = idx;
                return verdict;
            }
        } while (next_combination(idx, n));
        return verdict;
    }

    verdict.exhaustive = false;
    Rng rng = Rng::stream(seed, StreamKind::monte_carlo, {n, k});
    std::vector<std::size_t> pool(n);
    for (std::uint64_t t = 0; t < budget; ++t) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> cols(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(cols.begin(), cols.end());
        ++verdict.subsets_checked;
        if (singular(cols)) {
            verdict.pass = false;
            verdict.counterexample = std::move(cols);
            return verdict;
        }
    }
    return verdict;
}

MaskedBlock mask_client_block(const gf::SymbolMatrix& block, std::size_t client, const LinkVector& tau_in) {
    if (tau_in.size() != block.rows() || client >= block.rows()) {
        throw std::invalid_argument(fmt::format("mask of length {} for a block with {} rows (client {})",
                                                tau_in.size(), block.rows(), client));
    }
    if (tau_in[client] == 0) {
        throw std::invalid_argument(fmt::format("client {} must hold its own message", client));
    }
    MaskedBlock out{client, block};
    for (std::size_t z = 0; z < block.rows(); ++z) {
        if (tau_in[z] == 0) {
            auto row = out.block.row(z);
            std::fill(row.begin(), row.end(), gf::Symbol(0));
        }
    }
    return out;
}

std::vector<Message> relay_codewords(const MaskedBlock& masked, std::span<const Message> messages,
                                     const gf::GaloisField& field) {
    const gf::SymbolMatrix& blk = masked.block;
    if (messages.size() != blk.rows()) {
        throw std::invalid_argument(
            fmt::format("relay_codewords: {} messages for {} rows", messages.size(), blk.rows()));
    }
    std::size_t length = 0;
    bool have_length = false;
    for (std::size_t z = 0; z < blk.rows(); ++z) {
        if (blk.row_is_zero(z)) {
            continue;
        }
        const std::size_t len = messages[z].symbols.size();
        if (have_length && len != length) {
            throw std::invalid_argument("relay_codewords: messages differ in length");
        }
        length = len;
        have_length = true;
    }
    std::vector<Message> out(blk.cols(), Message{std::vector<gf::Symbol>(length)});
    for (std::size_t s = 0; s < blk.cols(); ++s) {
        for (std::size_t z = 0; z < blk.rows(); ++z) {
            const gf::Symbol coeff = blk(z, s);
            if (!coeff.is_zero()) {
                field.axpy(out[s].symbols, coeff, messages[z].symbols);
            }
        }
    }
    return out;
}

PsMatrix assemble_ps_matrix(const std::vector<MaskedBlock>& masked, const LinkVector& tau_direct,
                            const std::vector<LinkVector>& tau_relay) {
    const std::size_t m = masked.size();
    if (tau_direct.size() != m || tau_relay.size() != m) {
        throw std::invalid_argument("assemble_ps_matrix: link vectors do not match client count");
    }
    PsMatrix ps{gf::SymbolMatrix(m, m * m), {}};
    ps.sources.reserve(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        ps.a_hat(i, i) = gf::Symbol(tau_direct[i] ? 1 : 0);
        ps.sources.push_back({i, 0});
    }
    const std::size_t width = m - 1;
    for (std::size_t c = 0; c < m; ++c) {
        const MaskedBlock& blk = masked[c];
        if (blk.client != c || blk.block.rows() != m || blk.block.cols() != width || tau_relay[c].size() != width) {
            throw std::invalid_argument(fmt::format("assemble_ps_matrix: malformed block for client {}", c));
        }
        for (std::size_t s = 0; s < width; ++s) {
            const std::size_t col = m + c * width + s;
            ps.sources.push_back({c, s + 1});
            if (tau_relay[c][s] == 0) {
                continue;
            }
            for (std::size_t r = 0; r < m; ++r) {
                ps.a_hat(r, col) = blk.block(r, s);
            }
        }
    }
    return ps;
}

PrunedSystem prune(const PsMatrix& ps) {
    PrunedSystem sys;
    for (std::size_t r = 0; r < ps.a_hat.rows(); ++r) {
        if (!ps.a_hat.row_is_zero(r)) {
            sys.clients.push_back(r);
        }
    }
    for (std::size_t c = 0; c < ps.a_hat.cols(); ++c) {
        if (!ps.a_hat.col_is_zero(c)) {
            sys.columns.push_back(c);
            sys.sources.push_back(ps.sources.at(c));
        }
    }
    sys.a_bar = ps.a_hat.select(sys.clients, sys.columns);
    return sys;
}

Undecodable::Undecodable(std::size_t rank, std::size_t unknowns)
    : std::runtime_error(fmt::format("undecodable round: rank {} < {} involved messages", rank, unknowns)),
      rank_(rank),
      unknowns_(unknowns) {}

bool is_decodable(const PrunedSystem& sys, const gf::GaloisField& field) {
    return !sys.clients.empty() && gf::rank(field, sys.a_bar) == sys.clients.size();
}

std::vector<std::size_t> recoverable_clients(const PrunedSystem& sys, const gf::GaloisField& field) {
    std::vector<std::size_t> out;
    const std::size_t w = sys.clients.size();
    if (w == 0) {
        return out;
    }
    const std::size_t base = gf::rank(field, sys.a_bar);
    if (base == w) {
        return sys.clients;
    }
    const std::size_t v = sys.a_bar.cols();
    for (std::size_t i = 0; i < w; ++i) {
        gf::SymbolMatrix augmented(w, v + 1);
        for (std::size_t r = 0; r < w; ++r) {
            for (std::size_t c = 0; c < v; ++c) {
                augmented(r, c) = sys.a_bar(r, c);
            }
        }
        augmented(i, v) = field.one();
        if (gf::rank(field, augmented) == base) {
            out.push_back(sys.clients[i]);
        }
    }
    return out;
}

std::map<std::size_t, Message> decode_messages(const PrunedSystem& sys, const gf::SymbolMatrix& received,
                                               const gf::GaloisField& field) {
    if (received.rows() != sys.columns.size()) {
        throw std::invalid_argument(fmt::format("decode: {} codewords received for {} surviving columns",
                                                received.rows(), sys.columns.size()));
    }
    std::map<std::size_t, Message> out;
    const std::size_t w = sys.clients.size();
    if (w == 0) {
        return out;
    }
    // Received codewords satisfy  C = U_W * A_bar, i.e.  A_bar^T * U_W^T = C^T,
    // and `received` already stores C^T (one codeword per row). Solve on |W|
    // independent codewords; every other codeword is then checked against
    // the solution.
    const gf::SymbolMatrix coeffs = sys.a_bar.transpose();
    std::vector<std::size_t> all_unknowns(w);
    std::iota(all_unknowns.begin(), all_unknowns.end(), std::size_t{0});
    std::vector<std::size_t> basis;
    for (std::size_t i = 0; i < coeffs.rows() && basis.size() < w; ++i) {
        basis.push_back(i);
        if (gf::rank(field, coeffs.select(basis, all_unknowns)) < basis.size()) {
            basis.pop_back();
        }
    }
    if (basis.size() < w) {
        throw Undecodable(basis.size(), w);
    }
    std::vector<std::size_t> all_symbols(received.cols());
    std::iota(all_symbols.begin(), all_symbols.end(), std::size_t{0});
    const gf::SymbolMatrix solution =
        gf::solve(field, coeffs.select(basis, all_unknowns), received.select(basis, all_symbols));

    std::vector<gf::Symbol> expected(received.cols());
    for (std::size_t i = 0, next = 0; i < coeffs.rows(); ++i) {
        if (next < basis.size() && basis[next] == i) {
            ++next;
            continue;
        }
        std::fill(expected.begin(), expected.end(), gf::Symbol(0));
        for (std::size_t u = 0; u < w; ++u) {
            field.axpy(expected, coeffs(i, u), solution.row(u));
        }
        if (!std::equal(expected.begin(), expected.end(), received.row(i).begin())) {
            throw gf::Inconsistent(fmt::format("codeword from column {} disagrees with the decoded messages",
                                               sys.columns[i]));
        }
    }
    for (std::size_t i = 0; i < w; ++i) {
        const auto row = solution.row(i);
        out.emplace(sys.clients[i], Message{{row.begin(), row.end()}});
    }
    return out;
}

}  // namespace codedfl::dnc
