#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cstddef>
#include <functional>
#include <vector>

#include "codedfl/channel.hpp"
#include "codedfl/dnc_code.hpp"
#include "codedfl/galois.hpp"

namespace oracle {

// Size of a maximum matching between rows and columns over nonzero entries.
inline std::size_t term_rank(const std::vector<std::vector<bool>>& nz, std::size_t cols) {
    const std::size_t rows = nz.size();
    std::vector<std::size_t> match(cols, rows);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (nz[r][c] && !seen[c]) {
                seen[c] = true;
                if (match[c] == rows || augment(match[c])) {
                    match[c] = r;
                    return true;
                }
            }
        }
        return false;
    };
    std::size_t size = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        seen.assign(cols, false);
        size += augment(r) ? 1 : 0;
    }
    return size;
}

// Whether client `m` (a row of sys) is recoverable when every structurally
// nonzero entry of A_bar is an independent indeterminate:
//   rank([A | e_m]) = 1 + rank(A without row m), so recoverable iff
//   term_rank(A) == term_rank(A without row m) + 1.
inline bool generic_recoverable(const codedfl::dnc::PrunedSystem& sys, std::size_t row) {
    const auto& a = sys.a_bar;
    std::vector<std::vector<bool>> all(a.rows(), std::vector<bool>(a.cols()));
    std::vector<std::vector<bool>> without;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            all[r][c] = !a(r, c).is_zero();
        }
        if (r != row) {
            without.push_back(all[r]);
        }
    }
    return term_rank(all, a.cols()) == term_rank(without, a.cols()) + 1;
}

// Every erasure pattern of an M-client round: M(M-1) D2D bits, M direct
// bits, M(M-1) relay bits, decoded from `bits` in that order.
inline codedfl::channel::ConnectivityRealization pattern(std::size_t m, unsigned long long bits) {
    codedfl::channel::ConnectivityRealization links = codedfl::channel::full_connectivity(m);
    unsigned b = 0;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
            if (k != j) {
                links.d2d[k][j] = (bits >> b++) & 1U;
            }
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        links.direct[k] = (bits >> b++) & 1U;
    }
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t s = 0; s + 1 < m; ++s) {
            links.relay[k][s] = (bits >> b++) & 1U;
        }
    }
    return links;
}

inline unsigned pattern_bits(std::size_t m) { return static_cast<unsigned>(2 * m * (m - 1) + m); }

}  // namespace oracle

namespace oracle {

// PS-side matrix built entry by entry from the link indicators:
//   direct column k:        A(z, k) * direct[k]
//   relay column (k, s):    A(z, col) * d2d[k][z] * relay[k][s]
// followed by removal of zero rows and columns.
inline codedfl::dnc::PrunedSystem reference_system(const codedfl::dnc::EncodingMatrix& code,
                                                   const codedfl::channel::ConnectivityRealization& links) {
    const std::size_t m = code.clients();
    codedfl::gf::SymbolMatrix full(m, m * m);
    for (std::size_t z = 0; z < m; ++z) {
        for (std::size_t k = 0; k < m; ++k) {
            if (links.direct[k]) {
                full(z, k) = code.matrix()(z, k);
            }
            for (std::size_t s = 0; s + 1 < m; ++s) {
                const std::size_t col = code.relay_column(k, s);
                if (links.d2d[k][z] && links.relay[k][s]) {
                    full(z, col) = code.matrix()(z, col);
                }
            }
        }
    }
    codedfl::dnc::PrunedSystem sys;
    for (std::size_t z = 0; z < m; ++z) {
        if (!full.row_is_zero(z)) {
            sys.clients.push_back(z);
        }
    }
    for (std::size_t c = 0; c < m * m; ++c) {
        if (!full.col_is_zero(c)) {
            sys.columns.push_back(c);
            sys.sources.push_back(c < m ? codedfl::dnc::ColumnSource{c, 0}
                                        : codedfl::dnc::ColumnSource{(c - m) / (m - 1), (c - m) % (m - 1) + 1});
        }
    }
    sys.a_bar = full.select(sys.clients, sys.columns);
    return sys;
}

// Codewords the PS holds, one row per column of `sys`.
inline codedfl::gf::SymbolMatrix received_rows(const codedfl::dnc::PrunedSystem& sys,
                                               const std::vector<codedfl::dnc::Message>& messages,
                                               const codedfl::gf::GaloisField& field) {
    const std::size_t len = messages.front().symbols.size();
    codedfl::gf::SymbolMatrix out(sys.columns.size(), len);
    for (std::size_t j = 0; j < sys.columns.size(); ++j) {
        for (std::size_t i = 0; i < sys.clients.size(); ++i) {
            const auto coef = sys.a_bar(i, j);
            for (std::size_t t = 0; t < len; ++t) {
                out(j, t) = field.add(out(j, t), field.mul(coef, messages[sys.clients[i]].symbols[t]));
            }
        }
    }
    return out;
}

// Counts of received codewords from the clients holding U_target.
struct HolderCounts {
    std::size_t holders = 0;     // |N_m|: clients that hold U_m, including m
    std::size_t involving = 0;   // received codewords from holders that carry U_m
    std::size_t all = 0;         // every received codeword from holders
};

inline HolderCounts holder_counts(const codedfl::channel::ConnectivityRealization& links, std::size_t target) {
    const std::size_t m = links.clients();
    HolderCounts h;
    for (std::size_t k = 0; k < m; ++k) {
        if (!links.d2d[k][target]) {
            continue;
        }
        ++h.holders;
        if (links.direct[k]) {
            ++h.all;
            h.involving += k == target ? 1 : 0;
        }
        for (std::size_t s = 0; s + 1 < m; ++s) {
            if (links.relay[k][s]) {
                ++h.all;
                ++h.involving;
            }
        }
    }
    return h;
}

}  // namespace oracle
