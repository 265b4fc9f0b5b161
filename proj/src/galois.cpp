#include "codedfl/galois.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace codedfl::gf {

namespace {

constexpr unsigned kMaxWidth = 16;
constexpr std::uint64_t kMaxPrime = (1ULL << 31);

unsigned degree(std::uint32_t poly) { return poly == 0 ? 0 : 31u - static_cast<unsigned>(std::countl_zero(poly)); }

// Remainder of a divided by b over GF(2); b != 0.
std::uint32_t poly_mod(std::uint32_t a, std::uint32_t b) {
    const unsigned db = degree(b);
    while (a != 0 && degree(a) >= db) {
        a ^= b << (degree(a) - db);
    }
    return a;
}

std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exponent, std::uint64_t modulus) {
    std::uint64_t result = 1 % modulus;
    base %= modulus;
    while (exponent > 0) {
        if (exponent & 1) {
            result = result * base % modulus;
        }
        base = base * base % modulus;
        exponent >>= 1;
    }
    return result;
}

}  // namespace

RankDeficient::RankDeficient(std::size_t rank, std::size_t unknowns)
    : std::runtime_error(fmt::format("rank deficient system: rank {} < {} unknowns", rank, unknowns)),
      rank_(rank),
      unknowns_(unknowns) {}

std::uint32_t FieldSpec::default_polynomial(unsigned width) {
    static constexpr std::array<std::uint32_t, kMaxWidth + 1> kPolys = {
        0,      0x3,    0x7,    0xB,    0x13,   0x25,   0x43,   0x89,   0x11D,
        0x211,  0x409,  0x805,  0x1053, 0x201B, 0x4443, 0x8003, 0x1100B,
    };
    if (width == 0 || width > kMaxWidth) {
        throw FieldError(fmt::format("unsupported binary field width {} (1..{})", width, kMaxWidth));
    }
    return kPolys[width];
}

std::string FieldSpec::describe() const {
    if (kind == Kind::prime) {
        return fmt::format("GF({})", modulus);
    }
    return fmt::format("GF(2^{}) poly 0x{:X}", width, polynomial);
}

std::uint32_t carryless_mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t polynomial, unsigned width) {
    std::uint32_t result = 0;
    const std::uint32_t top = 1u << width;
    while (b != 0) {
        if (b & 1u) {
            result ^= a;
        }
        b >>= 1;
        a <<= 1;
        if (a & top) {
            a ^= polynomial;
        }
    }
    return result;
}

bool is_irreducible(std::uint32_t polynomial, unsigned width) {
    if (width == 0 || width > kMaxWidth || degree(polynomial) != width) {
        return false;
    }
    // Any reducible polynomial of degree w has a factor of degree <= w/2.
    for (unsigned d = 1; d <= width / 2; ++d) {
        for (std::uint32_t f = 1u << d; f < (2u << d); ++f) {
            if (poly_mod(polynomial, f) == 0) {
                return false;
            }
        }
    }
    return true;
}

bool is_prime(std::uint64_t n) {
    if (n < 2) {
        return false;
    }
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            return false;
        }
    }
    return true;
}

GaloisField::GaloisField(const FieldSpec& spec) : spec_(spec) {
    if (spec.kind == FieldSpec::Kind::prime) {
        if (spec.modulus >= kMaxPrime || !is_prime(spec.modulus)) {
            throw FieldError(fmt::format("modulus {} is not a prime below 2^31", spec.modulus));
        }
        order_ = spec.modulus;
        return;
    }

    if (spec.width == 0 || spec.width > kMaxWidth) {
        throw FieldError(fmt::format("unsupported binary field width {} (1..{})", spec.width, kMaxWidth));
    }
    if (!is_irreducible(spec.polynomial, spec.width)) {
        throw FieldError(fmt::format("polynomial 0x{:X} is reducible or not of degree {}", spec.polynomial,
                                     spec.width));
    }
    order_ = 1ULL << spec.width;
    const std::uint64_t group = order_ - 1;

    // The reduction polynomial need not be primitive, so search for a generator.
    std::uint32_t generator = 0;
    for (std::uint32_t g = (group == 1 ? 1u : 2u); g < order_; ++g) {
        std::uint32_t x = g;
        std::uint64_t period = 1;
        while (x != 1) {
            x = carryless_mulmod(x, g, spec.polynomial, spec.width);
            ++period;
        }
        if (period == group) {
            generator = g;
            break;
        }
    }

    exp_.resize(2 * group);
    log_.assign(order_, 0);
    std::uint32_t x = 1;
    for (std::uint64_t i = 0; i < group; ++i) {
        exp_[i] = x;
        exp_[i + group] = x;
        log_[x] = static_cast<std::uint32_t>(i);
        x = carryless_mulmod(x, generator, spec.polynomial, spec.width);
    }
}

Symbol GaloisField::symbol(std::uint64_t value) const {
    if (value >= order_) {
        throw FieldError(fmt::format("value {} outside field of order {}", value, order_));
    }
    return Symbol(static_cast<std::uint32_t>(value));
}

Symbol GaloisField::add(Symbol a, Symbol b) const {
    if (is_binary()) {
        return Symbol(a.value() ^ b.value());
    }
    return Symbol(static_cast<std::uint32_t>((std::uint64_t{a.value()} + b.value()) % order_));
}

Symbol GaloisField::neg(Symbol a) const {
    if (is_binary() || a.is_zero()) {
        return a;
    }
    return Symbol(static_cast<std::uint32_t>(order_ - a.value()));
}

Symbol GaloisField::sub(Symbol a, Symbol b) const { return add(a, neg(b)); }

Symbol GaloisField::mul(Symbol a, Symbol b) const {
    if (a.is_zero() || b.is_zero()) {
        return Symbol(0);
    }
    if (is_binary()) {
        return Symbol(exp_[log_[a.value()] + log_[b.value()]]);
    }
    return Symbol(static_cast<std::uint32_t>(std::uint64_t{a.value()} * b.value() % order_));
}

Symbol GaloisField::inv(Symbol a) const {
    if (a.is_zero()) {
        throw FieldError("inverse of zero");
    }
    if (is_binary()) {
        const std::uint64_t group = order_ - 1;
        return Symbol(exp_[(group - log_[a.value()]) % group]);
    }
    return Symbol(static_cast<std::uint32_t>(mod_pow(a.value(), order_ - 2, order_)));
}

Symbol GaloisField::pow(Symbol a, std::uint64_t exponent) const {
    if (exponent == 0) {
        return one();
    }
    if (a.is_zero()) {
        return zero();
    }
    if (is_binary()) {
        const std::uint64_t group = order_ - 1;
        return Symbol(exp_[(log_[a.value()] * (exponent % group)) % group]);
    }
    return Symbol(static_cast<std::uint32_t>(mod_pow(a.value(), exponent, order_)));
}

void GaloisField::axpy(std::span<Symbol> y, Symbol a, std::span<const Symbol> x) const {
    if (a.is_zero()) {
        return;
    }
    const std::size_t n = std::min(y.size(), x.size());
    if (is_binary()) {
        const std::uint32_t la = log_[a.value()];
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t xi = x[i].value();
            if (xi != 0) {
                y[i] = Symbol(y[i].value() ^ exp_[log_[xi] + la]);
            }
        }
        return;
    }
    const std::uint64_t av = a.value();
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = Symbol(static_cast<std::uint32_t>((y[i].value() + av * x[i].value()) % order_));
    }
}

void GaloisField::scale(std::span<Symbol> x, Symbol a) const {
    for (Symbol& v : x) {
        v = mul(v, a);
    }
}

SymbolMatrix::SymbolMatrix(std::size_t rows, std::size_t cols, std::vector<Symbol> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument(
            fmt::format("matrix {}x{} given {} entries", rows, cols, data_.size()));
    }
}

SymbolMatrix SymbolMatrix::identity(std::size_t n) {
    SymbolMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = Symbol(1);
    }
    return m;
}

bool SymbolMatrix::row_is_zero(std::size_t r) const {
    const auto values = row(r);
    return std::all_of(values.begin(), values.end(), [](Symbol s) { return s.is_zero(); });
}

bool SymbolMatrix::col_is_zero(std::size_t c) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        if (!(*this)(r, c).is_zero()) {
            return false;
        }
    }
    return true;
}

SymbolMatrix SymbolMatrix::transpose() const {
    SymbolMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

SymbolMatrix SymbolMatrix::select(std::span<const std::size_t> row_ids, std::span<const std::size_t> col_ids) const {
    SymbolMatrix out(row_ids.size(), col_ids.size());
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
        for (std::size_t j = 0; j < col_ids.size(); ++j) {
            out(i, j) = (*this)(row_ids[i], col_ids[j]);
        }
    }
    return out;
}

SymbolMatrix SymbolMatrix::select_cols(std::span<const std::size_t> col_ids) const {
    std::vector<std::size_t> all(rows_);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return select(all, col_ids);
}

SymbolMatrix multiply(const GaloisField& field, const SymbolMatrix& a, const SymbolMatrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument(
            fmt::format("shape mismatch {}x{} * {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    SymbolMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            field.axpy(out.row(i), a(i, k), b.row(k));
        }
    }
    return out;
}

std::size_t rank(const GaloisField& field, SymbolMatrix a) {
    std::size_t r = 0;
    for (std::size_t col = 0; col < a.cols() && r < a.rows(); ++col) {
        std::size_t pivot = r;
        while (pivot < a.rows() && a(pivot, col).is_zero()) {
            ++pivot;
        }
        if (pivot == a.rows()) {
            continue;
        }
        if (pivot != r) {
            std::swap_ranges(a.row(pivot).begin(), a.row(pivot).end(), a.row(r).begin());
        }
        const Symbol inv = field.inv(a(r, col));
        field.scale(a.row(r), inv);
        for (std::size_t i = r + 1; i < a.rows(); ++i) {
            const Symbol factor = a(i, col);
            if (!factor.is_zero()) {
                field.axpy(a.row(i), field.neg(factor), a.row(r));
            }
        }
        ++r;
    }
    return r;
}

SymbolMatrix solve(const GaloisField& field, const SymbolMatrix& a, const SymbolMatrix& c) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    if (c.rows() != n) {
        throw std::invalid_argument(fmt::format("solve: {} equations but {} right-hand rows", n, c.rows()));
    }
    if (n < k) {
        throw RankDeficient(rank(field, a), k);
    }

    // Eliminate on the small coefficient matrix only and record the row
    // operations in `ops` (ops * A == work), then apply them to C once.
    SymbolMatrix work = a;
    SymbolMatrix ops = SymbolMatrix::identity(n);
    auto swap_rows = [](SymbolMatrix& m, std::size_t i, std::size_t j) {
        std::swap_ranges(m.row(i).begin(), m.row(i).end(), m.row(j).begin());
    };

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        while (pivot < n && work(pivot, col).is_zero()) {
            ++pivot;
        }
        if (pivot == n) {
            throw RankDeficient(rank(field, a), k);
        }
        if (pivot != col) {
            swap_rows(work, pivot, col);
            swap_rows(ops, pivot, col);
        }
        const Symbol inv = field.inv(work(col, col));
        field.scale(work.row(col), inv);
        field.scale(ops.row(col), inv);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col) {
                continue;
            }
            const Symbol factor = work(i, col);
            if (!factor.is_zero()) {
                const Symbol f = field.neg(factor);
                field.axpy(work.row(i), f, work.row(col));
                field.axpy(ops.row(i), f, ops.row(col));
            }
        }
    }

    // Row i of ops*C: the first k rows are X, the rest must vanish.
    auto combine = [&](std::size_t i, std::span<Symbol> out) {
        for (std::size_t j = 0; j < n; ++j) {
            field.axpy(out, ops(i, j), c.row(j));
        }
    };

    SymbolMatrix x(k, c.cols());
    for (std::size_t i = 0; i < k; ++i) {
        combine(i, x.row(i));
    }
    std::vector<Symbol> residual(c.cols());
    for (std::size_t i = k; i < n; ++i) {
        std::fill(residual.begin(), residual.end(), Symbol(0));
        combine(i, residual);
        if (std::any_of(residual.begin(), residual.end(), [](Symbol s) { return !s.is_zero(); })) {
            throw Inconsistent(fmt::format("equation {} is inconsistent with the solved system", i));
        }
    }
    return x;
}

}  // namespace codedfl::gf
