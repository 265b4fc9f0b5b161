#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace codedfl::gf {

/// Element of a finite field, stored as its integer representative.
/// For GF(2^w) the bits are polynomial coefficients; for GF(p) the residue.
class Symbol {
public:
    constexpr Symbol() = default;
    constexpr explicit Symbol(std::uint32_t value) : value_(value) {}

    constexpr std::uint32_t value() const { return value_; }
    constexpr bool is_zero() const { return value_ == 0; }

    friend constexpr auto operator<=>(Symbol, Symbol) = default;

private:
    std::uint32_t value_ = 0;
};

class FieldError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by solve() when the coefficient matrix has fewer than k
/// independent rows: the round cannot be decoded.
class RankDeficient : public std::runtime_error {
public:
    RankDeficient(std::size_t rank, std::size_t unknowns);
    std::size_t rank() const { return rank_; }
    std::size_t unknowns() const { return unknowns_; }

private:
    std::size_t rank_;
    std::size_t unknowns_;
};

/// Thrown by solve() when the right-hand side is not in the column space.
/// Codewords are generated from true messages, so this indicates a bug.
class Inconsistent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FieldSpec {
    enum class Kind { binary_extension, prime };

    Kind kind = Kind::binary_extension;
    unsigned width = 8;              ///< w for GF(2^w), 1..16
    std::uint32_t polynomial = 0x11D;  ///< reduction polynomial incl. x^w term
    std::uint32_t modulus = 0;       ///< p for GF(p)

    static FieldSpec binary(unsigned width, std::uint32_t polynomial) {
        return FieldSpec{Kind::binary_extension, width, polynomial, 0};
    }
    static FieldSpec prime(std::uint32_t modulus) {
        return FieldSpec{Kind::prime, 0, 0, modulus};
    }

    /// Default reduction polynomial for GF(2^width); throws for unsupported widths.
    static std::uint32_t default_polynomial(unsigned width);

    std::string describe() const;
};

/**
 * Finite field GF(2^w) (w <= 16) or GF(p) (p < 2^31).
 *
 * Construction validates the field: the reduction polynomial must be
 * irreducible of degree w (checked by exhaustive trial division) and the
 * modulus must be prime. Binary fields use log/antilog tables over a
 * primitive element found at construction. Immutable afterwards.
 */
class GaloisField {
public:
    explicit GaloisField(const FieldSpec& spec);

    static GaloisField binary(unsigned width, std::uint32_t polynomial) {
        return GaloisField(FieldSpec::binary(width, polynomial));
    }
    static GaloisField prime(std::uint32_t modulus) {
        return GaloisField(FieldSpec::prime(modulus));
    }
    /// GF(2^8) with x^8 + x^4 + x^3 + x^2 + 1.
    static GaloisField default_field() { return binary(8, 0x11D); }

    const FieldSpec& spec() const { return spec_; }
    std::uint64_t order() const { return order_; }
    bool is_binary() const { return spec_.kind == FieldSpec::Kind::binary_extension; }

    /// Validated symbol constructor.
    Symbol symbol(std::uint64_t value) const;
    bool contains(Symbol a) const { return a.value() < order_; }

    Symbol zero() const { return Symbol(0); }
    Symbol one() const { return Symbol(1); }

    Symbol add(Symbol a, Symbol b) const;
    Symbol sub(Symbol a, Symbol b) const;
    Symbol neg(Symbol a) const;
    Symbol mul(Symbol a, Symbol b) const;
    Symbol inv(Symbol a) const;  ///< throws FieldError for zero
    Symbol div(Symbol a, Symbol b) const { return mul(a, inv(b)); }
    Symbol pow(Symbol a, std::uint64_t exponent) const;

    /// y <- y + a * x, elementwise.
    void axpy(std::span<Symbol> y, Symbol a, std::span<const Symbol> x) const;
    /// x <- a * x, elementwise.
    void scale(std::span<Symbol> x, Symbol a) const;

private:
    FieldSpec spec_;
    std::uint64_t order_ = 0;
    // Binary fields only: exp_ has 2*(order-1) entries so log sums need no reduction.
    std::vector<std::uint32_t> exp_;
    std::vector<std::uint32_t> log_;
};

/// Product of two polynomials over GF(2), reduced modulo `polynomial` of degree `width`.
std::uint32_t carryless_mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t polynomial,
                               unsigned width);

/// True when `polynomial` has degree exactly `width` and no nontrivial factor.
bool is_irreducible(std::uint32_t polynomial, unsigned width);

bool is_prime(std::uint64_t n);

/// Dense row-major matrix of field symbols.
class SymbolMatrix {
public:
    SymbolMatrix() = default;
    SymbolMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    SymbolMatrix(std::size_t rows, std::size_t cols, std::vector<Symbol> entries);

    static SymbolMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    Symbol& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    Symbol operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<Symbol> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const Symbol> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const Symbol> entries() const { return data_; }

    bool row_is_zero(std::size_t r) const;
    bool col_is_zero(std::size_t c) const;

    SymbolMatrix transpose() const;
    SymbolMatrix select(std::span<const std::size_t> row_ids, std::span<const std::size_t> col_ids) const;
    SymbolMatrix select_cols(std::span<const std::size_t> col_ids) const;

    friend bool operator==(const SymbolMatrix&, const SymbolMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Symbol> data_;
};

SymbolMatrix multiply(const GaloisField& field, const SymbolMatrix& a, const SymbolMatrix& b);

std::size_t rank(const GaloisField& field, SymbolMatrix a);

/**
 * Solves A X = C for X, where A is n x k with n >= k and C is n x d.
 *
 * Gaussian elimination with partial pivoting (first nonzero entry in the
 * pivot column). Throws RankDeficient when rank(A) < k and Inconsistent
 * when C is not in the column space of A.
 */
SymbolMatrix solve(const GaloisField& field, const SymbolMatrix& a, const SymbolMatrix& c);

}  // namespace codedfl::gf
