#pragma once

// Arithmetic in GF(2^n), 2 <= n <= 16, in the polynomial basis.
//
// An element is an integer in [0, 2^n) whose bit i is the coefficient of x^i.
// Every FieldSpec is built over a primitive modulus, so the class of x
// (encoding 2) generates the multiplicative group and is the element called
// `a` throughout the family formulas.

#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "apnatlas/error.hpp"

namespace apn {

using Element = std::uint32_t;

inline constexpr unsigned kMinDegree = 2;
inline constexpr unsigned kMaxDegree = 16;

namespace detail {

// Carry-less product of two GF(2)[x] polynomials of degree < 32.
inline constexpr std::uint64_t clmul(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t r = 0;
    while (b != 0) {
        if (b & 1U) r ^= a;
        b >>= 1;
        a <<= 1;
    }
    return r;
}

inline constexpr int poly_degree(std::uint64_t p) noexcept {
    return p == 0 ? -1 : 63 - std::countl_zero(p);
}

inline constexpr std::uint64_t poly_mod(std::uint64_t a, std::uint64_t m) noexcept {
    const int dm = poly_degree(m);
    for (int da = poly_degree(a); da >= dm; da = poly_degree(a)) a ^= m << (da - dm);
    return a;
}

inline constexpr std::uint64_t poly_gcd(std::uint64_t a, std::uint64_t b) noexcept {
    while (b != 0) {
        a = poly_mod(a, b);
        std::swap(a, b);
    }
    return a;
}

inline constexpr std::uint64_t poly_mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return poly_mod(clmul(a, b), m);
}

inline constexpr std::uint64_t poly_powmod(std::uint64_t a, std::uint64_t k, std::uint64_t m) noexcept {
    std::uint64_t r = 1;
    a = poly_mod(a, m);
    while (k != 0) {
        if (k & 1U) r = poly_mulmod(r, a, m);
        a = poly_mulmod(a, a, m);
        k >>= 1;
    }
    return r;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t v) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 2; p * p <= v; ++p) {
        if (v % p == 0) {
            out.push_back(p);
            while (v % p == 0) v /= p;
        }
    }
    if (v > 1) out.push_back(v);
    return out;
}

} // namespace detail

/// Irreducibility of a GF(2)[x] polynomial by the gcd-with-Frobenius test:
/// no factor of degree k <= deg/2, i.e. gcd(f, x^(2^k) - x) = 1 for all such k.
inline bool is_irreducible_gf2(std::uint64_t poly) {
    const int d = detail::poly_degree(poly);
    if (d <= 0) return false;
    std::uint64_t frob = 2; // x
    for (int k = 1; k <= d / 2; ++k) {
        frob = detail::poly_mulmod(frob, frob, poly);
        if (detail::poly_gcd(poly, frob ^ 2U) != 1) return false;
    }
    return true;
}

/// Multiplicative order of x modulo an irreducible polynomial.
inline std::uint64_t order_of_x(std::uint64_t poly) {
    const int d = detail::poly_degree(poly);
    std::uint64_t order = (std::uint64_t{1} << d) - 1;
    for (auto p : detail::prime_factors(order)) {
        while (order % p == 0 && detail::poly_powmod(2, order / p, poly) == 1) order /= p;
    }
    return order;
}

inline bool is_primitive_gf2(std::uint64_t poly) {
    const int d = detail::poly_degree(poly);
    return is_irreducible_gf2(poly) && order_of_x(poly) == (std::uint64_t{1} << d) - 1;
}

/// Lexicographically smallest primitive polynomial of each degree 2..16
/// (smallest bitmask value). Regenerated by tests/test_field.cpp.
inline constexpr std::array<std::uint32_t, kMaxDegree + 1> kDefaultModulus = {
    0, 0, 0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11d, 0x211, 0x409, 0x805,
    0x1053, 0x201b, 0x402b, 0x8003, 0x1002d,
};

class FieldSpec {
public:
    /// Validating constructor; see make_field.
    FieldSpec(unsigned n, std::uint32_t modulus) : n_(n), modulus_(modulus) {
        if (n < kMinDegree || n > kMaxDegree)
            throw Error(ErrorCode::InvalidArgument, "degree must lie in [2, 16], got " + std::to_string(n));
        if (detail::poly_degree(modulus) != static_cast<int>(n))
            throw Error(ErrorCode::RejectedModulus, "modulus degree differs from n");
        if (!is_irreducible_gf2(modulus)) throw Error(ErrorCode::RejectedModulus, "reducible");
        if (order_of_x(modulus) != (std::uint64_t{1} << n) - 1)
            throw Error(ErrorCode::RejectedModulus, "imprimitive");
        tables_ = build_tables(n, modulus);
    }

    [[nodiscard]] unsigned n() const noexcept { return n_; }
    [[nodiscard]] std::uint32_t modulus() const noexcept { return modulus_; }
    [[nodiscard]] std::uint32_t size() const noexcept { return std::uint32_t{1} << n_; }
    /// Order of the multiplicative group, 2^n - 1.
    [[nodiscard]] std::uint32_t order() const noexcept { return size() - 1; }
    [[nodiscard]] std::uint32_t mask() const noexcept { return size() - 1; }
    [[nodiscard]] bool contains(Element e) const noexcept { return e < size(); }

    /// The primitive element `a` (the class of x).
    [[nodiscard]] static constexpr Element generator() noexcept { return 2; }

    [[nodiscard]] Element add(Element a, Element b) const noexcept { return a ^ b; }

    [[nodiscard]] Element mul(Element a, Element b) const noexcept {
        if (a == 0 || b == 0) return 0;
        return tables_->exp[tables_->log[a] + tables_->log[b]];
    }

    [[nodiscard]] Element sqr(Element a) const noexcept { return mul(a, a); }

    /// a^k; exponents reduce modulo 2^n - 1 for nonzero bases, 0^0 = 1.
    [[nodiscard]] Element pow(Element a, long long k) const {
        if (a == 0) {
            if (k == 0) return 1;
            if (k < 0) throw Error(ErrorCode::DivisionByZero, "negative power of zero");
            return 0;
        }
        const long long ord = order();
        long long e = (static_cast<long long>(tables_->log[a]) * (((k % ord) + ord) % ord)) % ord;
        return tables_->exp[static_cast<std::size_t>(e)];
    }

    [[nodiscard]] Element inv(Element a) const {
        if (a == 0) throw Error(ErrorCode::DivisionByZero, "inverse of zero");
        return tables_->exp[(order() - tables_->log[a]) % order()];
    }

    [[nodiscard]] Element div(Element a, Element b) const { return mul(a, inv(b)); }

    /// a^j for the primitive element a.
    [[nodiscard]] Element exp(long long j) const noexcept {
        const long long ord = order();
        return tables_->exp[static_cast<std::size_t>(((j % ord) + ord) % ord)];
    }

    /// Discrete logarithm to base a; e must be nonzero.
    [[nodiscard]] std::uint32_t log(Element e) const {
        if (e == 0) throw Error(ErrorCode::ZeroElement, "logarithm of zero");
        return tables_->log[e];
    }

    /// e^(2^j), the j-th Frobenius image.
    [[nodiscard]] Element frobenius(Element e, unsigned j) const noexcept {
        for (unsigned i = 0; i < j % n_; ++i) e = sqr(e);
        return e;
    }

    /// Relative trace tr_m^n(e) = e + e^(2^m) + ... + e^(2^(n-m)); m must divide n.
    [[nodiscard]] Element trace(unsigned m, Element e) const {
        if (m == 0 || n_ % m != 0)
            throw Error(ErrorCode::InvalidSubfield, std::to_string(m) + " does not divide " + std::to_string(n_));
        Element acc = 0;
        Element conj = e;
        for (unsigned j = 0; j < n_ / m; ++j) {
            acc ^= conj;
            conj = frobenius(conj, m);
        }
        return acc;
    }

    /// Absolute trace as a bit, tr_1^n(e).
    [[nodiscard]] unsigned trace_bit(Element e) const noexcept { return tables_->trace_bit[e]; }

    /// True iff e lies in the subfield GF(2^m), i.e. e^(2^m) = e.
    [[nodiscard]] bool in_subfield(unsigned m, Element e) const { return frobenius(e, m) == e; }

    [[nodiscard]] bool is_cube(Element e) const {
        if (e == 0) throw Error(ErrorCode::ZeroElement, "is_cube of zero");
        if (order() % 3 != 0) return true;
        return pow(e, order() / 3) == 1;
    }

    [[nodiscard]] std::uint32_t multiplicative_order(Element e) const {
        if (e == 0) throw Error(ErrorCode::ZeroElement, "order of zero");
        return order() / std::gcd(order(), log(e));
    }

    [[nodiscard]] bool is_primitive(Element e) const { return multiplicative_order(e) == order(); }

    /// Encoding of the element orthogonal-dual map: dual(u) is the v with
    /// tr(u*h) = popcount(v & h) mod 2 for all h.
    [[nodiscard]] Element trace_dual(Element u) const noexcept { return tables_->trace_dual[u]; }
    [[nodiscard]] Element trace_dual_inverse(Element v) const noexcept { return tables_->trace_dual_inv[v]; }

    [[nodiscard]] std::string modulus_hex() const {
        std::ostringstream os;
        os << "0x" << std::hex << modulus_;
        return os.str();
    }

    friend bool operator==(const FieldSpec& a, const FieldSpec& b) noexcept {
        return a.n_ == b.n_ && a.modulus_ == b.modulus_;
    }

private:
    struct Tables {
        std::vector<Element> exp;        // length 2 * (2^n - 1), a^i
        std::vector<std::uint32_t> log;  // log[0] unused
        std::vector<std::uint8_t> trace_bit;
        std::vector<Element> trace_dual;
        std::vector<Element> trace_dual_inv;
    };

    static std::shared_ptr<const Tables> build_tables(unsigned n, std::uint32_t modulus) {
        auto t = std::make_shared<Tables>();
        const std::uint32_t size = std::uint32_t{1} << n;
        const std::uint32_t ord = size - 1;
        t->exp.resize(2 * static_cast<std::size_t>(ord));
        t->log.assign(size, 0);
        Element v = 1;
        for (std::uint32_t i = 0; i < ord; ++i) {
            t->exp[i] = v;
            t->exp[i + ord] = v;
            t->log[v] = i;
            v <<= 1;
            if (v & size) v ^= modulus;
        }
        auto mul = [&](Element a, Element b) -> Element {
            if (a == 0 || b == 0) return 0;
            return t->exp[t->log[a] + t->log[b]];
        };
        // Absolute trace is GF(2)-linear: tabulate on the basis, extend by XOR.
        std::vector<std::uint8_t> basis_trace(n);
        for (unsigned i = 0; i < n; ++i) {
            Element e = Element{1} << i;
            Element acc = 0;
            for (unsigned j = 0; j < n; ++j) {
                acc ^= e;
                e = mul(e, e);
            }
            basis_trace[i] = static_cast<std::uint8_t>(acc & 1U);
        }
        t->trace_bit.assign(size, 0);
        for (Element e = 1; e < size; ++e) {
            const unsigned low = static_cast<unsigned>(std::countr_zero(e));
            t->trace_bit[e] = t->trace_bit[e & (e - 1)] ^ basis_trace[low];
        }
        t->trace_dual.assign(size, 0);
        t->trace_dual_inv.assign(size, 0);
        for (Element u = 0; u < size; ++u) {
            Element v = 0;
            for (unsigned i = 0; i < n; ++i) v |= static_cast<Element>(t->trace_bit[mul(u, Element{1} << i)]) << i;
            t->trace_dual[u] = v;
            t->trace_dual_inv[v] = u;
        }
        return t;
    }

    unsigned n_;
    std::uint32_t modulus_;
    std::shared_ptr<const Tables> tables_;
};

/// Builds a validated field; the default modulus is kDefaultModulus[n].
inline FieldSpec make_field(unsigned n, std::optional<std::uint32_t> modulus = std::nullopt) {
    if (n < kMinDegree || n > kMaxDegree)
        throw Error(ErrorCode::InvalidArgument, "degree must lie in [2, 16], got " + std::to_string(n));
    return FieldSpec(n, modulus.value_or(kDefaultModulus[n]));
}

/// Parses "0x43" or "67" into a modulus bitmask.
inline std::uint32_t parse_modulus(const std::string& text) {
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(text, &used, 0);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad modulus '" + text + "'");
    }
}

/// All primitive polynomials of degree n in increasing bitmask order.
inline std::vector<std::uint32_t> primitive_polynomials(unsigned n) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t m = (std::uint32_t{1} << n) | 1U; m < (std::uint32_t{1} << (n + 1)); m += 2)
        if (is_primitive_gf2(m)) out.push_back(m);
    return out;
}

/// GF(2)-linear field isomorphism from `from` onto `to`, as a lookup table of
/// length 2^n: the class of x in `from` maps to the smallest root of
/// from.modulus() in `to`.
inline std::vector<Element> field_isomorphism(const FieldSpec& from, const FieldSpec& to) {
    if (from.n() != to.n()) throw Error(ErrorCode::MismatchedDimension, "isomorphism between different degrees");
    const unsigned n = from.n();
    Element root = 0;
    for (Element r = 1; r < to.size(); ++r) {
        Element acc = 0;
        for (unsigned i = 0; i <= n; ++i)
            if ((from.modulus() >> i) & 1U) acc ^= to.pow(r, i);
        if (acc == 0) {
            root = r;
            break;
        }
    }
    std::vector<Element> basis_image(n);
    for (unsigned i = 0; i < n; ++i) basis_image[i] = to.pow(root, i);
    std::vector<Element> map(from.size(), 0);
    for (Element e = 1; e < from.size(); ++e) {
        const unsigned low = static_cast<unsigned>(std::countr_zero(e));
        map[e] = map[e & (e - 1)] ^ basis_image[low];
    }
    return map;
}

// ---------------------------------------------------------------------------
// Polynomials over GF(2^n) (coefficient i multiplies X^i) and the
// irreducibility test used by family conditions.
// ---------------------------------------------------------------------------

using ExtPoly = std::vector<Element>;

namespace detail {

inline void ext_trim(ExtPoly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

inline ExtPoly ext_mod(const FieldSpec& F, ExtPoly a, const ExtPoly& m) {
    ext_trim(a);
    const std::size_t dm = m.size() - 1;
    const Element lead_inv = F.inv(m.back());
    while (a.size() > dm) {
        const Element factor = F.mul(a.back(), lead_inv);
        const std::size_t shift = a.size() - 1 - dm;
        for (std::size_t i = 0; i <= dm; ++i) a[shift + i] ^= F.mul(factor, m[i]);
        ext_trim(a);
    }
    return a;
}

inline ExtPoly ext_mulmod(const FieldSpec& F, const ExtPoly& a, const ExtPoly& b, const ExtPoly& m) {
    if (a.empty() || b.empty()) return {};
    ExtPoly r(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] ^= F.mul(a[i], b[j]);
    }
    return ext_mod(F, std::move(r), m);
}

inline ExtPoly ext_gcd(const FieldSpec& F, ExtPoly a, ExtPoly b) {
    ext_trim(a);
    ext_trim(b);
    while (!b.empty()) {
        a = ext_mod(F, std::move(a), b);
        std::swap(a, b);
    }
    return a;
}

inline ExtPoly ext_derivative(const ExtPoly& p) {
    ExtPoly d;
    for (std::size_t i = 1; i < p.size(); ++i) d.push_back((i & 1U) ? p[i] : 0);
    ext_trim(d);
    return d;
}

} // namespace detail

/// Irreducibility of f over GF(2^n): squarefree and gcd(f, X^(Q^k) - X) = 1
/// for k = 1..deg/2, Q = 2^n.
inline bool irreducible_over_extension(const FieldSpec& F, ExtPoly f) {
    detail::ext_trim(f);
    if (f.empty()) throw Error(ErrorCode::ZeroPolynomial, "irreducibility of the zero polynomial");
    const std::size_t deg = f.size() - 1;
    if (deg == 0) throw Error(ErrorCode::InvalidArgument, "constant polynomial");
    if (deg == 1) return true;
    const ExtPoly df = detail::ext_derivative(f);
    if (df.empty() || detail::ext_gcd(F, f, df).size() > 1) return false;
    ExtPoly frob = detail::ext_mod(F, ExtPoly{0, 1}, f); // X
    for (std::size_t k = 1; k <= deg / 2; ++k) {
        for (unsigned s = 0; s < F.n(); ++s) frob = detail::ext_mulmod(F, frob, frob, f);
        ExtPoly diff = frob;
        if (diff.size() < 2) diff.resize(2, 0);
        diff[1] ^= 1;
        detail::ext_trim(diff);
        if (diff.empty()) return false; // f divides X^(Q^k) - X
        if (detail::ext_gcd(F, f, diff).size() > 1) return false;
    }
    return true;
}

} // namespace apn
