#pragma once

// Vectorial Boolean functions GF(2^n) -> GF(2^n). The lookup table is the
// canonical form; univariate and ANF forms are views derived from it.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/linalg.hpp"

namespace apn {

struct Term {
    Element coeff = 0;
    std::uint32_t exponent = 0;
    friend bool operator==(const Term&, const Term&) = default;
};

/// Sum of c_i x^(e_i) with distinct, increasing exponents and nonzero coefficients.
class UnivariatePoly {
public:
    UnivariatePoly() = default;
    explicit UnivariatePoly(std::vector<Term> terms) {
        std::map<std::uint32_t, Element> merged;
        for (const auto& t : terms) merged[t.exponent] ^= t.coeff;
        for (const auto& [e, c] : merged)
            if (c != 0) terms_.push_back({c, e});
    }

    static UnivariatePoly monomial(Element coeff, std::uint32_t exponent) {
        return UnivariatePoly({Term{coeff, exponent}});
    }

    [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
    [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

    /// "a^7x^48 + x^9"-style rendering; coefficients as powers of a.
    [[nodiscard]] std::string to_string(const FieldSpec& F) const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& t : terms_) {
            if (!first) os << " + ";
            first = false;
            const std::uint32_t j = F.log(t.coeff);
            if (j != 0) {
                os << "a";
                if (j != 1) os << "^" << j;
                if (t.exponent != 0) os << "*";
            }
            if (t.exponent == 0) {
                if (j == 0) os << "1";
            } else {
                os << "x";
                if (t.exponent != 1) os << "^" << t.exponent;
            }
        }
        return os.str();
    }

    friend bool operator==(const UnivariatePoly&, const UnivariatePoly&) = default;

private:
    std::vector<Term> terms_;
};

class Vbf {
public:
    Vbf(FieldSpec spec, std::vector<Element> lut, std::optional<UnivariatePoly> provenance = std::nullopt)
        : spec_(std::move(spec)), lut_(std::move(lut)), provenance_(std::move(provenance)) {
        if (lut_.size() != spec_.size())
            throw Error(ErrorCode::InvalidArgument, "lookup table length must be 2^n");
        for (auto v : lut_)
            if (v >= spec_.size()) throw Error(ErrorCode::InvalidArgument, "lookup table entry out of range");
    }

    [[nodiscard]] const FieldSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] unsigned n() const noexcept { return spec_.n(); }
    [[nodiscard]] std::uint32_t size() const noexcept { return spec_.size(); }
    [[nodiscard]] const std::vector<Element>& lut() const noexcept { return lut_; }
    [[nodiscard]] Element operator()(Element x) const { return lut_[x]; }
    [[nodiscard]] const std::optional<UnivariatePoly>& provenance() const noexcept { return provenance_; }

    /// Same function with F(0) added to every value, so that F(0) = 0.
    [[nodiscard]] Vbf normalized() const {
        std::vector<Element> t(lut_);
        const Element c = lut_[0];
        for (auto& v : t) v ^= c;
        return Vbf(spec_, std::move(t));
    }

    friend bool operator==(const Vbf& a, const Vbf& b) { return a.spec_ == b.spec_ && a.lut_ == b.lut_; }

private:
    FieldSpec spec_;
    std::vector<Element> lut_;
    std::optional<UnivariatePoly> provenance_;
};

inline Vbf eval_univariate(const FieldSpec& F, const UnivariatePoly& poly) {
    std::vector<Element> lut(F.size(), 0);
    for (const auto& t : poly.terms()) {
        if (t.exponent > F.order())
            throw Error(ErrorCode::ExponentOutOfRange, "exponent " + std::to_string(t.exponent) + " exceeds 2^n - 1");
        lut[0] ^= t.exponent == 0 ? t.coeff : 0;
        // For x = a^k, x^e = a^(k*e): walk k while tracking k*e mod (2^n - 1).
        const std::uint32_t ord = F.order();
        const std::uint32_t step = t.exponent % ord;
        const std::uint32_t base = F.log(t.coeff);
        std::uint32_t k_e = 0;
        Element x = 1;
        for (std::uint32_t k = 0; k < ord; ++k) {
            lut[x] ^= F.exp(static_cast<long long>(base) + k_e);
            k_e += step;
            if (k_e >= ord) k_e -= ord;
            x = F.mul(x, FieldSpec::generator());
        }
    }
    return Vbf(F, std::move(lut), poly);
}

inline Vbf power_function(const FieldSpec& F, long long d) {
    if (d < 1 || d > static_cast<long long>(F.order()))
        throw Error(ErrorCode::ExponentOutOfRange, "power exponent " + std::to_string(d) + " outside [1, 2^n - 1]");
    return eval_univariate(F, UnivariatePoly::monomial(1, static_cast<std::uint32_t>(d)));
}

inline Vbf build_pointwise(const FieldSpec& F, const std::function<Element(Element)>& evaluator) {
    std::vector<Element> lut(F.size());
    for (Element x = 0; x < F.size(); ++x) lut[x] = evaluator(x);
    return Vbf(F, std::move(lut));
}

/// Output-bitsliced ANF: entry u holds the n output-coordinate coefficients of the monomial x^u.
struct AnfForm {
    unsigned n = 0;
    std::vector<std::uint32_t> coeffs;
};

/// Binary Möbius transform, applied to all output coordinates at once.
inline std::vector<std::uint32_t> moebius(std::vector<std::uint32_t> table) {
    const std::size_t size = table.size();
    for (std::size_t half = 1; half < size; half <<= 1)
        for (std::size_t x = 0; x < size; ++x)
            if (x & half) table[x] ^= table[x ^ half];
    return table;
}

inline AnfForm anf(const Vbf& F) { return {F.n(), moebius(F.lut())}; }

/// Maximum weight of a monomial with nonzero ANF coefficient; 0 for the zero function.
inline unsigned algebraic_degree(const Vbf& F) {
    const auto coeffs = moebius(F.lut());
    unsigned deg = 0;
    for (std::uint32_t u = 0; u < coeffs.size(); ++u)
        if (coeffs[u] != 0) deg = std::max(deg, static_cast<unsigned>(std::popcount(u)));
    return deg;
}

inline bool is_quadratic(const Vbf& F) { return algebraic_degree(F) == 2; }

inline Vbf add(const Vbf& F, const Vbf& G) {
    if (!(F.spec() == G.spec())) throw Error(ErrorCode::MismatchedDimension, "add over different fields");
    std::vector<Element> lut(F.size());
    for (Element x = 0; x < F.size(); ++x) lut[x] = F(x) ^ G(x);
    return Vbf(F.spec(), std::move(lut));
}

/// L1 ∘ F ∘ L2 + A, with L1 and L2 invertible affine maps and A any affine map.
inline Vbf apply_ea(const Vbf& F, const AffineMap& L1, const AffineMap& L2, const AffineMap& A) {
    const unsigned n = F.n();
    if (L1.linear.dim() != n || L2.linear.dim() != n || A.linear.dim() != n)
        throw Error(ErrorCode::MismatchedDimension, "affine map dimension differs from n");
    if (!L1.invertible()) throw Error(ErrorCode::SingularMap, "outer map L1 is not invertible");
    if (!L2.invertible()) throw Error(ErrorCode::SingularMap, "inner map L2 is not invertible");
    const auto t1 = L1.linear.table();
    const auto t2 = L2.linear.table();
    const auto ta = A.linear.table();
    std::vector<Element> lut(F.size());
    for (Element x = 0; x < F.size(); ++x)
        lut[x] = t1[F(t2[x] ^ L2.constant)] ^ L1.constant ^ ta[x] ^ A.constant;
    return Vbf(F.spec(), std::move(lut));
}

/// Matrix of x ↦ c·x.
inline BitMatrix multiplication_matrix(const FieldSpec& F, Element c) {
    return BitMatrix::from_map(F.n(), [&](std::uint32_t e) { return F.mul(c, e); });
}

/// Matrix of x ↦ x^(2^k).
inline BitMatrix frobenius_matrix(const FieldSpec& F, unsigned k) {
    return BitMatrix::from_map(F.n(), [&](std::uint32_t e) { return F.frobenius(e, k); });
}

// ---------------------------------------------------------------------------
// Function records: {n, modulus, lut, terms}
// ---------------------------------------------------------------------------

inline std::string lut_to_hex(const Vbf& F) {
    const unsigned width = (F.n() + 3) / 4;
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (auto v : F.lut()) os << std::setw(static_cast<int>(width)) << v;
    return os.str();
}

inline std::vector<Element> lut_from_hex(const FieldSpec& F, const std::string& hex) {
    const unsigned width = (F.n() + 3) / 4;
    if (hex.size() != static_cast<std::size_t>(width) * F.size())
        throw Error(ErrorCode::ParseError, "lut hex string has wrong length");
    std::vector<Element> lut(F.size());
    for (std::size_t i = 0; i < lut.size(); ++i) {
        const std::string chunk = hex.substr(i * width, width);
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(chunk, &used, 16);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != chunk.size()) throw Error(ErrorCode::ParseError, "bad lut hex digit in '" + chunk + "'");
        lut[i] = static_cast<Element>(v);
    }
    return lut;
}

inline std::string coeff_to_string(const FieldSpec& F, Element c) {
    return "a^" + std::to_string(F.log(c));
}

inline Element coeff_from_string(const FieldSpec& F, const std::string& s) {
    if (s.rfind("a^", 0) == 0) return F.exp(std::stoll(s.substr(2)));
    if (s == "a") return FieldSpec::generator();
    if (s == "1") return 1;
    return parse_modulus(s); // plain integer / hex encoding
}

inline nlohmann::json to_record(const Vbf& F) {
    nlohmann::json j;
    j["n"] = F.n();
    j["modulus"] = F.spec().modulus_hex();
    j["lut"] = lut_to_hex(F);
    if (F.provenance()) {
        auto terms = nlohmann::json::array();
        for (const auto& t : F.provenance()->terms()) terms.push_back({coeff_to_string(F.spec(), t.coeff), t.exponent});
        j["terms"] = std::move(terms);
    }
    return j;
}

inline Vbf from_record(const nlohmann::json& j) {
    try {
        const FieldSpec F = make_field(j.at("n").get<unsigned>(), parse_modulus(j.at("modulus").get<std::string>()));
        std::optional<UnivariatePoly> prov;
        if (j.contains("terms")) {
            std::vector<Term> terms;
            for (const auto& t : j.at("terms")) {
                const Element c = t.at(0).is_string() ? coeff_from_string(F, t.at(0).get<std::string>())
                                                      : t.at(0).get<Element>();
                terms.push_back({c, t.at(1).get<std::uint32_t>()});
            }
            prov = UnivariatePoly(std::move(terms));
        }
        if (j.contains("lut")) return Vbf(F, lut_from_hex(F, j.at("lut").get<std::string>()), prov);
        if (prov) return eval_univariate(F, *prov);
        throw Error(ErrorCode::ParseError, "function record has neither lut nor terms");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

} // namespace apn
