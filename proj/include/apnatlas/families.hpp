#pragma once

// Generators and condition predicates for the known infinite APN families:
// six power families and the quadratic polynomial families N°1-2 … N°11.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "apnatlas/analysis.hpp"
#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/hash.hpp"
#include "apnatlas/parallel.hpp"
#include "apnatlas/vbf.hpp"

namespace apn {

enum class FamilyId { Gold, Kasami, Welch, Niho, Inverse, Dobbertin, F1_2, F3, F4, F5, F6, F7, F8_10, F11 };

inline constexpr std::array<FamilyId, 14> kAllFamilies = {
    FamilyId::Gold, FamilyId::Kasami, FamilyId::Welch, FamilyId::Niho, FamilyId::Inverse,
    FamilyId::Dobbertin, FamilyId::F1_2, FamilyId::F3, FamilyId::F4, FamilyId::F5,
    FamilyId::F6, FamilyId::F7, FamilyId::F8_10, FamilyId::F11,
};

/// CLI-facing name.
inline constexpr std::string_view family_name(FamilyId f) noexcept {
    switch (f) {
    case FamilyId::Gold: return "gold";
    case FamilyId::Kasami: return "kasami";
    case FamilyId::Welch: return "welch";
    case FamilyId::Niho: return "niho";
    case FamilyId::Inverse: return "inverse";
    case FamilyId::Dobbertin: return "dobbertin";
    case FamilyId::F1_2: return "f1-2";
    case FamilyId::F3: return "f3";
    case FamilyId::F4: return "f4";
    case FamilyId::F5: return "f5";
    case FamilyId::F6: return "f6";
    case FamilyId::F7: return "f7";
    case FamilyId::F8_10: return "f8-10";
    case FamilyId::F11: return "f11";
    }
    return "?";
}

/// Label used in rendered tables ("Gold", "N°3", ...).
inline std::string family_label(FamilyId f) {
    switch (f) {
    case FamilyId::Gold: return "Gold";
    case FamilyId::Kasami: return "Kasami";
    case FamilyId::Welch: return "Welch";
    case FamilyId::Niho: return "Niho";
    case FamilyId::Inverse: return "Inverse";
    case FamilyId::Dobbertin: return "Dobbertin";
    case FamilyId::F1_2: return "N°1-2";
    case FamilyId::F3: return "N°3";
    case FamilyId::F4: return "N°4";
    case FamilyId::F5: return "N°5";
    case FamilyId::F6: return "N°6";
    case FamilyId::F7: return "N°7";
    case FamilyId::F8_10: return "N°8-10";
    case FamilyId::F11: return "N°11";
    }
    return "?";
}

inline FamilyId parse_family(std::string_view name) {
    for (auto f : kAllFamilies)
        if (family_name(f) == name) return f;
    throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(name) + "'");
}

inline constexpr bool is_power_family(FamilyId f) noexcept {
    return f == FamilyId::Gold || f == FamilyId::Kasami || f == FamilyId::Welch || f == FamilyId::Niho ||
           f == FamilyId::Inverse || f == FamilyId::Dobbertin;
}

/// Named parameter; `element` marks field-valued parameters (value = encoding).
struct Param {
    std::string name;
    long long value = 0;
    bool element = false;
    friend bool operator==(const Param&, const Param&) = default;
};

using ParamList = std::vector<Param>;

inline std::optional<long long> param_value(const ParamList& params, std::string_view name) {
    for (const auto& p : params)
        if (p.name == name) return p.value;
    return std::nullopt;
}

/// One top-level term of an instance's defining formula: the x-exponent it
/// carries (inside the trace for trace terms) and the coefficient as a power of a.
struct SymTerm {
    std::uint32_t exponent = 0;
    std::uint32_t coeff_log = 0;
    friend auto operator<=>(const SymTerm&, const SymTerm&) = default;
};

struct FamilyInstance {
    FamilyId family;
    unsigned n = 0;
    ParamList params;
    Vbf function;
    std::vector<SymTerm> form;
    std::string formula;
};

struct ConditionCheck {
    bool ok = true;
    std::string reason; // first violated condition
    explicit operator bool() const noexcept { return ok; }
};

namespace detail {

inline ConditionCheck fail(std::string reason) { return {false, std::move(reason)}; }

inline long long igcd(long long a, long long b) { return std::gcd(a, b); }

/// 2^j reduced modulo 2^n - 1 (j taken mod n, negative allowed).
inline std::uint32_t pow2_mod(unsigned n, long long j) {
    const long long r = ((j % n) + n) % n;
    return std::uint32_t{1} << r;
}

inline std::uint32_t reduce_exponent(unsigned n, unsigned long long e) {
    const unsigned long long ord = (1ULL << n) - 1;
    if (e == 0) return 0;
    const unsigned long long r = e % ord;
    return static_cast<std::uint32_t>(r == 0 ? ord : r);
}

inline std::string coeff_prefix(const FieldSpec& F, Element c) {
    const std::uint32_t j = F.log(c);
    if (j == 0) return "";
    if (j == 1) return "a*";
    return "a^" + std::to_string(j) + "*";
}

inline std::string monomial_string(const FieldSpec& F, Element c, std::uint32_t e) {
    return coeff_prefix(F, c) + (e == 1 ? std::string("x") : "x^" + std::to_string(e));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Power families
// ---------------------------------------------------------------------------

/// Exponent d of a power family at n; parameters i (Gold, Kasami, Dobbertin) or
/// t (Welch, Niho, Inverse, with n = 2t + 1). The exponent is reduced into [1, 2^n - 1].
inline std::uint32_t power_exponent(FamilyId family, unsigned n, const ParamList& params) {
    auto need = [&](std::string_view name) {
        auto v = param_value(params, name);
        if (!v) throw Error(ErrorCode::ConditionViolated, "missing parameter " + std::string(name));
        return *v;
    };
    auto t_of_n = [&]() -> long long {
        if (n % 2 == 0) throw Error(ErrorCode::ConditionViolated, "n = 2t+1 requires n odd");
        const long long t = param_value(params, "t").value_or((n - 1) / 2);
        if (2 * t + 1 != static_cast<long long>(n)) throw Error(ErrorCode::ConditionViolated, "n = 2t+1");
        return t;
    };
    const unsigned long long one = 1;
    switch (family) {
    case FamilyId::Gold: {
        const long long i = need("i");
        if (i < 1 || detail::igcd(i, n) != 1) throw Error(ErrorCode::ConditionViolated, "gcd(i,n)=1");
        return detail::reduce_exponent(n, (one << (i % n)) + 1);
    }
    case FamilyId::Kasami: {
        const long long i = need("i");
        if (i < 1 || detail::igcd(i, n) != 1) throw Error(ErrorCode::ConditionViolated, "gcd(i,n)=1");
        const unsigned long long ord = (one << n) - 1;
        const unsigned long long d = (detail::pow2_mod(n, 2 * i) + ord - detail::pow2_mod(n, i) + 1) % ord;
        return detail::reduce_exponent(n, d);
    }
    case FamilyId::Welch: {
        const long long t = t_of_n();
        return detail::reduce_exponent(n, (one << t) + 3);
    }
    case FamilyId::Niho: {
        const long long t = t_of_n();
        if (t % 2 == 0) return detail::reduce_exponent(n, (one << t) + (one << (t / 2)) - 1);
        return detail::reduce_exponent(n, (one << t) + (one << ((3 * t + 1) / 2)) - 1);
    }
    case FamilyId::Inverse: {
        const long long t = t_of_n();
        return detail::reduce_exponent(n, (one << (2 * t)) - 1);
    }
    case FamilyId::Dobbertin: {
        if (n % 5 != 0) throw Error(ErrorCode::ConditionViolated, "n = 5i");
        const long long i = param_value(params, "i").value_or(n / 5);
        if (5 * i != static_cast<long long>(n)) throw Error(ErrorCode::ConditionViolated, "n = 5i");
        return detail::reduce_exponent(n, (one << (4 * i)) + (one << (3 * i)) + (one << (2 * i)) + (one << i) - 1);
    }
    default:
        throw Error(ErrorCode::InvalidArgument, std::string(family_name(family)) + " is not a power family");
    }
}

// ---------------------------------------------------------------------------
// Condition predicates
// ---------------------------------------------------------------------------

/// Whether the family has any parameters at degree n (false means an empty
/// enumeration, not an error).
inline bool family_applicable(FamilyId f, unsigned n) {
    switch (f) {
    case FamilyId::Gold:
    case FamilyId::Kasami:
    case FamilyId::F5: return n >= 2;
    case FamilyId::Welch:
    case FamilyId::Niho:
    case FamilyId::Inverse: return n % 2 == 1 && n >= 3;
    case FamilyId::Dobbertin: return n % 5 == 0;
    case FamilyId::F1_2: return n >= 12 && (n % 3 == 0 || n % 4 == 0);
    case FamilyId::F3:
    case FamilyId::F4: return n % 2 == 0 && n >= 4;
    case FamilyId::F6:
    case FamilyId::F7: return n % 3 == 0;
    case FamilyId::F8_10: return n % 3 == 0 && std::gcd(n / 3, 3U) == 1;
    case FamilyId::F11: return n % 2 == 0 && (n / 2) % 2 == 1 && n >= 6;
    }
    return false;
}

inline ConditionCheck validate_conditions(FamilyId family, const FieldSpec& F, const ParamList& params) {
    using detail::fail;
    const unsigned n = F.n();
    auto get = [&](std::string_view name) -> std::optional<long long> { return param_value(params, name); };
    auto elem = [&](std::string_view name) -> std::optional<Element> {
        auto v = get(name);
        if (!v || *v < 0 || *v >= static_cast<long long>(F.size())) return std::nullopt;
        return static_cast<Element>(*v);
    };
    try {
        switch (family) {
        case FamilyId::Gold:
        case FamilyId::Kasami:
        case FamilyId::Welch:
        case FamilyId::Niho:
        case FamilyId::Inverse:
        case FamilyId::Dobbertin:
            (void)power_exponent(family, n, params);
            return {};
        case FamilyId::F1_2: {
            auto p = get("p"), k = get("k"), s = get("s");
            auto alpha = elem("alpha");
            if (!p || !k || !s || !alpha) return fail("parameters p, k, s, alpha required");
            if (*p != 3 && *p != 4) return fail("p in {3,4}");
            if (*p * *k != static_cast<long long>(n)) return fail("n=pk");
            if (std::gcd(*k, *p) != 1) return fail("gcd(k,p)=1");
            if (*s < 1 || std::gcd(*s, static_cast<long long>(n)) != 1) return fail("gcd(s,pk)=1");
            if (n < 12) return fail("n>=12");
            if (*alpha == 0 || !F.is_primitive(*alpha)) return fail("alpha primitive");
            return {};
        }
        case FamilyId::F3: {
            if (n % 2 != 0) return fail("n=2m");
            const unsigned m = n / 2;
            const Element q = Element{1} << m;
            auto i = get("i");
            auto b = elem("b"), c = elem("c");
            if (!i || !b || !c) return fail("parameters i, b, c required");
            if (*i < 1 || std::gcd(*i, static_cast<long long>(m)) != 1) return fail("gcd(i,m)=1");
            if (std::gcd((1LL << (*i % 62)) + 1, static_cast<long long>(q) + 1) == 1) return fail("gcd(2^i+1,q+1)!=1");
            if (F.mul(*c, F.pow(*b, q)) == *b) return fail("cb^q+b!=0");
            if (*c == 0 || F.pow(*c, q + 1) != 1) return fail("c^(q+1)=1");
            const long long g = std::gcd(((1LL << *i) + 1) * (static_cast<long long>(q) - 1) % F.order(),
                                         static_cast<long long>(F.order()));
            if (F.log(*c) % g == 0) return fail("c not in {lambda^((2^i+1)(q-1))}");
            return {};
        }
        case FamilyId::F4: {
            if (n % 2 != 0) return fail("n=2m");
            const unsigned m = n / 2;
            const Element q = Element{1} << m;
            auto i = get("i");
            auto c = elem("c"), s = elem("s");
            if (!i || !c || !s) return fail("parameters i, c, s required");
            if (*i < 1 || std::gcd(*i, static_cast<long long>(m)) != 1) return fail("gcd(i,m)=1");
            if (F.in_subfield(m, *s)) return fail("s not in GF(q)");
            ExtPoly poly((std::size_t{1} << *i) + 2, 0);
            poly[0] = 1;
            poly[1] = F.pow(*c, q);
            poly[std::size_t{1} << *i] = *c;
            poly[(std::size_t{1} << *i) + 1] = 1;
            if (!irreducible_over_extension(F, poly)) return fail("X^(2^i+1)+cX^(2^i)+c^qX+1 irreducible");
            return {};
        }
        case FamilyId::F5:
        case FamilyId::F6:
        case FamilyId::F7: {
            if (family != FamilyId::F5 && n % 3 != 0) return fail("3|n");
            auto a = elem("a");
            if (!a || *a == 0) return fail("a!=0");
            return {};
        }
        case FamilyId::F8_10: {
            if (n % 3 != 0) return fail("n=3k");
            const long long k = n / 3;
            auto s = get("s");
            auto u = elem("u"), v = elem("v"), w = elem("w");
            if (!s || !u || !v || !w) return fail("parameters s, u, v, w required");
            if (std::gcd(k, 3LL) != 1) return fail("gcd(k,3)=1");
            if (*s < 1 || std::gcd(*s, static_cast<long long>(n)) != 1) return fail("gcd(s,3k)=1");
            if ((k + *s) % 3 != 0) return fail("3|(k+s)");
            if (!F.in_subfield(static_cast<unsigned>(k), *v) || !F.in_subfield(static_cast<unsigned>(k), *w))
                return fail("v,w in GF(2^k)");
            if (F.mul(*v, *w) == 1) return fail("vw!=1");
            if (*u == 0 || !F.is_primitive(*u)) return fail("u primitive");
            return {};
        }
        case FamilyId::F11: {
            if (n % 2 != 0) return fail("n=2k");
            const long long k = n / 2;
            auto s = get("s");
            auto alpha = elem("alpha"), beta = elem("beta");
            if (!s || !alpha || !beta) return fail("parameters s, alpha, beta required");
            if (k % 2 == 0) return fail("k odd");
            if (*s < 1 || *s % 2 == 0) return fail("s odd");
            if (std::gcd(*s, k) != 1) return fail("gcd(s,k)=1");
            if (F.in_subfield(static_cast<unsigned>(k), *beta)) return fail("beta not in GF(2^k)");
            for (long long i = 1; i < k; ++i) {
                auto g = elem("gamma_" + std::to_string(i));
                if (!g) return fail("parameter gamma_" + std::to_string(i) + " required");
                if (!F.in_subfield(static_cast<unsigned>(k), *g)) return fail("gamma_i in GF(2^k)");
            }
            if (*alpha == 0 || F.is_cube(*alpha)) return fail("alpha not a cube");
            return {};
        }
        }
    } catch (const Error& e) {
        return fail(e.what());
    }
    return fail("unknown family");
}

// ---------------------------------------------------------------------------
// Instance construction
// ---------------------------------------------------------------------------

struct BuiltForm {
    std::vector<SymTerm> form;
    std::string formula;
    std::vector<Element> lut;
    std::optional<UnivariatePoly> poly;
};

namespace detail {

inline BuiltForm from_poly(const FieldSpec& F, std::vector<Term> terms) {
    BuiltForm out;
    std::vector<Term> kept;
    for (const auto& t : terms)
        if (t.coeff != 0) kept.push_back(t);
    std::sort(kept.begin(), kept.end(), [](const Term& x, const Term& y) { return x.exponent < y.exponent; });
    UnivariatePoly poly(kept);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.form.push_back({kept[i].exponent, F.log(kept[i].coeff)});
        if (i) out.formula += " + ";
        out.formula += monomial_string(F, kept[i].coeff, kept[i].exponent);
    }
    out.lut = eval_univariate(F, poly).lut();
    out.poly = std::move(poly);
    return out;
}

// x^3 + a^-1 tr_m^n(sum_j a^(c_j) x^(e_j)) with a = a^j.
inline BuiltForm trace_family(const FieldSpec& F, Element a, unsigned m,
                              const std::vector<std::pair<unsigned, unsigned>>& inner) {
    BuiltForm out;
    const Element a_inv = F.inv(a);
    const std::uint32_t j = F.log(a);
    std::vector<Element> inner_coeff;
    for (const auto& [cm, e] : inner) inner_coeff.push_back(F.pow(a, cm));
    out.lut.resize(F.size());
    for (Element x = 0; x < F.size(); ++x) {
        Element arg = 0;
        for (std::size_t t = 0; t < inner.size(); ++t) arg ^= F.mul(inner_coeff[t], F.pow(x, inner[t].second));
        out.lut[x] = F.pow(x, 3) ^ F.mul(a_inv, F.trace(m, arg));
    }
    out.form.push_back({3, 0});
    for (const auto& [cm, e] : inner) out.form.push_back({e, j});
    std::sort(out.form.begin(), out.form.end());
    auto pw = [&](long long k) -> std::string {
        const long long r = ((k % static_cast<long long>(F.order())) + F.order()) % F.order();
        if (j == 0 || r == 0) return "";
        return "a^" + std::to_string(k) + "*";
    };
    std::string inside;
    for (std::size_t t = 0; t < inner.size(); ++t) {
        if (t) inside += " + ";
        inside += pw(static_cast<long long>(inner[t].first) * j) + "x^" + std::to_string(inner[t].second);
    }
    out.formula = "x^3 + " + pw(-static_cast<long long>(j)) + "tr(" + std::to_string(m) + "; " + inside + ")";
    return out;
}

} // namespace detail

/// Builds the function of an instance (no condition or APN checks).
inline BuiltForm build_form(FamilyId family, const FieldSpec& F, const ParamList& params) {
    const unsigned n = F.n();
    auto get = [&](std::string_view name) -> long long {
        auto v = param_value(params, name);
        if (!v) throw Error(ErrorCode::ConditionViolated, "missing parameter " + std::string(name));
        return *v;
    };
    auto el = [&](std::string_view name) { return static_cast<Element>(get(name)); };
    using detail::pow2_mod;
    using detail::reduce_exponent;
    if (is_power_family(family)) {
        const std::uint32_t d = power_exponent(family, n, params);
        return detail::from_poly(F, {{1, d}});
    }
    switch (family) {
    case FamilyId::F1_2: {
        const long long p = get("p"), k = get("k"), s = get("s");
        const Element alpha = el("alpha");
        const long long i = (s * k) % p;
        const long long m = p - i;
        return detail::from_poly(
            F, {{1, reduce_exponent(n, pow2_mod(n, s) + 1)},
                {F.pow(alpha, (1LL << k) - 1), reduce_exponent(n, pow2_mod(n, i * k) + pow2_mod(n, m * k + s))}});
    }
    case FamilyId::F3: {
        const unsigned m = n / 2;
        const unsigned long long q = 1ULL << m;
        const long long i = get("i");
        const unsigned long long e1 = pow2_mod(n, 2 * i) + pow2_mod(n, i);
        return detail::from_poly(F, {{1, reduce_exponent(n, e1)},
                                     {el("b"), reduce_exponent(n, q + 1)},
                                     {el("c"), reduce_exponent(n, q * e1)}});
    }
    case FamilyId::F4: {
        const unsigned m = n / 2;
        const unsigned long long q = 1ULL << m;
        const long long i = get("i");
        const unsigned long long p = pow2_mod(n, i);
        const Element c = el("c");
        return detail::from_poly(F, {{1, reduce_exponent(n, p + 1)},
                                     {1, reduce_exponent(n, q + 1)},
                                     {c, reduce_exponent(n, p * q + 1)},
                                     {F.pow(c, static_cast<long long>(q)), reduce_exponent(n, p + q)},
                                     {el("s"), reduce_exponent(n, p * q + p)},
                                     {1, reduce_exponent(n, (p + 1) * q)}});
    }
    case FamilyId::F5: return detail::trace_family(F, el("a"), 1, {{3, 9}});
    case FamilyId::F6: return detail::trace_family(F, el("a"), 3, {{3, 9}, {6, 18}});
    case FamilyId::F7: return detail::trace_family(F, el("a"), 3, {{6, 18}, {12, 36}});
    case FamilyId::F8_10: {
        const long long k = n / 3, s = get("s");
        const Element u = el("u");
        const unsigned long long pk = pow2_mod(n, k), pmk = pow2_mod(n, -k), ps = pow2_mod(n, s),
                                 pks = pow2_mod(n, k + s);
        return detail::from_poly(F, {{u, reduce_exponent(n, ps + 1)},
                                     {F.pow(u, static_cast<long long>(pk)), reduce_exponent(n, pmk + pks)},
                                     {el("v"), reduce_exponent(n, pmk + 1)},
                                     {F.mul(el("w"), F.pow(u, static_cast<long long>(pk + 1))), reduce_exponent(n, ps + pks)}});
    }
    case FamilyId::F11: {
        const long long k = n / 2, s = get("s");
        const Element alpha = el("alpha");
        const unsigned long long pk = pow2_mod(n, k);
        std::vector<Term> terms{{alpha, reduce_exponent(n, pow2_mod(n, s) + 1)},
                                {F.pow(alpha, static_cast<long long>(pk)), reduce_exponent(n, pow2_mod(n, k + s) + pk)},
                                {el("beta"), reduce_exponent(n, pk + 1)}};
        for (long long i = 1; i < k; ++i)
            terms.push_back({el("gamma_" + std::to_string(i)), reduce_exponent(n, pow2_mod(n, k + i) + pow2_mod(n, i))});
        return detail::from_poly(F, std::move(terms));
    }
    default: break;
    }
    throw Error(ErrorCode::InvalidArgument, "unhandled family");
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

struct EnumStrategy {
    enum class Kind { Exhaustive, Sampled };
    Kind kind = Kind::Exhaustive;
    std::uint64_t count = 0;     // samples drawn (Sampled)
    std::uint64_t seed = 0;
    bool zero_gamma_slice = false; // N°11: also emit every tuple with all gamma_i = 0

    static EnumStrategy exhaustive() { return {}; }
    static EnumStrategy sampled(std::uint64_t count, std::uint64_t seed, bool zero_slice = false) {
        return {Kind::Sampled, count, seed, zero_slice};
    }
};

inline constexpr std::uint64_t kExhaustiveBudget = 100'000'000;

struct EnumStats {
    std::uint64_t raw_tuples = 0;      // size of the raw parameter space scanned or sampled from
    std::uint64_t condition_pass = 0;  // candidates passing every side condition
    std::uint64_t apn = 0;             // ... and verified APN (before lut dedup)
    std::uint64_t emitted = 0;         // after lut dedup
    std::uint64_t non_apn = 0;         // condition-passing but failing the APN check
};

/// Parameter tuple that passed its condition predicate (function not built yet).
struct Candidate {
    FamilyId family;
    ParamList params;
};

namespace detail {

inline std::vector<Element> subfield_elements(const FieldSpec& F, unsigned k) {
    std::vector<Element> out;
    for (Element e = 0; e < F.size(); ++e)
        if (F.in_subfield(k, e)) out.push_back(e);
    return out;
}

inline std::vector<long long> integer_range(long long lo, long long hi) {
    std::vector<long long> v;
    for (long long i = lo; i <= hi; ++i) v.push_back(i);
    return v;
}

/// Integer-parameter choices per family (before field-element parameters).
inline std::vector<long long> index_choices(FamilyId f, unsigned n) {
    switch (f) {
    case FamilyId::Gold:
    case FamilyId::Kasami:
    case FamilyId::F8_10: return integer_range(1, n - 1);
    case FamilyId::F3:
    case FamilyId::F4: return integer_range(1, static_cast<long long>(n / 2) - 1);
    case FamilyId::F11: return integer_range(1, static_cast<long long>(n / 2) - 1);
    case FamilyId::F1_2: return integer_range(1, n - 1);
    default: return {};
    }
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
    return a * b;
}

inline std::uint64_t saturating_pow(std::uint64_t a, std::uint64_t e) {
    std::uint64_t r = 1;
    while (e--) r = saturating_mul(r, a);
    return r;
}

} // namespace detail

/// Raw parameter-space size for the exhaustive scan (used for the budget check).
inline std::uint64_t raw_space_size(FamilyId f, const FieldSpec& F) {
    const unsigned n = F.n();
    const std::uint64_t N = F.size();
    if (!family_applicable(f, n)) return 0;
    switch (f) {
    case FamilyId::Gold:
    case FamilyId::Kasami: return n - 1;
    case FamilyId::Welch:
    case FamilyId::Niho:
    case FamilyId::Inverse:
    case FamilyId::Dobbertin: return 1;
    case FamilyId::F1_2: return 2 * (n - 1) * N;
    case FamilyId::F3:
    case FamilyId::F4: return detail::index_choices(f, n).size() * N * N;
    case FamilyId::F5:
    case FamilyId::F6:
    case FamilyId::F7: return N - 1;
    case FamilyId::F8_10: {
        const std::uint64_t K = std::uint64_t{1} << (n / 3);
        return (n - 1) * N * K * K;
    }
    case FamilyId::F11: {
        const unsigned k = n / 2;
        const std::uint64_t K = std::uint64_t{1} << k;
        return detail::saturating_mul(detail::saturating_mul(detail::index_choices(f, n).size() * N, N),
                                      detail::saturating_pow(K, k - 1));
    }
    }
    return 0;
}

/// Condition-passing parameter tuples, in deterministic order. Field-valued
/// parameters are scanned in encoding order; sampled strategies draw uniformly
/// from the condition-passing space with a seeded generator.
inline std::vector<Candidate> candidates(FamilyId f, const FieldSpec& F, const EnumStrategy& strategy,
                                         EnumStats* stats = nullptr) {
    EnumStats local;
    EnumStats& st = stats ? *stats : local;
    std::vector<Candidate> out;
    const unsigned n = F.n();
    if (!family_applicable(f, n)) return out;
    const bool exhaustive = strategy.kind == EnumStrategy::Kind::Exhaustive;
    const std::uint64_t raw = raw_space_size(f, F);
    if (exhaustive && raw > kExhaustiveBudget)
        throw Error(ErrorCode::StrategyInfeasible, std::string(family_name(f)) + " at n=" + std::to_string(n) + " has " +
                                                       std::to_string(raw) + " raw tuples (budget " +
                                                       std::to_string(kExhaustiveBudget) + ")");
    st.raw_tuples += raw;
    auto accept = [&](ParamList params) {
        if (validate_conditions(f, F, params)) {
            ++st.condition_pass;
            out.push_back({f, std::move(params)});
        }
    };
    auto E = [](std::string name, Element v) { return Param{std::move(name), static_cast<long long>(v), true}; };
    auto I = [](std::string name, long long v) { return Param{std::move(name), v, false}; };
    std::mt19937_64 rng(strategy.seed ^ (static_cast<std::uint64_t>(f) * 0x9e3779b97f4a7c15ULL) ^ n);
    auto pick = [&rng](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };

    switch (f) {
    case FamilyId::Gold:
    case FamilyId::Kasami:
        for (long long i : detail::index_choices(f, n)) accept({I("i", i)});
        break;
    case FamilyId::Welch:
    case FamilyId::Niho:
    case FamilyId::Inverse: accept({I("t", (n - 1) / 2)}); break;
    case FamilyId::Dobbertin: accept({I("i", n / 5)}); break;
    case FamilyId::F1_2: {
        std::vector<Element> prim;
        for (Element e = 1; e < F.size(); ++e)
            if (F.is_primitive(e)) prim.push_back(e);
        std::vector<ParamList> base;
        for (long long p : {3LL, 4LL}) {
            if (n % p != 0) continue;
            for (long long s : detail::index_choices(f, n)) base.push_back({I("p", p), I("k", n / p), I("s", s)});
        }
        if (exhaustive) {
            for (const auto& b : base)
                for (Element alpha : prim) {
                    auto params = b;
                    params.push_back(E("alpha", alpha));
                    accept(std::move(params));
                }
        } else {
            std::vector<ParamList> valid;
            for (const auto& b : base) {
                auto params = b;
                params.push_back(E("alpha", prim.front()));
                if (validate_conditions(f, F, params)) valid.push_back(b);
            }
            if (valid.empty()) break;
            for (std::uint64_t draw = 0; draw < strategy.count; ++draw) {
                auto params = pick(valid);
                params.push_back(E("alpha", pick(prim)));
                accept(std::move(params));
            }
        }
        break;
    }
    case FamilyId::F3: {
        const unsigned m = n / 2;
        const Element q = Element{1} << m;
        for (long long i : detail::index_choices(f, n)) {
            if (std::gcd(i, static_cast<long long>(m)) != 1) continue;
            if (std::gcd((1LL << i) + 1, static_cast<long long>(q) + 1) == 1) continue;
            std::vector<Element> cs;
            for (Element c = 1; c < F.size(); ++c) {
                if (F.pow(c, q + 1) != 1) continue;
                const long long g = std::gcd(((1LL << i) + 1) * (static_cast<long long>(q) - 1) % F.order(),
                                             static_cast<long long>(F.order()));
                if (F.log(c) % g == 0) continue;
                cs.push_back(c);
            }
            if (exhaustive) {
                for (Element c : cs)
                    for (Element b = 0; b < F.size(); ++b) accept({I("i", i), E("b", b), E("c", c)});
            } else if (!cs.empty()) {
                for (std::uint64_t draw = 0; draw < strategy.count; ++draw)
                    accept({I("i", i), E("b", static_cast<Element>(rng() & F.mask())), E("c", pick(cs))});
            }
        }
        break;
    }
    case FamilyId::F4: {
        const unsigned m = n / 2;
        std::vector<Element> outside;
        for (Element s = 0; s < F.size(); ++s)
            if (!F.in_subfield(m, s)) outside.push_back(s);
        std::vector<std::pair<long long, Element>> ic;
        for (long long i : detail::index_choices(f, n)) {
            if (std::gcd(i, static_cast<long long>(m)) != 1) continue;
            for (Element c = 0; c < F.size(); ++c)
                if (validate_conditions(f, F, {I("i", i), E("c", c), E("s", outside.front())})) ic.emplace_back(i, c);
        }
        if (exhaustive) {
            for (const auto& [i, c] : ic)
                for (Element s = 0; s < F.size(); ++s) accept({I("i", i), E("c", c), E("s", s)});
        } else if (!ic.empty()) {
            for (std::uint64_t draw = 0; draw < strategy.count; ++draw) {
                const auto [i, c] = pick(ic);
                accept({I("i", i), E("c", c), E("s", pick(outside))});
            }
        }
        break;
    }
    case FamilyId::F5:
    case FamilyId::F6:
    case FamilyId::F7:
        if (exhaustive) {
            for (Element a = 1; a < F.size(); ++a) accept({E("a", a)});
        } else {
            for (std::uint64_t draw = 0; draw < strategy.count; ++draw)
                accept({E("a", 1 + static_cast<Element>(rng() % F.order()))});
        }
        break;
    case FamilyId::F8_10: {
        const unsigned k = n / 3;
        const auto sub = detail::subfield_elements(F, k);
        std::vector<Element> prim;
        for (Element e = 1; e < F.size(); ++e)
            if (F.is_primitive(e)) prim.push_back(e);
        std::vector<long long> svals;
        for (long long s : detail::index_choices(f, n))
            if (std::gcd(s, static_cast<long long>(n)) == 1 && (k + s) % 3 == 0) svals.push_back(s);
        if (exhaustive) {
            for (long long s : svals)
                for (Element u = 1; u < F.size(); ++u)
                    for (Element v : sub)
                        for (Element w : sub) accept({I("s", s), E("u", u), E("v", v), E("w", w)});
        } else if (!svals.empty()) {
            for (std::uint64_t draw = 0; draw < strategy.count; ++draw)
                accept({I("s", pick(svals)), E("u", pick(prim)), E("v", pick(sub)), E("w", pick(sub))});
        }
        break;
    }
    case FamilyId::F11: {
        const unsigned k = n / 2;
        const auto sub = detail::subfield_elements(F, k);
        std::vector<Element> noncubes, outside;
        for (Element e = 1; e < F.size(); ++e)
            if (!F.is_cube(e)) noncubes.push_back(e);
        for (Element e = 0; e < F.size(); ++e)
            if (!F.in_subfield(k, e)) outside.push_back(e);
        std::vector<long long> svals;
        for (long long s : detail::index_choices(f, n))
            if (s % 2 == 1 && std::gcd(s, static_cast<long long>(k)) == 1) svals.push_back(s);
        auto make = [&](long long s, Element alpha, Element beta, const std::vector<Element>& gammas) {
            ParamList p{I("s", s), E("alpha", alpha), E("beta", beta)};
            for (unsigned i = 1; i < k; ++i) p.push_back(E("gamma_" + std::to_string(i), gammas[i - 1]));
            return p;
        };
        if (exhaustive) {
            std::vector<Element> gammas(k - 1, 0);
            for (long long s : svals)
                for (Element alpha = 1; alpha < F.size(); ++alpha)
                    for (Element beta = 0; beta < F.size(); ++beta) {
                        // odometer over gamma in GF(2^k)^(k-1)
                        std::vector<std::size_t> idx(k - 1, 0);
                        while (true) {
                            for (unsigned t = 0; t + 1 < k; ++t) gammas[t] = sub[idx[t]];
                            accept(make(s, alpha, beta, gammas));
                            unsigned t = 0;
                            while (t + 1 < k && ++idx[t] == sub.size()) idx[t++] = 0;
                            if (t + 1 >= k) break;
                        }
                    }
        } else if (!svals.empty() && !noncubes.empty()) {
            if (strategy.zero_gamma_slice) {
                const std::vector<Element> zeros(k - 1, 0);
                for (long long s : svals)
                    for (Element alpha : noncubes)
                        for (Element beta : outside) accept(make(s, alpha, beta, zeros));
            }
            std::vector<Element> gammas(k - 1, 0);
            for (std::uint64_t draw = 0; draw < strategy.count; ++draw) {
                const long long s = pick(svals);
                const Element alpha = pick(noncubes);
                const Element beta = pick(outside);
                for (auto& g : gammas) g = pick(sub);
                accept(make(s, alpha, beta, gammas));
            }
        }
        break;
    }
    }
    return out;
}

/// Fast APN check: the rank test for polynomial (quadratic) families, the
/// early-abort DDT test for power families.
inline bool instance_is_apn(FamilyId f, const Vbf& F) {
    return is_power_family(f) ? is_apn(F) : is_apn_quadratic(F);
}

/// 128-bit lookup-table fingerprint used for within-family deduplication.
inline std::pair<std::uint64_t, std::uint64_t> lut_fingerprint(const std::vector<Element>& lut) {
    std::uint64_t h1 = 0x6a09e667f3bcc908ULL, h2 = 0xbb67ae8584caa73bULL;
    for (auto v : lut) {
        h1 = hash_combine(h1, v);
        h2 = mix64(h2 + v + 0x3c6ef372fe94f82bULL) ^ (h2 >> 7);
    }
    return {h1, h2};
}

struct FingerprintHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const noexcept {
        return static_cast<std::size_t>(p.first ^ (p.second * 31));
    }
};

inline FamilyInstance make_instance(FamilyId f, const FieldSpec& F, ParamList params) {
    BuiltForm b = build_form(f, F, params);
    return FamilyInstance{f, F.n(), std::move(params), Vbf(F, std::move(b.lut), std::move(b.poly)), std::move(b.form),
                          std::move(b.formula)};
}

/// Streams verified APN instances to `sink` in candidate order, each distinct
/// lookup table once. A condition-passing candidate that fails the APN check
/// is counted in stats.non_apn (a defect in a condition predicate).
inline EnumStats enumerate(FamilyId f, const FieldSpec& F, const EnumStrategy& strategy,
                           const std::function<void(FamilyInstance&&)>& sink, unsigned threads = 0) {
    EnumStats st;
    auto cands = candidates(f, F, strategy, &st);
    std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, FingerprintHash> seen;
    constexpr std::size_t kChunk = 4096;
    for (std::size_t start = 0; start < cands.size(); start += kChunk) {
        const std::size_t end = std::min(cands.size(), start + kChunk);
        std::vector<std::optional<FamilyInstance>> built(end - start);
        parallel_for(end - start, [&](std::size_t k) {
            auto inst = make_instance(f, F, cands[start + k].params);
            if (instance_is_apn(f, inst.function)) built[k] = std::move(inst);
        }, threads);
        for (auto& b : built) {
            if (!b) {
                ++st.non_apn;
                continue;
            }
            ++st.apn;
            if (!seen.insert(lut_fingerprint(b->function.lut())).second) continue;
            ++st.emitted;
            sink(std::move(*b));
        }
    }
    return st;
}

inline std::vector<FamilyInstance> enumerate_all(FamilyId f, const FieldSpec& F, const EnumStrategy& strategy,
                                                 EnumStats* stats = nullptr) {
    std::vector<FamilyInstance> out;
    auto st = enumerate(f, F, strategy, [&](FamilyInstance&& inst) { out.push_back(std::move(inst)); });
    if (stats) *stats = st;
    return out;
}

} // namespace apn
