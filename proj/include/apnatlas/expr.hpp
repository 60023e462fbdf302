#pragma once

// Inline function expressions over the generators x and a, e.g.
//   "x^6 + x^9 + a^7*x^48",  "x^3 + a^-1*tr(1; a^3 x^9)",  "(a x)^3 + x^{-1}".
// Juxtaposition multiplies; "-" is addition (characteristic 2); integer
// literals (decimal or 0x-hex) are element encodings; tr(m; e) is the trace
// from GF(2^n) to GF(2^m). Negative powers of 0 evaluate to 0.

#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/vbf.hpp"

namespace apn {

struct ExprNode {
    enum class Kind { X, Const, Sum, Product, Power, Trace };
    Kind kind = Kind::Const;
    Element value = 0;      // Const
    long long exponent = 0; // Power
    unsigned m = 0;         // Trace
    std::vector<std::unique_ptr<ExprNode>> kids;
};

namespace detail {

class ExprParser {
public:
    ExprParser(std::string_view text, const FieldSpec& F) : s_(text), F_(F) {}

    std::unique_ptr<ExprNode> parse() {
        auto e = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::ParseError, what + " at offset " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    char peek() {
        skip();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    bool starts_factor() {
        const char c = peek();
        return c == 'x' || c == 'a' || c == '(' || c == 't' || std::isdigit(static_cast<unsigned char>(c));
    }

    long long integer() {
        skip();
        const std::size_t start = pos_;
        int base = 10;
        if (s_.substr(pos_, 2) == "0x" || s_.substr(pos_, 2) == "0X") {
            base = 16;
            pos_ += 2;
        }
        const std::size_t digits = pos_;
        while (pos_ < s_.size() && std::isxdigit(static_cast<unsigned char>(s_[pos_])) &&
               (base == 16 || std::isdigit(static_cast<unsigned char>(s_[pos_]))))
            ++pos_;
        if (pos_ == digits) {
            pos_ = start;
            fail("expected integer");
        }
        try {
            return std::stoll(std::string(s_.substr(digits, pos_ - digits)), nullptr, base);
        } catch (const std::out_of_range&) {
            fail("integer out of range");
        }
    }

    long long signed_integer() {
        if (accept('{')) {
            const long long v = signed_integer();
            expect('}');
            return v;
        }
        if (accept('(')) {
            const long long v = signed_integer();
            expect(')');
            return v;
        }
        if (accept('-')) return -integer();
        accept('+');
        return integer();
    }

    std::unique_ptr<ExprNode> sum() {
        auto first = product();
        if (peek() != '+' && peek() != '-') return first;
        auto node = std::make_unique<ExprNode>();
        node->kind = ExprNode::Kind::Sum;
        node->kids.push_back(std::move(first));
        while (accept('+') || accept('-')) node->kids.push_back(product());
        return node;
    }

    std::unique_ptr<ExprNode> product() {
        auto first = power();
        if (peek() != '*' && !starts_factor()) return first;
        auto node = std::make_unique<ExprNode>();
        node->kind = ExprNode::Kind::Product;
        node->kids.push_back(std::move(first));
        while (true) {
            if (accept('*')) {
                node->kids.push_back(power());
            } else if (starts_factor()) {
                node->kids.push_back(power());
            } else {
                break;
            }
        }
        return node;
    }

    std::unique_ptr<ExprNode> power() {
        auto base = primary();
        while (accept('^')) {
            auto node = std::make_unique<ExprNode>();
            node->kind = ExprNode::Kind::Power;
            node->exponent = signed_integer();
            node->kids.push_back(std::move(base));
            base = std::move(node);
        }
        return base;
    }

    std::unique_ptr<ExprNode> primary() {
        const char c = peek();
        auto node = std::make_unique<ExprNode>();
        if (c == 'x') {
            ++pos_;
            node->kind = ExprNode::Kind::X;
            return node;
        }
        if (c == 'a') {
            ++pos_;
            node->kind = ExprNode::Kind::Const;
            node->value = FieldSpec::generator();
            return node;
        }
        if (c == '(') {
            ++pos_;
            auto inner = sum();
            expect(')');
            return inner;
        }
        if (c == 't') {
            if (s_.substr(pos_, 2) != "tr") fail("unknown identifier");
            pos_ += 2;
            expect('(');
            const long long m = integer();
            if (m < 1 || F_.n() % m != 0)
                throw Error(ErrorCode::InvalidSubfield, "trace to GF(2^" + std::to_string(m) + ") needs m | n");
            expect(';');
            node->kind = ExprNode::Kind::Trace;
            node->m = static_cast<unsigned>(m);
            node->kids.push_back(sum());
            expect(')');
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            const long long v = integer();
            if (v < 0 || v >= static_cast<long long>(F_.size())) fail("element literal out of range");
            node->kind = ExprNode::Kind::Const;
            node->value = static_cast<Element>(v);
            return node;
        }
        fail(c == '\0' ? "unexpected end of input" : std::string("unexpected '") + c + "'");
    }

    std::string_view s_;
    const FieldSpec& F_;
    std::size_t pos_ = 0;
};

inline Element eval_node(const ExprNode& e, const FieldSpec& F, Element x) {
    switch (e.kind) {
    case ExprNode::Kind::X: return x;
    case ExprNode::Kind::Const: return e.value;
    case ExprNode::Kind::Sum: {
        Element r = 0;
        for (const auto& k : e.kids) r ^= eval_node(*k, F, x);
        return r;
    }
    case ExprNode::Kind::Product: {
        Element r = 1;
        for (const auto& k : e.kids) r = F.mul(r, eval_node(*k, F, x));
        return r;
    }
    case ExprNode::Kind::Power: {
        const Element b = eval_node(*e.kids[0], F, x);
        if (b == 0) return e.exponent == 0 ? 1 : 0;
        return F.pow(b, e.exponent);
    }
    case ExprNode::Kind::Trace: return F.trace(e.m, eval_node(*e.kids[0], F, x));
    }
    return 0;
}

// Symbolic form: exponent -> coefficient, exponents in [0, 2^n - 1] with x^(2^n-1)
// kept distinct from x^0 (they differ at x = 0).
using SymPoly = std::map<std::uint32_t, Element>;

inline std::uint32_t reduce_exp(const FieldSpec& F, std::uint64_t e) {
    if (e == 0) return 0;
    const std::uint64_t r = e % F.order();
    return static_cast<std::uint32_t>(r == 0 ? F.order() : r);
}

inline void add_term(SymPoly& p, std::uint32_t e, Element c) {
    if (c == 0) return;
    auto& slot = p[e];
    slot ^= c;
    if (slot == 0) p.erase(e);
}

inline constexpr std::size_t kSymbolicTermCap = 4096;

inline std::optional<SymPoly> sym_mul(const FieldSpec& F, const SymPoly& a, const SymPoly& b) {
    if (a.size() * b.size() > kSymbolicTermCap * 64) return std::nullopt;
    SymPoly r;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) add_term(r, reduce_exp(F, std::uint64_t{ea} + eb), F.mul(ca, cb));
    return r;
}

inline std::optional<SymPoly> symbolic(const ExprNode& e, const FieldSpec& F) {
    switch (e.kind) {
    case ExprNode::Kind::X: return SymPoly{{1, 1}};
    case ExprNode::Kind::Const: return e.value ? SymPoly{{0, e.value}} : SymPoly{};
    case ExprNode::Kind::Sum: {
        SymPoly r;
        for (const auto& k : e.kids) {
            auto p = symbolic(*k, F);
            if (!p) return std::nullopt;
            for (const auto& [ex, c] : *p) add_term(r, ex, c);
        }
        return r;
    }
    case ExprNode::Kind::Product: {
        SymPoly r{{0, 1}};
        for (const auto& k : e.kids) {
            auto p = symbolic(*k, F);
            if (!p) return std::nullopt;
            auto q = sym_mul(F, r, *p);
            if (!q) return std::nullopt;
            r = std::move(*q);
        }
        return r;
    }
    case ExprNode::Kind::Power: {
        auto base = symbolic(*e.kids[0], F);
        if (!base) return std::nullopt;
        if (e.exponent == 0) return SymPoly{{0, 1}};
        if (base->empty()) return SymPoly{};
        if (base->size() == 1) {
            // Monomial c x^t: exponent arithmetic modulo 2^n - 1 on nonzero x; x^0 terms stay constant.
            const auto [t, c] = *base->begin();
            const Element coeff = F.pow(c, e.exponent);
            if (t == 0) return SymPoly{{0, coeff}};
            const long long ord = F.order();
            const long long k = ((static_cast<long long>(t) * (e.exponent % ord)) % ord + ord) % ord;
            return SymPoly{{static_cast<std::uint32_t>(k == 0 ? ord : k), coeff}};
        }
        if (e.exponent < 0) return std::nullopt;
        // Square-and-multiply; squaring is Frobenius on coefficients and exponents.
        SymPoly result{{0, 1}}, sq = *base;
        for (long long k = e.exponent; k > 0; k >>= 1) {
            if (k & 1) {
                auto q = sym_mul(F, result, sq);
                if (!q) return std::nullopt;
                result = std::move(*q);
            }
            if (k > 1) {
                SymPoly next;
                for (const auto& [ex, c] : sq) add_term(next, reduce_exp(F, std::uint64_t{ex} * 2), F.sqr(c));
                sq = std::move(next);
            }
        }
        return result;
    }
    case ExprNode::Kind::Trace: {
        auto inner = symbolic(*e.kids[0], F);
        if (!inner) return std::nullopt;
        SymPoly r;
        for (unsigned j = 0; j < F.n(); j += e.m)
            for (const auto& [ex, c] : *inner) add_term(r, reduce_exp(F, std::uint64_t{ex} << j), F.frobenius(c, j));
        return r;
    }
    }
    return std::nullopt;
}

} // namespace detail

inline std::unique_ptr<ExprNode> parse_expression(std::string_view text, const FieldSpec& F) {
    return detail::ExprParser(text, F).parse();
}

/// Evaluates the expression at every field element. The univariate form is
/// attached as provenance when it can be expanded symbolically.
inline Vbf expression_function(std::string_view text, const FieldSpec& F) {
    const auto ast = parse_expression(text, F);
    std::vector<Element> lut(F.size());
    for (Element x = 0; x < F.size(); ++x) lut[x] = detail::eval_node(*ast, F, x);
    std::optional<UnivariatePoly> poly;
    if (auto sym = detail::symbolic(*ast, F)) {
        std::vector<Term> terms;
        for (const auto& [e, c] : *sym) terms.push_back({c, e});
        poly = UnivariatePoly(std::move(terms));
    }
    return Vbf(F, std::move(lut), std::move(poly));
}

} // namespace apn
