#include <gtest/gtest.h>

#include <bit>
#include <random>
#include <set>

#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"

using namespace apn;

namespace {

// Schoolbook oracles, independent of the field's log/exp tables.
std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, std::uint32_t mod, unsigned n) {
    std::uint32_t r = 0;
    for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
        r <<= 1;
        if (r >> n & 1) r ^= mod;
        if (b >> i & 1) r ^= a;
    }
    return r;
}

bool brute_irreducible(std::uint32_t p) {
    auto deg = [](std::uint32_t v) { return static_cast<int>(std::bit_width(v)) - 1; };
    const int d = deg(p);
    for (std::uint32_t q = 2; deg(q) <= d / 2; ++q) {
        // Polynomial remainder of p by q.
        std::uint32_t r = p;
        const int dq = deg(q);
        while (r != 0 && deg(r) >= dq) r ^= q << (deg(r) - dq);
        if (r == 0) return false;
    }
    return true;
}

std::uint32_t brute_order_of_x(std::uint32_t p, unsigned n) {
    std::uint32_t e = 1;
    for (std::uint32_t k = 1; k < (1U << n); ++k) {
        e <<= 1;
        if (e >> n & 1) e ^= p;
        if (e == 1) return k;
    }
    return 0;
}

} // namespace

TEST(Field, DefaultModulusTableIsPrimitive) {
    for (unsigned n = kMinDegree; n <= kMaxDegree; ++n) {
        const std::uint32_t m = kDefaultModulus[n];
        EXPECT_EQ(std::bit_width(m) - 1, static_cast<int>(n));
        EXPECT_TRUE(is_primitive_gf2(m)) << n;
        if (n <= 12) {
            EXPECT_TRUE(brute_irreducible(m)) << n;
            EXPECT_EQ(brute_order_of_x(m, n), (1U << n) - 1) << n;
        }
    }
    EXPECT_EQ(make_field(6).modulus_hex(), "0x43");
    EXPECT_EQ(make_field(8).modulus_hex(), "0x11d");
    EXPECT_EQ(make_field(10).modulus_hex(), "0x409");
}

TEST(Field, PrimitiveListMatchesBruteForce) {
    for (unsigned n = 2; n <= 8; ++n) {
        std::set<std::uint32_t> brute;
        for (std::uint32_t m = (1U << n) | 1U; m < (1U << (n + 1)); m += 2)
            if (brute_irreducible(m) && brute_order_of_x(m, n) == (1U << n) - 1) brute.insert(m);
        const auto listed = primitive_polynomials(n);
        EXPECT_EQ(std::set<std::uint32_t>(listed.begin(), listed.end()), brute) << n;
    }
}

TEST(Field, RejectsBadModuli) {
    EXPECT_THROW(make_field(6, 0x41), Error);  // x^6 + 1, reducible
    EXPECT_THROW(make_field(6, 0x49), Error);  // x^6+x^3+1: irreducible, not primitive
    EXPECT_THROW(make_field(6, 0x13), Error);  // wrong degree
    EXPECT_THROW(make_field(1), Error);
    EXPECT_THROW(make_field(17), Error);
    try {
        make_field(6, 0x49);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RejectedModulus);
    }
    EXPECT_EQ(parse_modulus("0x43"), 0x43U);
    EXPECT_THROW(parse_modulus("zz"), Error);
}

TEST(Field, AxiomsExhaustiveUpToSix) {
    for (unsigned n = 2; n <= 6; ++n) {
        for (auto mod : primitive_polynomials(n)) {
            const FieldSpec F = make_field(n, mod);
            const std::uint32_t N = F.size();
            for (Element a = 0; a < N; ++a) {
                EXPECT_EQ(F.mul(a, 1), a);
                EXPECT_EQ(F.mul(a, 0), 0U);
                if (a) {
                    EXPECT_EQ(F.mul(a, F.inv(a)), 1U);
                }
                for (Element b = 0; b < N; ++b) {
                    const Element ab = F.mul(a, b);
                    ASSERT_EQ(ab, slow_mul(a, b, mod, n));
                    ASSERT_EQ(ab, F.mul(b, a));
                    for (Element c = 0; c < N; ++c) {
                        ASSERT_EQ(F.mul(ab, c), F.mul(a, F.mul(b, c)));
                        ASSERT_EQ(F.mul(a, b ^ c), ab ^ F.mul(a, c));
                    }
                }
            }
        }
    }
}

TEST(Field, PowLogExpAndErrors) {
    const FieldSpec F = make_field(8);
    EXPECT_EQ(F.exp(0), 1U);
    EXPECT_EQ(F.exp(1), FieldSpec::generator());
    EXPECT_TRUE(F.is_primitive(FieldSpec::generator()));
    std::mt19937 rng(7);
    for (int i = 0; i < 500; ++i) {
        const Element a = rng() % (F.size() - 1) + 1;
        const long long k = static_cast<long long>(rng() % 2000) - 1000;
        EXPECT_EQ(F.exp(F.log(a)), a);
        EXPECT_EQ(F.mul(F.pow(a, k), F.pow(a, -k)), 1U);
        EXPECT_EQ(F.pow(a, F.order()), 1U);
    }
    EXPECT_THROW((void)F.inv(0), Error);
    EXPECT_THROW((void)F.log(0), Error);
    EXPECT_THROW((void)F.div(3, 0), Error);
    EXPECT_THROW((void)F.pow(0, -1), Error);
    EXPECT_EQ(F.pow(0, 0), 1U);
}

TEST(Field, TraceAndSubfields) {
    for (unsigned n : {6U, 8U, 9U, 10U}) {
        const FieldSpec F = make_field(n);
        for (unsigned m = 1; m <= n; ++m) {
            if (n % m) {
                EXPECT_THROW((void)F.trace(m, 1), Error);
                continue;
            }
            std::map<Element, unsigned> fiber;
            for (Element x = 0; x < F.size(); ++x) {
                const Element t = F.trace(m, x);
                ASSERT_TRUE(F.in_subfield(m, t));
                ++fiber[t];
            }
            // Trace onto GF(2^m) is a surjective linear map: equal fibers.
            EXPECT_EQ(fiber.size(), 1U << m);
            for (const auto& [t, c] : fiber) EXPECT_EQ(c, 1U << (n - m));
        }
        for (Element x = 0; x < F.size(); ++x) EXPECT_EQ(F.trace_bit(x), F.trace(1, x));
    }
}

TEST(Field, CubesAndOrders) {
    for (unsigned n : {6U, 7U, 8U}) {
        const FieldSpec F = make_field(n);
        std::set<Element> cubes;
        for (Element x = 1; x < F.size(); ++x) cubes.insert(F.mul(x, F.sqr(x)));
        unsigned counted = 0;
        for (Element x = 1; x < F.size(); ++x) counted += F.is_cube(x);
        EXPECT_EQ(counted, cubes.size());
        EXPECT_EQ(cubes.size(), n % 2 == 0 ? F.order() / 3 : F.order());
    }
}

TEST(Field, TraceDualBasis) {
    const FieldSpec F = make_field(7);
    for (Element u = 0; u < F.size(); ++u) {
        const Element v = F.trace_dual(u);
        EXPECT_EQ(F.trace_dual_inverse(v), u);
        for (Element h = 0; h < F.size(); ++h)
            ASSERT_EQ(F.trace_bit(F.mul(u, h)), static_cast<unsigned>(std::popcount(v & h) & 1));
    }
}

TEST(Field, IsomorphismBetweenModuli) {
    for (unsigned n : {5U, 6U, 7U}) {
        const FieldSpec A = make_field(n);
        for (auto mod : primitive_polynomials(n)) {
            const FieldSpec B = make_field(n, mod);
            const auto phi = field_isomorphism(A, B);
            ASSERT_EQ(phi.size(), A.size());
            std::set<Element> image(phi.begin(), phi.end());
            EXPECT_EQ(image.size(), A.size());
            for (Element x = 0; x < A.size(); ++x)
                for (Element y = 0; y < A.size(); ++y) {
                    ASSERT_EQ(phi[x ^ y], phi[x] ^ phi[y]);
                    ASSERT_EQ(phi[A.mul(x, y)], B.mul(phi[x], phi[y]));
                }
        }
    }
}

TEST(Field, IrreducibilityOverExtension) {
    const FieldSpec F = make_field(4);
    // X^2 + X + 1 has roots in GF(4) inside GF(16).
    EXPECT_FALSE(irreducible_over_extension(F, ExtPoly{1, 1, 1}));
    // X^2 + X + c is irreducible iff tr(c) = 1.
    for (Element c = 1; c < F.size(); ++c)
        EXPECT_EQ(irreducible_over_extension(F, ExtPoly{c, 1, 1}), F.trace_bit(c) == 1) << c;
}
