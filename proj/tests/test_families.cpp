#include <gtest/gtest.h>

#include <set>

#include "apnatlas/analysis.hpp"
#include "apnatlas/error.hpp"
#include "apnatlas/families.hpp"

using namespace apn;

namespace {

ParamList ints(std::initializer_list<std::pair<const char*, long long>> kv) {
    ParamList out;
    for (const auto& [k, v] : kv) out.push_back({k, v, false});
    return out;
}

Spectrum walsh_support(const Vbf& f) {
    Spectrum s = extended_walsh_spectrum(f);
    for (auto& [v, m] : s) m = 0;
    return s;
}

Spectrum support_of(std::initializer_list<std::int64_t> values) {
    Spectrum s;
    for (auto v : values) s.emplace_back(v, 0);
    return s;
}

} // namespace

TEST(Families, PowerExponents) {
    EXPECT_EQ(power_exponent(FamilyId::Gold, 7, ints({{"i", 1}})), 3U);
    EXPECT_EQ(power_exponent(FamilyId::Gold, 7, ints({{"i", 3}})), 9U);
    EXPECT_EQ(power_exponent(FamilyId::Kasami, 7, ints({{"i", 2}})), 13U);
    EXPECT_EQ(power_exponent(FamilyId::Kasami, 8, ints({{"i", 3}})), 57U);
    EXPECT_EQ(power_exponent(FamilyId::Welch, 7, {}), 11U);
    EXPECT_EQ(power_exponent(FamilyId::Niho, 7, {}), 39U);
    EXPECT_EQ(power_exponent(FamilyId::Niho, 9, {}), 19U);
    EXPECT_EQ(power_exponent(FamilyId::Inverse, 7, {}), 63U);
    EXPECT_EQ(power_exponent(FamilyId::Dobbertin, 10, {}), 339U);
    EXPECT_THROW(power_exponent(FamilyId::Gold, 6, ints({{"i", 2}})), Error);
    EXPECT_THROW(power_exponent(FamilyId::Welch, 8, {}), Error);
    EXPECT_THROW(power_exponent(FamilyId::Dobbertin, 9, {}), Error);
}

TEST(Families, NamesRoundTrip) {
    for (auto f : kAllFamilies) EXPECT_EQ(parse_family(family_name(f)), f);
    EXPECT_EQ(family_label(FamilyId::F8_10), "N°8-10");
    EXPECT_THROW(parse_family("f12"), Error);
}

TEST(Families, ConditionReasons) {
    const FieldSpec F = make_field(6);
    const auto bad_gold = validate_conditions(FamilyId::Gold, F, ints({{"i", 3}}));
    EXPECT_FALSE(bad_gold);
    EXPECT_NE(bad_gold.reason.find("gcd(i,n)=1"), std::string::npos);

    // N°3 with c = 1: c^(q+1) = 1 holds but c is a (2^i+1)(q-1) power.
    ParamList f3 = ints({{"i", 1}});
    f3.push_back({"b", 1, true});
    f3.push_back({"c", 1, true});
    const auto bad_f3 = validate_conditions(FamilyId::F3, F, f3);
    EXPECT_FALSE(bad_f3);

    ParamList f11 = ints({{"s", 2}});
    f11.push_back({"alpha", static_cast<long long>(F.exp(1)), true});
    f11.push_back({"beta", static_cast<long long>(F.exp(1)), true});
    f11.push_back({"gamma_1", 0, true});
    f11.push_back({"gamma_2", 0, true});
    const auto bad_f11 = validate_conditions(FamilyId::F11, F, f11);
    EXPECT_FALSE(bad_f11);
    EXPECT_EQ(bad_f11.reason, "s odd");

    EXPECT_FALSE(validate_conditions(FamilyId::F5, F, {{"a", 0, true}}));
}

TEST(Families, EveryEnumeratedInstanceIsApnWithMatchingDegree) {
    for (unsigned n = 6; n <= 9; ++n) {
        const FieldSpec F = make_field(n);
        for (auto f : kAllFamilies) {
            if (!family_applicable(f, n) || f == FamilyId::F11) continue;
            EnumStats stats;
            const auto all = enumerate_all(f, F, EnumStrategy::exhaustive(), &stats);
            EXPECT_EQ(stats.non_apn, 0U) << family_name(f) << " n=" << n;
            EXPECT_EQ(stats.emitted, all.size());
            std::size_t checked = 0;
            for (const auto& inst : all) {
                if (checked++ % 97 != 0) continue;
                ASSERT_TRUE(is_apn(inst.function)) << inst.formula;
                if (!is_power_family(f)) {
                    ASSERT_EQ(algebraic_degree(inst.function), 2U) << inst.formula;
                }
                ASSERT_EQ(inst.n, n);
                ASSERT_FALSE(inst.form.empty());
                ASSERT_TRUE(validate_conditions(f, F, inst.params));
            }
        }
    }
}

TEST(Families, KnownInstanceCounts) {
    auto count = [](FamilyId f, unsigned n) {
        return enumerate_all(f, make_field(n), EnumStrategy::exhaustive()).size();
    };
    EXPECT_EQ(count(FamilyId::F3, 6), 336U);
    EXPECT_EQ(count(FamilyId::F4, 6), 1008U);
    EXPECT_EQ(count(FamilyId::F8_10, 6), 468U);
    EXPECT_EQ(count(FamilyId::F5, 7), 127U);
    EXPECT_EQ(count(FamilyId::F5, 9), 511U);
}

TEST(Families, SpectraOfPowerFamilies) {
    for (unsigned n = 5; n <= 11; ++n) {
        const FieldSpec F = make_field(n);
        const std::int64_t half = std::int64_t{1} << (n / 2);
        for (auto f : {FamilyId::Gold, FamilyId::Kasami, FamilyId::Welch, FamilyId::Niho}) {
            if (!family_applicable(f, n)) continue;
            for (const auto& inst : enumerate_all(f, F, EnumStrategy::exhaustive())) {
                const auto expected = n % 2 ? support_of({0, std::int64_t{1} << ((n + 1) / 2)})
                                            : support_of({0, half, 2 * half});
                EXPECT_EQ(walsh_support(inst.function), expected) << inst.formula;
            }
        }
    }
}

TEST(Families, DobbertinAndInverseDegrees) {
    const FieldSpec F = make_field(10);
    const auto dob = enumerate_all(FamilyId::Dobbertin, F, EnumStrategy::exhaustive());
    ASSERT_EQ(dob.size(), 1U);
    EXPECT_TRUE(is_apn(dob[0].function));
    EXPECT_EQ(algebraic_degree(dob[0].function), 5U); // popcount(339)
    const auto inv = enumerate_all(FamilyId::Inverse, make_field(9), EnumStrategy::exhaustive());
    ASSERT_EQ(inv.size(), 1U);
    EXPECT_EQ(algebraic_degree(inv[0].function), 8U);
}

TEST(Families, SampledRunsAreDeterministic) {
    const FieldSpec F = make_field(10);
    auto run = [&](std::uint64_t seed) {
        std::vector<std::string> out;
        enumerate(FamilyId::F4, F, EnumStrategy::sampled(200, seed),
                  [&](FamilyInstance&& inst) { out.push_back(inst.formula); });
        return out;
    };
    const auto a = run(5), b = run(5), c = run(6);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.empty());
    EXPECT_NE(a, c);
}

TEST(Families, N11SliceAndSamplingAtSix) {
    const FieldSpec F = make_field(6);
    EnumStats stats;
    const auto sampled = enumerate_all(FamilyId::F11, F, EnumStrategy::sampled(300, 9), &stats);
    EXPECT_EQ(stats.non_apn, 0U);
    EXPECT_FALSE(sampled.empty());
    for (const auto& inst : sampled) EXPECT_TRUE(is_apn(inst.function)) << inst.formula;
    EnumStats sliced;
    (void)enumerate_all(FamilyId::F11, F, EnumStrategy::sampled(0, 9, true), &sliced);
    EXPECT_GT(sliced.emitted, 0U);
}

TEST(Families, InfeasibleExhaustiveRunIsRefused) {
    try {
        (void)candidates(FamilyId::F11, make_field(14), EnumStrategy::exhaustive());
        FAIL() << "expected StrategyInfeasible";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StrategyInfeasible);
    }
}

TEST(Families, N1And2AtTwelveIsApn) {
    const FieldSpec F = make_field(12);
    EnumStats stats;
    const auto inst = enumerate_all(FamilyId::F1_2, F, EnumStrategy::sampled(16, 4), &stats);
    EXPECT_EQ(stats.non_apn, 0U);
    ASSERT_FALSE(inst.empty());
    for (const auto& i : inst) {
        EXPECT_TRUE(is_apn(i.function)) << i.formula;
        EXPECT_EQ(algebraic_degree(i.function), 2U);
    }
}
