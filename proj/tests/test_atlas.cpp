#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "apnatlas/atlas.hpp"
#include "apnatlas/expr.hpp"

using namespace apn;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(unsigned n, std::optional<std::uint32_t> modulus = std::nullopt) {
    RunConfig c;
    c.n = n;
    c.modulus = modulus;
    for (auto f : kAllFamilies)
        if (family_applicable(f, n) && f != FamilyId::F11 && f != FamilyId::F1_2)
            c.families.push_back({f, EnumStrategy::exhaustive()});
    return c;
}

fs::path temp_file(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("apnatlas-test-" + name);
    fs::remove(p);
    return p;
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

} // namespace

TEST(Atlas, SimplicityOrder) {
    const FieldSpec F = make_field(6);
    auto key = [&](std::vector<SymTerm> t) { return simplicity_key(t); };
    EXPECT_LT(key({{3, 0}}), key({{3, 0}, {9, 0}}));
    EXPECT_LT(key({{6, 0}, {9, 0}, {48, 7}}), key({{6, 1}, {9, 0}, {48, 7}}));
    EXPECT_LT(key({{3, 0}}), key({{6, 0}}));
    EXPECT_EQ(key({{9, 0}, {6, 0}}), key({{6, 0}, {9, 0}}));
    const auto gold = enumerate_all(FamilyId::Gold, F, EnumStrategy::exhaustive());
    ASSERT_FALSE(gold.empty());
    const auto best = std::min_element(gold.begin(), gold.end(), [](const auto& a, const auto& b) {
        return simplicity_key(a) < simplicity_key(b);
    });
    EXPECT_EQ(best->formula, "x^3");
}

TEST(Atlas, ConfigRoundTripAndPresets) {
    RunConfig c = preset_config(10);
    c.cache_path = "/tmp/x.jsonl";
    c.format = "csv";
    const RunConfig back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(config_identity(back).dump(), config_identity(c).dump());
    bool sampled_f11 = false;
    for (const auto& p : c.families) {
        EXPECT_NE(p.family, FamilyId::F1_2);
        if (p.family == FamilyId::F11) sampled_f11 = p.strategy.kind == EnumStrategy::Kind::Sampled;
    }
    EXPECT_TRUE(sampled_f11);
    for (const auto& p : preset_config(9).families) EXPECT_EQ(p.strategy.kind, EnumStrategy::Kind::Exhaustive);
    EXPECT_THROW(config_from_json(nlohmann::json{{"families", {"f99"}}}), Error);
    EXPECT_THROW(config_from_json(nlohmann::json{{"n", "six"}}), Error);
}

TEST(Atlas, EmitFormats) {
    ClassTable empty;
    empty.n = 6;
    empty.modulus = "0x43";
    EXPECT_EQ(emit(empty, "csv"), "class_id,representative,families,member_count\n");
    EXPECT_NE(emit(empty, "markdown").find("| N° | Functions | Families |"), std::string::npos);
    EXPECT_TRUE(nlohmann::json::parse(emit(empty, "json")).is_object());
    try {
        (void)emit(empty, "yaml");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
    }
}

TEST(Atlas, ClassifiesSixIntoThreeClasses) {
    const ClassTable t = classify(small_config(6));
    ASSERT_EQ(t.classes.size(), 3U);
    EXPECT_TRUE(t.undecided.empty());
    EXPECT_EQ(t.audit_failures, 0U);
    EXPECT_EQ(t.classes[0].representative.formula, "x^3");
    const FieldSpec F = make_field(6);
    // Each listed function lands in exactly one class.
    const std::vector<std::string> listed = {"x^3", "x^6+x^9+a^7*x^48", "a*x^3+a^4*x^24+x^17"};
    for (std::size_t i = 0; i < listed.size(); ++i) {
        const Vbf f = expression_function(listed[i], F);
        int hits = 0;
        for (const auto& c : t.classes) hits += ccz_decide(f, c.representative.function).equivalent();
        EXPECT_EQ(hits, 1) << listed[i];
    }
    std::uint64_t members = 0;
    for (const auto& c : t.classes) {
        members += c.member_count;
        EXPECT_EQ(c.audit.size() + 1, c.member_count);
        for (const auto& a : c.audit) EXPECT_TRUE(a.verdict.equivalent());
    }
    std::uint64_t emitted = 0;
    for (const auto& r : t.runs) emitted += r.stats.emitted;
    EXPECT_EQ(members, emitted);
    for (const auto& s : t.separations) EXPECT_TRUE(s.verdict.inequivalent()) << s.first << " " << s.second;
    const auto csv = emit(t, "csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Atlas, DeterministicAndCacheTransparent) {
    const auto path = temp_file("cache.jsonl");
    const RunConfig c = small_config(6);
    const std::string plain = emit(classify(c), "json");
    std::string cold, warm;
    {
        Cache cache(path.string());
        cold = emit(classify(c, &cache), "json");
    }
    const auto size_after_cold = fs::file_size(path);
    {
        Cache cache(path.string());
        EXPECT_GT(cache.verdict_count(), 0U);
        warm = emit(classify(c, &cache), "json");
        ASSERT_TRUE(cache.table(6));
        EXPECT_EQ(render_table(*cache.table(6), "json"), warm);
    }
    EXPECT_EQ(plain, cold);
    EXPECT_EQ(cold, warm);
    EXPECT_GT(fs::file_size(path), size_after_cold); // only the new table record
    fs::remove(path);
}

TEST(Atlas, CacheDropsCorruptTail) {
    const auto path = temp_file("tail.jsonl");
    {
        Cache cache(path.string());
        cache.put_verdict("f", "g", power_power_decide(11, 13, 7));
        cache.put_verdict("f", "h", power_power_decide(3, 5, 7));
    }
    ASSERT_EQ(lines_of(path).size(), 2U);
    {
        std::ofstream out(path, std::ios::app);
        out << "{\"type\": \"verdict\", \"f\": \"tr";
    }
    {
        Cache cache(path.string());
        ASSERT_EQ(cache.warnings().size(), 1U);
        EXPECT_EQ(cache.verdict_count(), 2U);
        ASSERT_TRUE(cache.verdict("f", "g"));
        EXPECT_TRUE(cache.verdict("f", "g")->equivalent());
    }
    EXPECT_EQ(lines_of(path).size(), 2U);
    {
        Cache cache(path.string());
        EXPECT_TRUE(cache.warnings().empty());
    }
    fs::remove(path);
}

TEST(Atlas, CacheRejectsCorruptionBeforeValidData) {
    const auto path = temp_file("mid.jsonl");
    {
        Cache cache(path.string());
        cache.put_verdict("f", "g", power_power_decide(11, 13, 7));
    }
    auto lines = lines_of(path);
    {
        std::ofstream out(path, std::ios::trunc);
        out << "garbage\n" << lines[0] << "\n";
    }
    try {
        Cache cache(path.string());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CacheCorrupt);
    }
    fs::remove(path);
}

TEST(Atlas, ModulusIndependence) {
    for (unsigned n : {6U, 7U}) {
        const ClassTable base = classify(small_config(n));
        for (auto mod : primitive_polynomials(n)) {
            if (mod == kDefaultModulus[n]) continue;
            const ClassTable other = classify(small_config(n, mod));
            ASSERT_EQ(other.classes.size(), base.classes.size()) << n << " " << mod;
            EXPECT_TRUE(other.undecided.empty());
            std::multiset<std::string> a, b;
            for (const auto& c : base.classes) a.insert(profile_key(c.profile));
            for (const auto& c : other.classes) b.insert(profile_key(c.profile));
            EXPECT_EQ(a, b) << n << " " << mod;
        }
    }
}
