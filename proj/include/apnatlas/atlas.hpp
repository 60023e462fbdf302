#pragma once

// Classification pipeline: enumerate the families at one n, partition the
// instances into CCZ classes, pick the simplest member of each class, and
// render the result. Intermediate invariants and verdicts go to an
// append-only cache.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apnatlas/analysis.hpp"
#include "apnatlas/equiv.hpp"
#include "apnatlas/error.hpp"
#include "apnatlas/families.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/hash.hpp"
#include "apnatlas/parallel.hpp"
#include "apnatlas/vbf.hpp"

namespace apn {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct FamilyPlan {
    FamilyId family;
    EnumStrategy strategy;
};

struct RunConfig {
    unsigned n = 6;
    std::optional<std::uint32_t> modulus;
    std::vector<FamilyPlan> families;
    std::uint64_t ea_budget = 0; // 0: default for n
    unsigned rank_cap = 0;       // Γ/Δ-ranks computed iff n <= rank_cap
    bool ortho_walsh = true;
    std::string cache_path;
    std::string format = "markdown";
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

inline nlohmann::json strategy_to_json(const EnumStrategy& s) {
    if (s.kind == EnumStrategy::Kind::Exhaustive) return {{"strategy", "exhaustive"}};
    return {{"strategy", "sampled"}, {"count", s.count}, {"seed", s.seed}, {"zero_gamma_slice", s.zero_gamma_slice}};
}

inline std::string strategy_to_string(const EnumStrategy& s) {
    if (s.kind == EnumStrategy::Kind::Exhaustive) return "Exhaustive";
    return "Sampled(" + std::to_string(s.count) + ", seed " + std::to_string(s.seed) + ")" +
           (s.zero_gamma_slice ? " + gamma=0 slice" : "");
}

/// Everything that determines the table (cache path, format and threads excluded).
inline nlohmann::json config_identity(const RunConfig& c) {
    const FieldSpec F = make_field(c.n, c.modulus);
    auto fams = nlohmann::json::array();
    for (const auto& p : c.families) {
        auto j = strategy_to_json(p.strategy);
        j["family"] = std::string(family_name(p.family));
        fams.push_back(std::move(j));
    }
    return {{"n", c.n},
            {"modulus", F.modulus_hex()},
            {"families", fams},
            {"ea_budget", c.ea_budget ? c.ea_budget : default_ea_budget(c.n)},
            {"rank_cap", c.rank_cap},
            {"ortho_walsh", c.ortho_walsh}};
}

inline nlohmann::json to_json(const RunConfig& c) {
    auto j = config_identity(c);
    j["cache"] = c.cache_path;
    j["format"] = c.format;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

/// Sample sizes used by the presets where exhaustive enumeration is refused or impractical.
inline constexpr std::uint64_t kPresetSamples = 4000;

/// Default preset for n: every applicable family except N°1-2,
/// exhaustive where the raw parameter space allows it.
inline RunConfig preset_config(unsigned n, std::uint64_t seed = 1) {
    RunConfig c;
    c.n = n;
    c.seed = seed;
    const FieldSpec F = make_field(n);
    for (auto f : kAllFamilies) {
        if (f == FamilyId::F1_2 || !family_applicable(f, n)) continue;
        EnumStrategy s = EnumStrategy::exhaustive();
        if (raw_space_size(f, F) > kExhaustiveBudget)
            s = EnumStrategy::sampled(kPresetSamples, seed, false);
        else if (n >= 10 && (f == FamilyId::F4 || f == FamilyId::F11))
            s = EnumStrategy::sampled(kPresetSamples, seed, false);
        c.families.push_back({f, s});
    }
    return c;
}

/// Reads a config document; fields absent from it keep the values of `base`.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
    try {
        if (j.contains("n")) {
            const unsigned n = j.at("n").get<unsigned>();
            if (n != base.n || base.families.empty()) {
                const auto keep = base;
                base = preset_config(n, keep.seed);
                base.cache_path = keep.cache_path;
                base.format = keep.format;
                base.threads = keep.threads;
            }
        }
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("modulus") && !j.at("modulus").is_null()) {
            const auto& m = j.at("modulus");
            base.modulus = m.is_string() ? parse_modulus(m.get<std::string>()) : m.get<std::uint32_t>();
        }
        if (j.contains("families")) {
            base.families.clear();
            for (const auto& f : j.at("families")) {
                FamilyPlan p{parse_family(f.is_string() ? f.get<std::string>() : f.at("family").get<std::string>()),
                             EnumStrategy::exhaustive()};
                if (f.is_object() && f.value("strategy", "exhaustive") == "sampled")
                    p.strategy = EnumStrategy::sampled(f.value("count", kPresetSamples), f.value("seed", base.seed),
                                                       f.value("zero_gamma_slice", false));
                else if (f.is_object() && f.value("strategy", "exhaustive") != "exhaustive")
                    throw Error(ErrorCode::ParseError, "unknown strategy '" + f.value("strategy", "") + "'");
                base.families.push_back(p);
            }
        }
        if (j.contains("ea_budget")) base.ea_budget = j.at("ea_budget").get<std::uint64_t>();
        if (j.contains("rank_cap")) base.rank_cap = j.at("rank_cap").get<unsigned>();
        if (j.contains("ortho_walsh")) base.ortho_walsh = j.at("ortho_walsh").get<bool>();
        if (j.contains("cache")) base.cache_path = j.at("cache").get<std::string>();
        if (j.contains("format")) base.format = j.at("format").get<std::string>();
        if (j.contains("threads")) base.threads = j.at("threads").get<unsigned>();
        return base;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Simplicity order
// ---------------------------------------------------------------------------

struct SimplicityKey {
    std::size_t terms = 0;
    std::vector<std::uint32_t> exponents;
    std::vector<std::uint32_t> coeff_complexity;
    friend auto operator<=>(const SimplicityKey&, const SimplicityKey&) = default;
};

/// (number of terms, increasing exponent list, coefficient logs in exponent order).
inline SimplicityKey simplicity_key(const std::vector<SymTerm>& form) {
    std::vector<SymTerm> sorted(form);
    std::sort(sorted.begin(), sorted.end());
    SimplicityKey k;
    k.terms = sorted.size();
    for (const auto& t : sorted) {
        k.exponents.push_back(t.exponent);
        k.coeff_complexity.push_back(t.coeff_log);
    }
    return k;
}

inline SimplicityKey simplicity_key(const FamilyInstance& inst) { return simplicity_key(inst.form); }

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

/// Identity of a function for caching: SHA-256 over (n, modulus, lookup table).
inline std::string function_hash(const Vbf& F) {
    std::string bytes;
    bytes.reserve(8 + 2 * F.size());
    bytes += std::to_string(F.n()) + ":" + F.spec().modulus_hex() + ":";
    for (auto v : F.lut()) {
        bytes.push_back(static_cast<char>(v & 0xff));
        bytes.push_back(static_cast<char>(v >> 8));
    }
    return sha256_hex(bytes);
}

/// Append-only JSON-lines store: invariant bundles keyed by function hash,
/// verdict memos keyed by ordered hash pairs, and rendered class tables.
class Cache {
public:
    Cache() = default;

    explicit Cache(std::string path) : path_(std::move(path)) { load(); }

    Cache(const Cache&) = delete;
    Cache& operator=(const Cache&) = delete;
    ~Cache() { flush(); }

    [[nodiscard]] bool enabled() const noexcept { return !path_.empty(); }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    std::optional<InvariantBundle> bundle(const std::string& key) const {
        std::lock_guard lock(m_);
        auto it = bundles_.find(key);
        if (it == bundles_.end()) return std::nullopt;
        return it->second;
    }

    void put_bundle(const std::string& key, const InvariantBundle& b) {
        if (!enabled()) return;
        std::lock_guard lock(m_);
        auto [it, fresh] = bundles_.try_emplace(key, b);
        if (!fresh && it->second == b) return;
        it->second = b;
        append({{"type", "bundle"}, {"key", key}, {"bundle", to_json(b)}});
    }

    std::optional<Verdict> verdict(const std::string& f, const std::string& g) const {
        std::lock_guard lock(m_);
        auto it = verdicts_.find(f + "/" + g);
        if (it == verdicts_.end()) return std::nullopt;
        return it->second;
    }

    void put_verdict(const std::string& f, const std::string& g, const Verdict& v) {
        if (!enabled() || v.undecided()) return;
        std::lock_guard lock(m_);
        if (!verdicts_.try_emplace(f + "/" + g, v).second) return;
        append({{"type", "verdict"}, {"f", f}, {"g", g}, {"verdict", to_json(v)}});
    }

    std::optional<nlohmann::json> table(unsigned n) const {
        std::lock_guard lock(m_);
        auto it = tables_.find(n);
        if (it == tables_.end()) return std::nullopt;
        return std::optional<nlohmann::json>(it->second);
    }

    void put_table(unsigned n, const nlohmann::json& table) {
        if (!enabled()) return;
        std::lock_guard lock(m_);
        tables_[n] = table;
        append({{"type", "table"}, {"n", n}, {"table", table}});
    }

    [[nodiscard]] std::size_t verdict_count() const {
        std::lock_guard lock(m_);
        return verdicts_.size();
    }

    void flush() {
        std::lock_guard lock(m_);
        if (out_.is_open()) out_.flush();
    }

    /// All stored Equivalent verdicts, for replay audits.
    std::vector<std::pair<std::pair<std::string, std::string>, Verdict>> equivalences() const {
        std::lock_guard lock(m_);
        std::vector<std::pair<std::pair<std::string, std::string>, Verdict>> out;
        for (const auto& [k, v] : verdicts_)
            if (v.equivalent()) {
                const auto slash = k.find('/');
                out.push_back({{k.substr(0, slash), k.substr(slash + 1)}, v});
            }
        return out;
    }

private:
    void ingest(const nlohmann::json& rec) {
        const auto type = rec.at("type").get<std::string>();
        if (type == "bundle") {
            bundles_[rec.at("key").get<std::string>()] = bundle_from_json(rec.at("bundle"));
        } else if (type == "verdict") {
            verdicts_[rec.at("f").get<std::string>() + "/" + rec.at("g").get<std::string>()] =
                verdict_from_json(rec.at("verdict"));
        } else if (type == "table") {
            tables_[rec.at("n").get<unsigned>()] = rec.at("table");
        } else {
            throw Error(ErrorCode::CacheCorrupt, "unknown record type '" + type + "'");
        }
    }

    void load() {
        namespace fs = std::filesystem;
        if (fs::exists(path_)) {
            std::ifstream in(path_, std::ios::binary);
            std::string line;
            std::uintmax_t good_end = 0, offset = 0;
            std::size_t lineno = 0;
            std::optional<std::size_t> first_bad;
            while (std::getline(in, line)) {
                ++lineno;
                const bool complete = !in.eof();
                offset += line.size() + (complete ? 1 : 0);
                bool ok = complete;
                if (ok) {
                    try {
                        ingest(nlohmann::json::parse(line));
                    } catch (const std::exception&) {
                        ok = false;
                    }
                }
                if (ok && first_bad)
                    throw Error(ErrorCode::CacheCorrupt,
                                path_ + ": unreadable record at line " + std::to_string(*first_bad) + " before valid data");
                if (!ok && !first_bad) first_bad = lineno;
                if (ok) good_end = offset;
            }
            in.close();
            if (first_bad) {
                warnings_.push_back(path_ + ": dropped corrupt tail starting at line " + std::to_string(*first_bad));
                fs::resize_file(path_, good_end);
            }
        } else if (auto parent = fs::path(path_).parent_path(); !parent.empty()) {
            fs::create_directories(parent);
        }
        out_.open(path_, std::ios::app | std::ios::binary);
        if (!out_) throw Error(ErrorCode::CacheCorrupt, "cannot open cache file " + path_);
    }

    void append(const nlohmann::json& rec) { out_ << rec.dump() << '\n'; }

    std::string path_;
    mutable std::mutex m_;
    std::ofstream out_;
    std::vector<std::string> warnings_;
    std::unordered_map<std::string, InvariantBundle> bundles_;
    std::unordered_map<std::string, Verdict> verdicts_;
    std::map<unsigned, nlohmann::json> tables_;
};

// ---------------------------------------------------------------------------
// Class table
// ---------------------------------------------------------------------------

struct AuditEntry {
    FamilyId family;
    ParamList params;
    std::string hash;
    Verdict verdict; // representative -> member
};

struct ClassRecord {
    std::string id;
    FamilyInstance representative;
    std::string rep_hash;
    std::uint64_t member_count = 0;
    std::map<FamilyId, std::uint64_t> families;
    InvariantProfile profile;
    std::vector<AuditEntry> audit;
};

struct PairNote {
    std::string first, second;
    Verdict verdict;
};

struct FamilyRun {
    FamilyId family;
    EnumStrategy strategy;
    EnumStats stats;
};

struct ClassTable {
    unsigned n = 0;
    std::string modulus;
    std::string config_hash;
    std::vector<FamilyRun> runs;
    std::vector<ClassRecord> classes;
    std::vector<PairNote> undecided;   // pairs the ladder could not decide
    std::vector<PairNote> separations; // representative pairs with their separating verdicts
    std::uint64_t audit_failures = 0;

    [[nodiscard]] bool sampled() const {
        return std::any_of(runs.begin(), runs.end(),
                           [](const FamilyRun& r) { return r.strategy.kind == EnumStrategy::Kind::Sampled; });
    }
};

inline std::string param_to_string(const FieldSpec& F, const Param& p) {
    if (!p.element) return std::to_string(p.value);
    if (p.value == 0) return "0";
    return "a^" + std::to_string(F.log(static_cast<Element>(p.value)));
}

inline std::string params_to_string(const FieldSpec& F, const ParamList& params) {
    std::string s;
    for (const auto& p : params) {
        if (!s.empty()) s += ", ";
        s += p.name + "=" + param_to_string(F, p);
    }
    return s;
}

inline nlohmann::json params_to_json(const FieldSpec& F, const ParamList& params) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& p : params) {
        if (p.element)
            j[p.name] = param_to_string(F, p);
        else
            j[p.name] = p.value;
    }
    return j;
}

inline ParamList params_from_json(const FieldSpec& F, const nlohmann::json& j) {
    ParamList out;
    for (const auto& [name, v] : j.items()) {
        if (v.is_string())
            out.push_back({name, static_cast<long long>(coeff_from_string(F, v.get<std::string>())), true});
        else
            out.push_back({name, v.get<long long>(), false});
    }
    return out;
}

inline nlohmann::json to_json(const InvariantProfile& p) {
    auto j = to_json(p.bundle);
    j["is_power"] = p.is_power;
    j["power_class"] = p.power_class ? nlohmann::json(*p.power_class) : nlohmann::json();
    j["quadratic"] = p.quadratic;
    return j;
}

inline std::string instance_label(const FieldSpec& F, FamilyId f, const ParamList& params) {
    return std::string(family_name(f)) + "(" + params_to_string(F, params) + ")";
}

inline nlohmann::json to_json(const ClassTable& t) {
    const FieldSpec F = make_field(t.n, parse_modulus(t.modulus));
    nlohmann::json j;
    j["n"] = t.n;
    j["modulus"] = t.modulus;
    j["config_hash"] = t.config_hash;
    j["coverage"] = t.sampled() ? "sampled" : "exhaustive";
    auto runs = nlohmann::json::array();
    for (const auto& r : t.runs) {
        auto rj = strategy_to_json(r.strategy);
        rj["family"] = std::string(family_name(r.family));
        rj["raw_tuples"] = r.stats.raw_tuples;
        rj["condition_pass"] = r.stats.condition_pass;
        rj["apn"] = r.stats.apn;
        rj["non_apn"] = r.stats.non_apn;
        rj["emitted"] = r.stats.emitted;
        runs.push_back(std::move(rj));
    }
    j["families"] = std::move(runs);
    auto classes = nlohmann::json::array();
    for (const auto& c : t.classes) {
        nlohmann::json cj;
        cj["id"] = c.id;
        const auto& rep = c.representative;
        cj["representative"] = {{"family", std::string(family_name(rep.family))},
                                {"label", family_label(rep.family)},
                                {"params", params_to_json(F, rep.params)},
                                {"formula", rep.formula},
                                {"hash", c.rep_hash},
                                {"function", to_record(rep.function)}};
        cj["member_count"] = c.member_count;
        nlohmann::json fams = nlohmann::json::object();
        for (const auto& [f, count] : c.families) fams[std::string(family_name(f))] = count;
        cj["families"] = std::move(fams);
        cj["profile"] = to_json(c.profile);
        auto audit = nlohmann::json::array();
        for (const auto& a : c.audit)
            audit.push_back({{"family", std::string(family_name(a.family))},
                             {"params", params_to_json(F, a.params)},
                             {"hash", a.hash},
                             {"verdict", to_json(a.verdict)}});
        cj["audit"] = std::move(audit);
        classes.push_back(std::move(cj));
    }
    j["classes"] = std::move(classes);
    auto notes = [](const std::vector<PairNote>& v) {
        auto arr = nlohmann::json::array();
        for (const auto& p : v) arr.push_back({{"first", p.first}, {"second", p.second}, {"verdict", to_json(p.verdict)}});
        return arr;
    };
    j["undecided_pairs"] = notes(t.undecided);
    j["separations"] = notes(t.separations);
    j["audit_failures"] = t.audit_failures;
    return j;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> family_labels(const nlohmann::json& cls) {
    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& [name, count] : cls.at("families").items()) {
        const FamilyId f = parse_family(name);
        order.emplace_back(static_cast<std::size_t>(f), family_label(f));
    }
    std::sort(order.begin(), order.end());
    std::vector<std::string> out;
    for (auto& [i, label] : order) out.push_back(std::move(label));
    return out;
}

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

} // namespace detail

/// Renders a class-table document (as produced by to_json) in csv, json or markdown.
inline std::string render_table(const nlohmann::json& table, const std::string& format) {
    if (format == "json") return table.dump(2) + "\n";
    if (format == "csv") {
        std::string out = "class_id,representative,families,member_count\n";
        if (!table.contains("classes")) return out;
        for (const auto& c : table.at("classes")) {
            out += detail::csv_field(c.at("id").get<std::string>()) + "," +
                   detail::csv_field(c.at("representative").at("formula").get<std::string>()) + "," +
                   detail::csv_field(detail::join(detail::family_labels(c), ";")) + "," +
                   std::to_string(c.at("member_count").get<std::uint64_t>()) + "\n";
        }
        return out;
    }
    if (format == "markdown") {
        std::ostringstream os;
        const auto n = table.value("n", 0U);
        os << "CCZ-inequivalent APN functions over GF(2^" << n << ")";
        if (table.contains("modulus")) os << ", modulus " << table.at("modulus").get<std::string>();
        os << "\n\n| N° | Functions | Families |\n|----|-----------|----------|\n";
        if (table.contains("classes"))
            for (const auto& c : table.at("classes"))
                os << "| " << c.at("id").get<std::string>() << " | `" << c.at("representative").at("formula").get<std::string>()
                   << "` | " << detail::join(detail::family_labels(c), ", ") << " |\n";
        if (table.contains("families")) {
            os << "\nCoverage: " << table.value("coverage", "exhaustive") << "\n";
            for (const auto& r : table.at("families")) {
                os << "- " << family_label(parse_family(r.at("family").get<std::string>())) << ": ";
                if (r.at("strategy") == "sampled")
                    os << "sampled " << r.at("count").get<std::uint64_t>() << " (seed " << r.at("seed").get<std::uint64_t>() << ")";
                else
                    os << "exhaustive";
                os << ", " << r.at("emitted").get<std::uint64_t>() << " instances\n";
            }
        }
        if (table.contains("undecided_pairs") && !table.at("undecided_pairs").empty())
            os << "\nUndecided pairs: " << table.at("undecided_pairs").size() << "\n";
        return os.str();
    }
    throw Error(ErrorCode::UnsupportedFormat, "unknown output format '" + format + "'");
}

inline std::string emit(const ClassTable& table, const std::string& format) {
    if (format != "json" && format != "csv" && format != "markdown")
        throw Error(ErrorCode::UnsupportedFormat, "unknown output format '" + format + "'");
    return render_table(to_json(table), format);
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

struct PendingInstance {
    FamilyId family;
    ParamList params;
    SimplicityKey key;
    std::size_t order = 0; // emission order, for a deterministic tie-break
};

struct Member {
    std::optional<FamilyInstance> instance;
    std::unique_ptr<Prepared> prepared;
    std::string hash;
    std::string bucket;
};

/// Bucket key: CCZ-invariant spectra shared by every function (degree-independent).
inline std::string bucket_key(Prepared& p) {
    nlohmann::json j = {{"d", spectrum_to_json(p.diff_spectrum())}, {"w", spectrum_to_json(p.extended_walsh())}};
    return sha256_hex(j.dump());
}

inline InvariantBundle partial_bundle(Prepared& p) {
    InvariantBundle b;
    b.degree = p.degree();
    b.diff_spectrum = p.diff_spectrum();
    b.extended_walsh = p.extended_walsh();
    if (b.degree == 2) b.ortho_diff_spectrum = p.ortho_spectrum();
    return b;
}

} // namespace detail

inline ClassTable classify(const RunConfig& config, Cache* cache = nullptr, const ProgressFn& progress = {}) {
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    auto log = [&](const std::string& msg) {
        if (!progress) return;
        const double s = std::chrono::duration<double>(clock::now() - started).count();
        std::ostringstream os;
        os << "[" << std::fixed << std::setprecision(1) << s << "s] " << msg;
        progress(os.str());
    };

    const FieldSpec F = make_field(config.n, config.modulus);
    ClassTable table;
    table.n = config.n;
    table.modulus = F.modulus_hex();
    table.config_hash = sha256_hex(config_identity(config).dump());
    const DecideOptions opt{config.ea_budget ? config.ea_budget : default_ea_budget(config.n), config.rank_cap,
                            config.ortho_walsh};
    const ProfileCaps caps{config.rank_cap, config.ortho_walsh};

    // 1. Enumerate, keeping only parameters and simplicity keys.
    std::vector<detail::PendingInstance> pending;
    for (const auto& plan : config.families) {
        FamilyRun run{plan.family, plan.strategy, {}};
        run.stats = enumerate(
            plan.family, F, plan.strategy,
            [&](FamilyInstance&& inst) {
                pending.push_back({inst.family, std::move(inst.params), simplicity_key(inst), pending.size()});
            },
            config.threads);
        log(std::string(family_name(plan.family)) + ": " + std::to_string(run.stats.emitted) + " instances (" +
            strategy_to_string(plan.strategy) + ")");
        if (run.stats.non_apn)
            log("warning: " + std::to_string(run.stats.non_apn) + " condition-passing " +
                std::string(family_name(plan.family)) + " tuples are not APN");
        table.runs.push_back(std::move(run));
    }
    std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.order < b.order;
    });

    // 2. Merge in simplicity order against the current representatives of the bucket.
    std::vector<detail::Member> reps;
    std::map<std::string, std::vector<std::size_t>> buckets;
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < pending.size(); start += kChunk) {
        const std::size_t end = std::min(pending.size(), start + kChunk);
        std::vector<detail::Member> chunk(end - start);
        parallel_for(
            end - start,
            [&](std::size_t k) {
                const auto& p = pending[start + k];
                auto& m = chunk[k];
                m.instance.emplace(make_instance(p.family, F, p.params));
                m.prepared = std::make_unique<Prepared>(m.instance->function);
                m.prepared->assume_apn();
                m.hash = function_hash(m.instance->function);
                if (cache)
                    if (auto b = cache->bundle(m.hash)) m.prepared->seed(*b);
                m.bucket = detail::bucket_key(*m.prepared);
                if (m.prepared->quadratic()) (void)m.prepared->ortho_spectrum();
                if (cache) cache->put_bundle(m.hash, detail::partial_bundle(*m.prepared));
            },
            config.threads);

        for (auto& m : chunk) {
            auto& bucket = buckets[m.bucket];
            bool merged = false;
            for (std::size_t ci : bucket) {
                auto& rep = reps[ci];
                std::optional<Verdict> v = cache ? cache->verdict(rep.hash, m.hash) : std::nullopt;
                if (!v) {
                    v = ccz_decide(*rep.prepared, *m.prepared, opt);
                    if (cache) cache->put_verdict(rep.hash, m.hash, *v);
                }
                if (v->equivalent()) {
                    auto& cls = table.classes[ci];
                    ++cls.member_count;
                    ++cls.families[m.instance->family];
                    cls.audit.push_back({m.instance->family, m.instance->params, m.hash, std::move(*v)});
                    merged = true;
                    break;
                }
                if (v->undecided())
                    table.undecided.push_back({table.classes[ci].id,
                                               instance_label(F, m.instance->family, m.instance->params), std::move(*v)});
            }
            if (merged) continue;
            ClassRecord cls{std::to_string(config.n) + "." + std::to_string(table.classes.size() + 1), *m.instance,
                            m.hash, 1, {{m.instance->family, 1}}, {}, {}};
            log("class " + cls.id + ": " + m.instance->formula + " [" + family_label(m.instance->family) + "]");
            bucket.push_back(reps.size());
            table.classes.push_back(std::move(cls));
            reps.push_back(std::move(m));
        }
        if (end < pending.size() && (start / kChunk) % 8 == 7)
            log(std::to_string(end) + "/" + std::to_string(pending.size()) + " instances, " +
                std::to_string(table.classes.size()) + " classes");
    }
    log(std::to_string(pending.size()) + " instances merged into " + std::to_string(table.classes.size()) + " classes");

    // 3. Full profiles of the representatives and their pairwise separations.
    parallel_for(
        reps.size(),
        [&](std::size_t i) {
            table.classes[i].profile = reps[i].prepared->profile(caps);
            if (cache) cache->put_bundle(reps[i].hash, table.classes[i].profile.bundle);
        },
        config.threads);
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            std::optional<Verdict> v = cache ? cache->verdict(reps[i].hash, reps[j].hash) : std::nullopt;
            if (!v) {
                v = ccz_decide(*reps[i].prepared, *reps[j].prepared, opt);
                if (cache) cache->put_verdict(reps[i].hash, reps[j].hash, *v);
            }
            if (!v->inequivalent())
                table.undecided.push_back({table.classes[i].id, table.classes[j].id, *v});
            table.separations.push_back({table.classes[i].id, table.classes[j].id, std::move(*v)});
        }

    // 4. Replay every merge witness.
    for (const auto& cls : table.classes) {
        std::vector<std::uint8_t> ok(cls.audit.size(), 0);
        parallel_for(
            cls.audit.size(),
            [&](std::size_t k) {
                const auto& a = cls.audit[k];
                const auto member = make_instance(a.family, F, a.params);
                ok[k] = replay_witness(a.verdict, cls.representative.function, member.function) ? 1 : 0;
            },
            config.threads);
        table.audit_failures += static_cast<std::uint64_t>(std::count(ok.begin(), ok.end(), 0));
    }
    log("audit replay: " + std::to_string(table.audit_failures) + " failures");
    if (cache) {
        cache->put_table(config.n, to_json(table));
        cache->flush();
    }
    return table;
}

} // namespace apn
