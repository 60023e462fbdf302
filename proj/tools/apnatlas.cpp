// Command-line front end: field, analyze, enumerate, compare, classify, table.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "apnatlas/analysis.hpp"
#include "apnatlas/atlas.hpp"
#include "apnatlas/equiv.hpp"
#include "apnatlas/error.hpp"
#include "apnatlas/expr.hpp"
#include "apnatlas/families.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/vbf.hpp"

namespace {

using nlohmann::json;

std::string read_text(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw apn::Error(apn::ErrorCode::InvalidArgument, "cannot read " + path);
    return {std::istreambuf_iterator<char>(in), {}};
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw apn::Error(apn::ErrorCode::ParseError, what + ": " + e.what());
    }
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw apn::Error(apn::ErrorCode::InvalidArgument, "cannot write " + path);
    out << text;
}

std::optional<std::uint32_t> modulus_option(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return apn::parse_modulus(text);
}

// "@path" reads a function record; anything else is an expression in x and a.
apn::Vbf function_argument(const std::string& arg, unsigned n, const std::string& modulus) {
    if (!arg.empty() && arg[0] == '@') {
        auto F = apn::from_record(parse_json(read_text(arg.substr(1)), arg.substr(1)));
        if (n && F.n() != n)
            throw apn::Error(apn::ErrorCode::MismatchedDimension,
                             arg + " has n=" + std::to_string(F.n()) + ", expected " + std::to_string(n));
        return F;
    }
    if (n == 0) throw apn::Error(apn::ErrorCode::InvalidArgument, "--n is required for expression input");
    return apn::expression_function(arg, apn::make_field(n, modulus_option(modulus)));
}

json field_json(const apn::FieldSpec& F) {
    return {{"n", F.n()},
            {"modulus", F.modulus_hex()},
            {"size", F.size()},
            {"generator", "a"},
            {"generator_encoding", apn::FieldSpec::generator()},
            {"primitive", true}};
}

json analysis_json(const apn::Vbf& F, unsigned rank_cap, bool ortho_walsh) {
    const auto bundle = apn::compute_bundle(F, {rank_cap, ortho_walsh});
    json j;
    j["function"] = apn::to_record(F);
    j["differential_uniformity"] = apn::differential_uniformity(F);
    j["apn"] = apn::differential_uniformity(F) == 2;
    j["nonlinearity"] = apn::nonlinearity(F);
    j["ab"] = apn::is_ab(F);
    if (auto p = apn::detect_power(F)) j["power"] = {{"coeff", apn::coeff_to_string(F.spec(), p->coeff)}, {"exponent", p->exponent}};
    j["invariants"] = apn::to_json(bundle);
    j["invariants_hash"] = apn::bundle_hash(bundle);
    return j;
}

std::string verdict_line(const apn::Verdict& v) {
    std::string s = apn::verdict_name(v.kind);
    s += " (" + v.method + ")";
    if (!v.detail.empty()) s += ": " + v.detail;
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classify APN functions over GF(2^n) up to CCZ-equivalence"};
    app.require_subcommand(1);

    // field
    auto* field_cmd = app.add_subcommand("field", "Validate and describe a field GF(2^n)");
    unsigned field_n = 0;
    std::string field_mod;
    bool field_list = false;
    field_cmd->add_option("--n", field_n, "Extension degree")->required()->check(CLI::Range(1U, 16U));
    field_cmd->add_option("--modulus", field_mod, "Modulus as a hex bitmask (default table if omitted)");
    field_cmd->add_flag("--list-primitive", field_list, "List every primitive modulus of degree n");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Print the invariant bundle of a function");
    std::string analyze_file, analyze_expr, analyze_mod;
    unsigned analyze_n = 0, analyze_rank_cap = apn::kDefaultRankCap;
    bool require_apn = false, analyze_no_ortho_walsh = false;
    analyze_cmd->add_option("record", analyze_file, "Function record file ('-' for stdin)");
    analyze_cmd->add_option("--expr", analyze_expr, "Univariate expression in x and a, e.g. 'x^3 + tr(1; x^9)'");
    analyze_cmd->add_option("--n", analyze_n, "Extension degree for --expr")->check(CLI::Range(2U, 16U));
    analyze_cmd->add_option("--modulus", analyze_mod, "Modulus for --expr");
    analyze_cmd->add_option("--rank-cap", analyze_rank_cap, "Compute Gamma/Delta ranks when n <= cap");
    analyze_cmd->add_flag("--no-ortho-walsh", analyze_no_ortho_walsh, "Skip the ortho-derivative Walsh spectrum");
    analyze_cmd->add_flag("--require-apn", require_apn, "Fail with NotApnInput if the function is not APN");

    // enumerate
    auto* enum_cmd = app.add_subcommand("enumerate", "Stream the APN instances of a family as JSON lines");
    unsigned enum_n = 0, enum_threads = 0;
    std::string enum_family, enum_strategy = "exhaustive", enum_mod;
    std::uint64_t enum_count = 1000, enum_seed = 1;
    bool enum_luts = false, enum_zero_slice = false;
    enum_cmd->add_option("--n", enum_n, "Extension degree")->required()->check(CLI::Range(2U, 16U));
    enum_cmd->add_option("--family", enum_family, "Family name (gold, kasami, ..., f11)")->required();
    enum_cmd->add_option("--strategy", enum_strategy, "exhaustive or sampled")
        ->check(CLI::IsMember({"exhaustive", "sampled"}));
    enum_cmd->add_option("--count", enum_count, "Sample size for --strategy sampled");
    enum_cmd->add_option("--seed", enum_seed, "Sampling seed");
    enum_cmd->add_flag("--zero-gamma-slice", enum_zero_slice, "Add the gamma=0 slice to a sampled N°11 run");
    enum_cmd->add_option("--modulus", enum_mod, "Modulus");
    enum_cmd->add_option("--threads", enum_threads, "Worker threads (0: all cores)");
    enum_cmd->add_flag("--luts", enum_luts, "Include the full function record of each instance");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Decide CCZ-equivalence of two functions");
    unsigned cmp_n = 0, cmp_rank_cap = 0;
    std::string cmp_f, cmp_g, cmp_mod;
    std::uint64_t cmp_budget = 0;
    bool cmp_json = false;
    cmp_cmd->add_option("--n", cmp_n, "Extension degree for expressions")->check(CLI::Range(2U, 16U));
    cmp_cmd->add_option("--f", cmp_f, "First function: expression or @record.json")->required();
    cmp_cmd->add_option("--g", cmp_g, "Second function: expression or @record.json")->required();
    cmp_cmd->add_option("--modulus", cmp_mod, "Modulus for expressions");
    cmp_cmd->add_option("--ea-budget", cmp_budget, "Node budget of the EA search (0: default)");
    cmp_cmd->add_option("--rank-cap", cmp_rank_cap, "Use Gamma/Delta ranks when n <= cap");
    cmp_cmd->add_flag("--json", cmp_json, "Print only the verdict document");

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "Partition the family instances at n into CCZ classes");
    unsigned cls_n = 0, cls_threads = 0;
    std::string cls_config = "default", cls_format, cls_cache, cls_out, cls_mod;
    std::optional<std::uint64_t> cls_seed, cls_budget;
    std::optional<unsigned> cls_rank_cap;
    bool cls_quiet = false;
    cls_cmd->add_option("--n", cls_n, "Extension degree (overrides the config)")->check(CLI::Range(2U, 16U));
    cls_cmd->add_option("--config", cls_config, "'default' for the preset at n, or a JSON config file");
    cls_cmd->add_option("--format", cls_format, "markdown, csv or json");
    cls_cmd->add_option("--cache", cls_cache, "JSON-lines cache file");
    cls_cmd->add_option("--out", cls_out, "Output file (stdout if omitted)");
    cls_cmd->add_option("--modulus", cls_mod, "Modulus");
    cls_cmd->add_option("--seed", cls_seed, "Sampling seed");
    cls_cmd->add_option("--ea-budget", cls_budget, "Node budget of the EA search (0: default)");
    cls_cmd->add_option("--rank-cap", cls_rank_cap, "Use Gamma/Delta ranks when n <= cap");
    cls_cmd->add_option("--threads", cls_threads, "Worker threads (0: all cores)");
    cls_cmd->add_flag("--quiet,-q", cls_quiet, "No progress on stderr");

    // table
    auto* table_cmd = app.add_subcommand("table", "Re-render a class table stored in a cache");
    unsigned table_n = 0;
    std::string table_cache, table_format = "markdown", table_out;
    table_cmd->add_option("--n", table_n, "Extension degree")->required();
    table_cmd->add_option("--cache", table_cache, "JSON-lines cache file")->required()->check(CLI::ExistingFile);
    table_cmd->add_option("--format", table_format, "markdown, csv or json");
    table_cmd->add_option("--out", table_out, "Output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*field_cmd) {
            const auto F = apn::make_field(field_n, modulus_option(field_mod));
            json j = field_json(F);
            if (field_list) {
                auto list = json::array();
                for (auto m : apn::primitive_polynomials(field_n)) list.push_back(apn::make_field(field_n, m).modulus_hex());
                j["primitive_moduli"] = std::move(list);
            }
            std::cout << j.dump(2) << "\n";
        } else if (*analyze_cmd) {
            if (analyze_file.empty() == analyze_expr.empty()) {
                std::cerr << "analyze: give exactly one of a record file or --expr\n";
                return 2;
            }
            const apn::Vbf F = analyze_expr.empty()
                                   ? apn::from_record(parse_json(read_text(analyze_file), analyze_file))
                                   : function_argument(analyze_expr, analyze_n, analyze_mod);
            if (require_apn && !apn::is_apn(F))
                throw apn::Error(apn::ErrorCode::NotApnInput,
                                 "differential uniformity " + std::to_string(apn::differential_uniformity(F)));
            std::cout << analysis_json(F, analyze_rank_cap, !analyze_no_ortho_walsh).dump(2) << "\n";
        } else if (*enum_cmd) {
            const auto F = apn::make_field(enum_n, modulus_option(enum_mod));
            const auto family = apn::parse_family(enum_family);
            const auto strategy = enum_strategy == "sampled"
                                      ? apn::EnumStrategy::sampled(enum_count, enum_seed, enum_zero_slice)
                                      : apn::EnumStrategy::exhaustive();
            const auto stats = apn::enumerate(
                family, F, strategy,
                [&](apn::FamilyInstance&& inst) {
                    json j = {{"family", std::string(apn::family_name(inst.family))},
                              {"params", apn::params_to_json(F, inst.params)},
                              {"formula", inst.formula}};
                    if (enum_luts) j["function"] = apn::to_record(inst.function);
                    std::cout << j.dump() << "\n";
                },
                enum_threads);
            std::cerr << "raw " << stats.raw_tuples << ", conditions " << stats.condition_pass << ", apn " << stats.apn
                      << ", emitted " << stats.emitted << ", non-apn " << stats.non_apn << "\n";
        } else if (*cmp_cmd) {
            const auto F = function_argument(cmp_f, cmp_n, cmp_mod);
            const auto G = function_argument(cmp_g, cmp_n ? cmp_n : F.n(), cmp_mod);
            apn::DecideOptions opt;
            opt.ea_budget = cmp_budget ? cmp_budget : apn::default_ea_budget(F.n());
            opt.rank_cap = cmp_rank_cap;
            const auto v = apn::ccz_decide(F, G, opt);
            if (cmp_json) {
                std::cout << apn::to_json(v).dump(2) << "\n";
            } else {
                std::cout << verdict_line(v) << "\n";
                if (v.equivalent())
                    std::cout << "witness replay: " << (apn::replay_witness(v, F, G) ? "ok" : "FAILED") << "\n";
                std::cout << apn::to_json(v).dump(2) << "\n";
            }
        } else if (*cls_cmd) {
            apn::RunConfig config;
            if (cls_config == "default") {
                if (!cls_n) {
                    std::cerr << "classify: --n is required with the default config\n";
                    return 2;
                }
                config = apn::preset_config(cls_n, cls_seed.value_or(1));
            } else {
                json j = parse_json(read_text(cls_config), cls_config);
                if (cls_n) j["n"] = cls_n;
                config = apn::config_from_json(j);
            }
            if (cls_n && cls_n != config.n) config = apn::config_from_json({{"n", cls_n}}, config);
            if (!cls_mod.empty()) config.modulus = apn::parse_modulus(cls_mod);
            if (cls_seed) config.seed = *cls_seed;
            if (cls_budget) config.ea_budget = *cls_budget;
            if (cls_rank_cap) config.rank_cap = *cls_rank_cap;
            if (!cls_format.empty()) config.format = cls_format;
            if (!cls_cache.empty()) config.cache_path = cls_cache;
            if (cls_threads) config.threads = cls_threads;
            // Fail on a bad format before spending minutes on the run.
            (void)apn::render_table(json::object(), config.format);

            std::unique_ptr<apn::Cache> cache;
            if (!config.cache_path.empty()) {
                cache = std::make_unique<apn::Cache>(config.cache_path);
                for (const auto& w : cache->warnings()) std::cerr << "warning: " << w << "\n";
            }
            apn::ProgressFn progress;
            if (!cls_quiet) progress = [](const std::string& s) { std::cerr << s << "\n"; };
            const auto table = apn::classify(config, cache.get(), progress);
            write_output(cls_out, apn::emit(table, config.format));
            if (!table.undecided.empty() || table.audit_failures) {
                std::cerr << "warning: " << table.undecided.size() << " undecided pairs, " << table.audit_failures
                          << " audit failures\n";
            }
        } else if (*table_cmd) {
            apn::Cache cache(table_cache);
            for (const auto& w : cache.warnings()) std::cerr << "warning: " << w << "\n";
            const auto t = cache.table(table_n);
            if (!t) throw apn::Error(apn::ErrorCode::CacheCorrupt, "no table for n=" + std::to_string(table_n) + " in " + table_cache);
            write_output(table_out, apn::render_table(*t, table_format));
        }
    } catch (const apn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
