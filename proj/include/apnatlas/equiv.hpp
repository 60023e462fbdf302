#pragma once

// CCZ-equivalence decisions: the cyclotomic criterion for power pairs,
// invariant separation, a label-guided EA search for quadratic pairs, and the
// ladder combining them into a three-valued verdict.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apnatlas/analysis.hpp"
#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/linalg.hpp"
#include "apnatlas/vbf.hpp"

namespace apn {

// ---------------------------------------------------------------------------
// Cyclotomic classes and power functions
// ---------------------------------------------------------------------------

struct CycloClass {
    std::set<std::uint64_t> members;
    std::uint64_t canonical = 0;
};

inline CycloClass cyclo_class(std::uint64_t d, unsigned n) {
    const std::uint64_t ord = (std::uint64_t{1} << n) - 1;
    if (d < 1 || d > ord) throw Error(ErrorCode::ExponentOutOfRange, "exponent outside [1, 2^n - 1]");
    CycloClass c;
    std::uint64_t v = d % ord;
    for (unsigned j = 0; j < n; ++j) {
        c.members.insert(v == 0 ? ord : v);
        v = (v * 2) % ord;
    }
    c.canonical = *c.members.begin();
    return c;
}

/// Inverse of d modulo 2^n - 1, if gcd(d, 2^n - 1) = 1.
inline std::optional<std::uint64_t> exponent_inverse(std::uint64_t d, unsigned n) {
    const long long ord = static_cast<long long>((std::uint64_t{1} << n) - 1);
    long long r0 = ord, r1 = static_cast<long long>(d % static_cast<std::uint64_t>(ord));
    long long s0 = 0, s1 = 1;
    while (r1 != 0) {
        const long long q = r0 / r1;
        std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
        std::tie(s0, s1) = std::make_pair(s1, s0 - q * s1);
    }
    if (r0 != 1) return std::nullopt;
    const long long inv = ((s0 % ord) + ord) % ord;
    return static_cast<std::uint64_t>(inv == 0 ? ord : inv);
}

/// F(x) = coeff · x^exponent.
struct PowerForm {
    Element coeff = 1;
    std::uint32_t exponent = 1;
};

inline std::optional<PowerForm> detect_power(const Vbf& F) {
    const FieldSpec& K = F.spec();
    if (F(0) != 0 || F(1) == 0) return std::nullopt;
    const Element c = F(1);
    const Element g = FieldSpec::generator();
    const Element at_g = F(g);
    if (at_g == 0) return std::nullopt;
    std::uint32_t d = K.log(K.div(at_g, c));
    if (d == 0) d = K.order();
    const Element step = K.exp(d);
    Element expect = c, x = 1;
    for (std::uint32_t k = 0; k < K.order(); ++k) {
        if (F(x) != expect) return std::nullopt;
        x = K.mul(x, g);
        expect = K.mul(expect, step);
    }
    return PowerForm{c, d};
}

/// APN test for x^d: every derivative row is a scaled copy of row 1.
inline bool is_apn_power(const FieldSpec& K, std::uint32_t d) {
    std::vector<std::uint8_t> seen(K.size(), 0);
    for (Element x = 0; x < K.size(); ++x) {
        const Element v = K.pow(x ^ 1, d) ^ K.pow(x, d);
        if (++seen[v] > 2) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

struct EaWitness {
    AffineMap L1, L2, A; // G = L1 ∘ F ∘ L2 + A
};

/// G(x) = c2·(F(x)/c1)^(2^j), or with `inverse`: G(F(y)/c1) = c2·y^(2^j).
struct CycloWitness {
    std::uint32_t d1 = 0, d2 = 0;
    unsigned j = 0;
    bool inverse = false;
    Element c1 = 1, c2 = 1;
};

struct Verdict {
    enum class Kind { Equivalent, Inequivalent, Undecided };
    Kind kind = Kind::Undecided;
    std::string method; // how the verdict was reached, or the separating invariant
    std::string detail;
    std::optional<EaWitness> ea;
    std::optional<CycloWitness> cyclo; // applied after `ea` when both are present
    bool swapped = false;               // witness maps the second function to the first
    std::uint64_t nodes = 0;            // EA-search nodes spent

    [[nodiscard]] bool equivalent() const noexcept { return kind == Kind::Equivalent; }
    [[nodiscard]] bool inequivalent() const noexcept { return kind == Kind::Inequivalent; }
    [[nodiscard]] bool undecided() const noexcept { return kind == Kind::Undecided; }
};

inline const char* verdict_name(Verdict::Kind k) {
    switch (k) {
    case Verdict::Kind::Equivalent: return "Equivalent";
    case Verdict::Kind::Inequivalent: return "Inequivalent";
    case Verdict::Kind::Undecided: return "Undecided";
    }
    return "?";
}

inline nlohmann::json matrix_to_json(const AffineMap& m) {
    auto cols = nlohmann::json::array();
    for (auto c : m.linear.columns()) cols.push_back(c);
    return {{"columns", cols}, {"constant", m.constant}};
}

inline AffineMap matrix_from_json(const nlohmann::json& j) {
    std::vector<std::uint32_t> cols = j.at("columns").get<std::vector<std::uint32_t>>();
    const auto n = static_cast<unsigned>(cols.size());
    return {BitMatrix(n, std::move(cols)), j.at("constant").get<std::uint32_t>()};
}

inline nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j;
    j["verdict"] = verdict_name(v.kind);
    j["method"] = v.method;
    if (!v.detail.empty()) j["detail"] = v.detail;
    if (v.nodes) j["nodes"] = v.nodes;
    if (v.ea || v.cyclo) {
        nlohmann::json w;
        if (v.ea) w["ea"] = {{"L1", matrix_to_json(v.ea->L1)}, {"L2", matrix_to_json(v.ea->L2)}, {"A", matrix_to_json(v.ea->A)}};
        if (v.cyclo)
            w["cyclo"] = {{"d1", v.cyclo->d1}, {"d2", v.cyclo->d2}, {"j", v.cyclo->j},
                          {"inverse", v.cyclo->inverse}, {"c1", v.cyclo->c1}, {"c2", v.cyclo->c2}};
        if (v.swapped) w["swapped"] = true;
        j["witness"] = std::move(w);
    }
    return j;
}

inline Verdict verdict_from_json(const nlohmann::json& j) {
    try {
        Verdict v;
        const auto kind = j.at("verdict").get<std::string>();
        if (kind == "Equivalent") v.kind = Verdict::Kind::Equivalent;
        else if (kind == "Inequivalent") v.kind = Verdict::Kind::Inequivalent;
        else if (kind == "Undecided") v.kind = Verdict::Kind::Undecided;
        else throw Error(ErrorCode::ParseError, "unknown verdict '" + kind + "'");
        v.method = j.at("method").get<std::string>();
        v.detail = j.value("detail", "");
        v.nodes = j.value("nodes", std::uint64_t{0});
        if (j.contains("witness")) {
            const auto& w = j.at("witness");
            if (w.contains("ea")) {
                const auto& e = w.at("ea");
                v.ea = EaWitness{matrix_from_json(e.at("L1")), matrix_from_json(e.at("L2")), matrix_from_json(e.at("A"))};
            }
            if (w.contains("cyclo")) {
                const auto& c = w.at("cyclo");
                v.cyclo = CycloWitness{c.at("d1").get<std::uint32_t>(), c.at("d2").get<std::uint32_t>(),
                                       c.at("j").get<unsigned>(),     c.at("inverse").get<bool>(),
                                       c.at("c1").get<Element>(),     c.at("c2").get<Element>()};
            }
            v.swapped = w.value("swapped", false);
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

namespace detail {

inline bool replay_cyclo(const CycloWitness& w, const Vbf& F, const Vbf& G) {
    const FieldSpec& K = F.spec();
    if (w.c1 == 0 || w.c2 == 0) return false;
    const Element c1_inv = K.inv(w.c1);
    if (!w.inverse) {
        for (Element x = 0; x < K.size(); ++x)
            if (G(x) != K.mul(w.c2, K.frobenius(K.mul(F(x), c1_inv), w.j))) return false;
        return true;
    }
    for (Element y = 0; y < K.size(); ++y)
        if (G(K.mul(F(y), c1_inv)) != K.mul(w.c2, K.frobenius(y, w.j))) return false;
    return true;
}

} // namespace detail

/// Checks an Equivalent verdict's witness by direct table transformation.
inline bool replay_witness(const Verdict& v, const Vbf& F0, const Vbf& G0) {
    const Vbf& F = v.swapped ? G0 : F0;
    const Vbf& G = v.swapped ? F0 : G0;
    if (!(F.spec() == G.spec()) || (!v.ea && !v.cyclo)) return false;
    std::optional<Vbf> mid;
    if (v.ea) {
        const auto& w = *v.ea;
        if (w.L1.linear.dim() != F.n() || w.L2.linear.dim() != F.n() || w.A.linear.dim() != F.n()) return false;
        if (!w.L1.invertible() || !w.L2.invertible()) return false;
        mid = apply_ea(F, w.L1, w.L2, w.A);
        if (!v.cyclo) return mid->lut() == G.lut();
    }
    return detail::replay_cyclo(*v.cyclo, mid ? *mid : F, G);
}

/// Exact decision for x^d1 versus x^d2 (both APN).
inline Verdict power_power_decide(std::uint32_t d1, std::uint32_t d2, unsigned n) {
    const FieldSpec K = make_field(n);
    for (auto d : {d1, d2}) {
        if (d < 1 || d > K.order()) throw Error(ErrorCode::ExponentOutOfRange, "exponent outside [1, 2^n - 1]");
        if (!is_apn_power(K, d)) throw Error(ErrorCode::NotApnInput, "x^" + std::to_string(d) + " is not APN");
    }
    const std::uint64_t ord = K.order();
    Verdict v;
    auto shift_to = [&](std::uint64_t from, std::uint64_t to) -> std::optional<unsigned> {
        std::uint64_t e = from % ord;
        for (unsigned j = 0; j < n; ++j) {
            if (e == to % ord) return j;
            e = (e * 2) % ord;
        }
        return std::nullopt;
    };
    if (auto j = shift_to(d1, d2)) {
        v.kind = Verdict::Kind::Equivalent;
        v.method = "cyclotomic";
        v.detail = std::to_string(d2) + " = " + std::to_string(d1) + "*2^" + std::to_string(*j) + " mod " + std::to_string(ord);
        v.cyclo = CycloWitness{d1, d2, *j, false, 1, 1};
        return v;
    }
    if (auto inv = exponent_inverse(d1, n)) {
        if (auto j = shift_to(*inv, d2)) {
            v.kind = Verdict::Kind::Equivalent;
            v.method = "cyclotomic-inverse";
            v.detail = std::to_string(d2) + " = " + std::to_string(*inv) + "*2^" + std::to_string(*j) + " mod " +
                       std::to_string(ord) + ", " + std::to_string(*inv) + " = " + std::to_string(d1) + "^-1";
            v.cyclo = CycloWitness{d1, d2, *j, true, 1, 1};
            return v;
        }
    }
    v.kind = Verdict::Kind::Inequivalent;
    v.method = "power-exponent-classes";
    v.detail = "cyclotomic classes of " + std::to_string(cyclo_class(d1, n).canonical) + " and " +
               std::to_string(cyclo_class(d2, n).canonical) + " are unrelated";
    return v;
}

// ---------------------------------------------------------------------------
// Invariant profiles
// ---------------------------------------------------------------------------

struct InvariantProfile {
    InvariantBundle bundle;
    bool is_power = false;
    std::optional<std::uint32_t> power_class; // canonical cyclotomic representative
    bool quadratic = false;
};

struct ProfileCaps {
    unsigned rank_cap = 0;
    bool ortho_walsh = true;
};

inline InvariantProfile invariant_profile(const Vbf& F, const ProfileCaps& caps = {}) {
    if (!is_apn(F)) throw Error(ErrorCode::NotApnInput, "function is not APN");
    InvariantProfile p;
    p.bundle = compute_bundle(F, {caps.rank_cap, caps.ortho_walsh});
    p.quadratic = p.bundle.degree == 2;
    if (auto pw = detect_power(F)) {
        p.is_power = true;
        p.power_class = static_cast<std::uint32_t>(cyclo_class(pw->exponent, F.n()).canonical);
    }
    return p;
}

/// Hash of the CCZ-invariant components only (degree and power flags excluded).
inline std::string profile_key(const InvariantProfile& p) {
    InvariantBundle b = p.bundle;
    b.degree = 0;
    return bundle_hash(b);
}

// ---------------------------------------------------------------------------
// Prepared functions: lazily computed invariants shared across many decisions
// ---------------------------------------------------------------------------

/// Ortho-derivative data of a quadratic APN function used by the EA search.
struct QuadraticData {
    std::vector<Element> f0;                    // F + F(0)
    std::vector<Element> pi;                    // ortho-derivative, pi[0] = 0
    std::vector<std::uint64_t> label;           // per-point label, preserved by the inner map
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_label;
    std::vector<std::vector<std::uint32_t>> fiber; // pi value -> nonzero preimages
    Spectrum ortho_spectrum;
};

inline QuadraticData prepare_quadratic(const Vbf& F) {
    QuadraticData q;
    q.f0 = F.normalized().lut();
    q.pi = ortho_derivative_table(F);
    const auto prof = diff_profile(q.pi);
    q.ortho_spectrum = prof.spectrum;
    q.fiber.assign(F.size(), {});
    for (std::uint32_t a = 1; a < F.size(); ++a) q.fiber[q.pi[a]].push_back(a);
    q.label.assign(F.size(), 0);
    for (std::uint32_t a = 1; a < F.size(); ++a) {
        q.label[a] = hash_combine(prof.row_signature[a], q.fiber[q.pi[a]].size());
        q.by_label[q.label[a]].push_back(a);
    }
    return q;
}

/// A function with lazily computed, thread-safe cached invariants.
class Prepared {
public:
    explicit Prepared(Vbf F) : f_(std::move(F)) {}
    Prepared(const Prepared&) = delete;
    Prepared& operator=(const Prepared&) = delete;

    [[nodiscard]] const Vbf& function() const noexcept { return f_; }

    unsigned degree() {
        std::lock_guard lock(m_);
        if (!degree_) degree_ = algebraic_degree(f_);
        return *degree_;
    }
    bool quadratic() { return degree() == 2; }

    std::optional<PowerForm> power() {
        std::lock_guard lock(m_);
        if (!power_checked_) {
            power_ = detect_power(f_);
            power_checked_ = true;
        }
        return power_;
    }

    const Spectrum& diff_spectrum() {
        std::lock_guard lock(m_);
        if (!diff_) diff_ = apn::diff_spectrum(f_);
        return *diff_;
    }

    const Spectrum& extended_walsh() {
        const bool quad = quadratic();
        std::lock_guard lock(m_);
        if (!walsh_) walsh_ = quad ? extended_walsh_spectrum_quadratic(f_) : extended_walsh_spectrum(f_);
        return *walsh_;
    }

    /// Records that F is APN, which fixes its differential spectrum.
    void assume_apn() {
        std::lock_guard lock(m_);
        const std::uint64_t half = static_cast<std::uint64_t>(f_.size() - 1) * f_.size() / 2;
        diff_ = Spectrum{{0, half}, {2, half}};
    }

    /// Requires quadratic APN.
    const QuadraticData& quad() {
        std::lock_guard lock(m_);
        if (!quad_) {
            quad_ = std::make_unique<QuadraticData>(prepare_quadratic(f_));
            ortho_spectrum_ = quad_->ortho_spectrum;
        }
        return *quad_;
    }

    const Spectrum& ortho_spectrum() {
        {
            std::lock_guard lock(m_);
            if (ortho_spectrum_) return *ortho_spectrum_;
        }
        return quad().ortho_spectrum;
    }

    const Spectrum& ortho_walsh() {
        const auto& q = quad();
        std::lock_guard lock(m_);
        if (!ortho_walsh_) ortho_walsh_ = extended_walsh_spectrum(Vbf(f_.spec(), q.pi));
        return *ortho_walsh_;
    }

    std::uint64_t gamma_rank(unsigned cap) {
        std::lock_guard lock(m_);
        if (!gamma_) gamma_ = apn::gamma_rank(f_, cap);
        return *gamma_;
    }

    std::uint64_t delta_rank(unsigned cap) {
        std::lock_guard lock(m_);
        if (!delta_) delta_ = apn::delta_rank(f_, cap);
        return *delta_;
    }

    /// Seeds cached invariants computed elsewhere (e.g. loaded from a cache).
    void seed(const InvariantBundle& b) {
        std::lock_guard lock(m_);
        degree_ = b.degree;
        diff_ = b.diff_spectrum;
        walsh_ = b.extended_walsh;
        if (b.ortho_diff_spectrum) ortho_spectrum_ = b.ortho_diff_spectrum;
        if (b.ortho_extended_walsh) ortho_walsh_ = b.ortho_extended_walsh;
        if (b.gamma_rank) gamma_ = b.gamma_rank;
        if (b.delta_rank) delta_ = b.delta_rank;
    }

    InvariantBundle bundle(const ProfileCaps& caps) {
        InvariantBundle b;
        b.degree = degree();
        b.diff_spectrum = diff_spectrum();
        b.extended_walsh = extended_walsh();
        if (b.degree == 2) {
            b.ortho_diff_spectrum = ortho_spectrum();
            if (caps.ortho_walsh) b.ortho_extended_walsh = ortho_walsh();
        }
        if (f_.n() <= caps.rank_cap) {
            b.gamma_rank = gamma_rank(caps.rank_cap);
            b.delta_rank = delta_rank(caps.rank_cap);
        }
        return b;
    }

    InvariantProfile profile(const ProfileCaps& caps) {
        InvariantProfile p;
        p.bundle = bundle(caps);
        p.quadratic = p.bundle.degree == 2;
        if (auto pw = power()) {
            p.is_power = true;
            p.power_class = static_cast<std::uint32_t>(cyclo_class(pw->exponent, f_.n()).canonical);
        }
        return p;
    }

private:
    Vbf f_;
    std::mutex m_;
    std::optional<unsigned> degree_;
    bool power_checked_ = false;
    std::optional<PowerForm> power_;
    std::optional<Spectrum> diff_, walsh_, ortho_spectrum_, ortho_walsh_;
    std::unique_ptr<QuadraticData> quad_;
    std::optional<std::uint64_t> gamma_, delta_;
};

// ---------------------------------------------------------------------------
// EA search for quadratic pairs
// ---------------------------------------------------------------------------

inline std::uint64_t default_ea_budget(unsigned n) { return n <= 8 ? 10'000'000ULL : 1'000'000ULL; }

namespace detail {

// Searches linear L (on G's side), L1, A with G0 = L1∘F0∘L + A. With π the
// ortho-derivatives, π_G = M∘π_F∘L for the invertible M = (L1*)^-1, so each
// new point x of span(L's basis) must satisfy label_G(x) = label_F(L x) and
// extend M consistently; bilinear forms must extend L1 consistently.
class EaSearch {
public:
    EaSearch(const QuadraticData& f, const QuadraticData& g, unsigned n, std::uint64_t budget)
        : f_(f), g_(g), n_(n), N_(std::uint32_t{1} << n), budget_(budget), lmap_(N_, kUnset), used_(N_, 0),
          gclass_(N_, nullptr) {
        for (std::uint32_t x = 1; x < N_; ++x) {
            auto it = f_.by_label.find(g_.label[x]);
            if (it != f_.by_label.end()) gclass_[x] = &it->second;
        }
    }

    std::optional<std::pair<BitMatrix, BitMatrix>> run() {
        for (std::uint32_t x = 1; x < N_; ++x)
            if (!gclass_[x]) return std::nullopt;
        span_g_.push_back(0);
        span_f_.push_back(0);
        lmap_[0] = 0;
        used_[0] = 1;
        if (dfs(PartialLinearMap(n_), PartialLinearMap(n_))) return result_;
        return std::nullopt;
    }

    [[nodiscard]] std::uint64_t nodes() const noexcept { return nodes_; }
    [[nodiscard]] bool exhausted_budget() const noexcept { return out_of_budget_; }
    [[nodiscard]] const BitMatrix& affine_part() const noexcept { return linear_part_; }

private:
    static constexpr std::uint32_t kUnset = 0xffffffffU;

    static std::uint32_t bil(const std::vector<Element>& t, std::uint32_t u, std::uint32_t v) {
        return t[u ^ v] ^ t[u] ^ t[v];
    }

    bool complete(const PartialLinearMap& L1map) {
        BitMatrix L = BitMatrix::from_map(n_, [this](std::uint32_t e) { return lmap_[e]; });
        if (L1map.rank() != n_) return false;
        BitMatrix L1 = L1map.matrix();
        const auto t1 = L1.table();
        std::vector<std::uint32_t> a(N_);
        for (std::uint32_t x = 0; x < N_; ++x) a[x] = g_.f0[x] ^ t1[f_.f0[lmap_[x]]];
        BitMatrix A = BitMatrix::from_map(n_, [&](std::uint32_t e) { return a[e]; });
        if (A.table() != a) return false;
        result_ = {L1, L};
        linear_part_ = A;
        return true;
    }

    bool dfs(const PartialLinearMap& M, const PartialLinearMap& L1map) {
        const unsigned k = static_cast<unsigned>(basis_g_.size());
        if (k == n_) return complete(L1map);

        // Preimages under M of its known range; a point whose ortho-derivative
        // value is in that range has its image confined to one fiber of π_F.
        std::vector<std::uint32_t> pre(N_, kUnset);
        M.fill_preimages(pre);

        // Pick the unassigned point with the fewest candidate images.
        std::uint32_t x = 0;
        const std::vector<std::uint32_t>* best = nullptr;
        for (std::uint32_t c = 1; c < N_; ++c) {
            if (lmap_[c] != kUnset) continue;
            const std::uint32_t u = pre[g_.pi[c]];
            const auto* cand = u != kUnset ? &f_.fiber[u] : gclass_[c];
            if (cand->empty()) return false;
            if (!best || cand->size() < best->size()) {
                best = cand;
                x = c;
                if (cand->size() == 1) break;
            }
        }
        const std::size_t span = span_g_.size();
        const std::vector<std::uint32_t> choices = *best;
        for (std::uint32_t y : choices) {
            if (used_[y] || f_.label[y] != g_.label[x]) continue;
            if (++nodes_ > budget_) {
                out_of_budget_ = true;
                return false;
            }
            PartialLinearMap M2 = M;
            PartialLinearMap L12 = L1map;
            bool ok = true;
            for (std::size_t s = 0; s < span && ok; ++s) {
                const std::uint32_t xs = x ^ span_g_[s];
                const std::uint32_t ys = y ^ span_f_[s];
                ok = g_.label[xs] == f_.label[ys] && M2.add(f_.pi[ys], g_.pi[xs]);
            }
            for (unsigned j = 0; j < k && ok; ++j)
                ok = L12.add(bil(f_.f0, y, basis_f_[j]), bil(g_.f0, x, basis_g_[j]));
            if (!ok) continue;

            for (std::size_t s = 0; s < span; ++s) {
                const std::uint32_t xs = x ^ span_g_[s];
                const std::uint32_t ys = y ^ span_f_[s];
                lmap_[xs] = ys;
                used_[ys] = 1;
                span_g_.push_back(xs);
                span_f_.push_back(ys);
            }
            basis_g_.push_back(x);
            basis_f_.push_back(y);
            if (dfs(M2, L12)) return true;
            basis_g_.pop_back();
            basis_f_.pop_back();
            for (std::size_t s = span; s < span_g_.size(); ++s) {
                lmap_[span_g_[s]] = kUnset;
                used_[span_f_[s]] = 0;
            }
            span_g_.resize(span);
            span_f_.resize(span);
            if (out_of_budget_) return false;
        }
        return false;
    }

    const QuadraticData& f_;
    const QuadraticData& g_;
    unsigned n_;
    std::uint32_t N_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    bool out_of_budget_ = false;
    std::vector<std::uint32_t> lmap_;
    std::vector<std::uint8_t> used_;
    std::vector<const std::vector<std::uint32_t>*> gclass_; // F-points sharing x's label
    std::vector<std::uint32_t> span_g_, span_f_, basis_g_, basis_f_;
    std::pair<BitMatrix, BitMatrix> result_;
    BitMatrix linear_part_;
};

inline Verdict ea_search(const Vbf& F, const Vbf& G, const QuadraticData& qf, const QuadraticData& qg,
                         std::uint64_t budget) {
    Verdict v;
    const unsigned n = F.n();
    if (F.lut() == G.lut()) {
        v.kind = Verdict::Kind::Equivalent;
        v.method = "identical";
        v.ea = EaWitness{AffineMap::identity(n), AffineMap::identity(n), AffineMap::zero(n)};
        return v;
    }
    EaSearch search(qf, qg, n, budget);
    auto found = search.run();
    v.nodes = search.nodes();
    if (found) {
        const auto& [L1, L] = *found;
        v.kind = Verdict::Kind::Equivalent;
        v.method = "ea-search";
        v.ea = EaWitness{AffineMap{L1, 0}, AffineMap{L, 0}, AffineMap{search.affine_part(), L1.apply(F(0)) ^ G(0)}};
    } else if (search.exhausted_budget()) {
        v.kind = Verdict::Kind::Undecided;
        v.method = "ea-search-budget";
        v.detail = "node budget " + std::to_string(budget) + " exhausted";
    } else {
        v.kind = Verdict::Kind::Inequivalent;
        v.method = "ea-search-exhausted";
        v.detail = "no linear equivalence exists (search space exhausted)";
    }
    return v;
}

} // namespace detail

/// Backtracking EA search for quadratic APN F, G.
inline Verdict ea_search_quadratic(const Vbf& F, const Vbf& G, std::uint64_t budget = 0) {
    if (!(F.spec() == G.spec())) throw Error(ErrorCode::PreconditionViolated, "functions over different fields");
    if (!is_quadratic(F) || !is_quadratic(G)) throw Error(ErrorCode::PreconditionViolated, "both functions must be quadratic");
    if (!is_apn_quadratic(F) || !is_apn_quadratic(G)) throw Error(ErrorCode::PreconditionViolated, "both functions must be APN");
    if (budget == 0) budget = default_ea_budget(F.n());
    return detail::ea_search(F, G, prepare_quadratic(F), prepare_quadratic(G), budget);
}

// ---------------------------------------------------------------------------
// Decision ladder
// ---------------------------------------------------------------------------

struct DecideOptions {
    std::uint64_t ea_budget = 0; // 0: default for n
    unsigned rank_cap = 0;       // ranks compared iff n <= rank_cap
    bool ortho_walsh = true;
};

namespace detail {

inline Verdict separated(std::string component, std::string detail = {}) {
    Verdict v;
    v.kind = Verdict::Kind::Inequivalent;
    v.method = std::move(component);
    v.detail = std::move(detail);
    return v;
}

/// Cheap components first; nullopt if they agree.
inline std::optional<Verdict> compare_cheap(Prepared& F, Prepared& G) {
    if (F.diff_spectrum() != G.diff_spectrum())
        return separated("differential-spectrum",
                         spectrum_to_string(F.diff_spectrum()) + " vs " + spectrum_to_string(G.diff_spectrum()));
    if (F.extended_walsh() != G.extended_walsh())
        return separated("extended-walsh-spectrum",
                         spectrum_to_string(F.extended_walsh()) + " vs " + spectrum_to_string(G.extended_walsh()));
    if (F.quadratic() && G.quadratic() && F.ortho_spectrum() != G.ortho_spectrum())
        return separated("ortho-differential-spectrum", spectrum_to_string(F.ortho_spectrum()) + " vs " +
                                                            spectrum_to_string(G.ortho_spectrum()));
    return std::nullopt;
}

inline std::optional<Verdict> compare_expensive(Prepared& F, Prepared& G, const DecideOptions& opt) {
    if (opt.ortho_walsh && F.quadratic() && G.quadratic() && F.ortho_walsh() != G.ortho_walsh())
        return separated("ortho-extended-walsh-spectrum",
                         spectrum_to_string(F.ortho_walsh()) + " vs " + spectrum_to_string(G.ortho_walsh()));
    if (F.function().n() <= opt.rank_cap) {
        if (F.gamma_rank(opt.rank_cap) != G.gamma_rank(opt.rank_cap))
            return separated("gamma-rank", std::to_string(F.gamma_rank(opt.rank_cap)) + " vs " +
                                               std::to_string(G.gamma_rank(opt.rank_cap)));
        if (F.delta_rank(opt.rank_cap) != G.delta_rank(opt.rank_cap))
            return separated("delta-rank", std::to_string(F.delta_rank(opt.rank_cap)) + " vs " +
                                               std::to_string(G.delta_rank(opt.rank_cap)));
    }
    return std::nullopt;
}

/// For x^d of degree > 2: the inverse exponent e when x^e is quadratic. Only
/// then can x^d be CCZ-equivalent to a quadratic function, namely to those
/// EA-equivalent to x^e.
inline std::optional<std::uint32_t> quadratic_inverse(std::uint32_t d, unsigned n) {
    const auto e = exponent_inverse(d, n);
    if (!e) return std::nullopt;
    for (auto m : cyclo_class(*e, n).members)
        if (std::popcount(m) == 2) return static_cast<std::uint32_t>(*e);
    return std::nullopt;
}

} // namespace detail

/// The decision ladder on prepared functions (both assumed APN, same field).
inline Verdict ccz_decide(Prepared& F, Prepared& G, const DecideOptions& opt = {}) {
    const unsigned n = F.function().n();
    const auto pf = F.power();
    const auto pg = G.power();
    if (pf && pg) {
        Verdict v = power_power_decide(pf->exponent, pg->exponent, n);
        if (v.cyclo) {
            v.cyclo->c1 = pf->coeff;
            v.cyclo->c2 = pg->coeff;
        }
        return v;
    }
    if (auto sep = detail::compare_cheap(F, G)) return *sep;

    Verdict searched;
    if (F.quadratic() && G.quadratic()) {
        const std::uint64_t budget = opt.ea_budget ? opt.ea_budget : default_ea_budget(n);
        searched = detail::ea_search(F.function(), G.function(), F.quad(), G.quad(), budget);
        if (!searched.undecided()) return searched;
    } else if ((F.quadratic() && pg && !G.quadratic()) || (G.quadratic() && pf && !F.quadratic())) {
        const bool f_quad = F.quadratic();
        Prepared& Q = f_quad ? F : G;
        const PowerForm pw = f_quad ? *pg : *pf;
        const auto e = detail::quadratic_inverse(pw.exponent, n);
        if (!e)
            return detail::separated("quadratic-vs-nonquadratic-power",
                                     "x^" + std::to_string(pw.exponent) +
                                         " is not quadratic and neither is its compositional inverse");
        Prepared H(power_function(Q.function().spec(), *e));
        H.assume_apn();
        const std::uint64_t budget = opt.ea_budget ? opt.ea_budget : default_ea_budget(n);
        Verdict v = detail::ea_search(Q.function(), H.function(), Q.quad(), H.quad(), budget);
        if (v.equivalent()) {
            v.method = "ea-search-via-inverse";
            v.cyclo = CycloWitness{*e, pw.exponent, 0, true, 1, pw.coeff};
            v.swapped = !f_quad;
            return v;
        }
        if (v.inequivalent()) {
            v.method = "ea-search-via-inverse-exhausted";
            v.detail = "no EA-equivalence with x^" + std::to_string(*e) + ", the inverse of x^" + std::to_string(pw.exponent);
            return v;
        }
        searched = v;
    }
    if (auto sep = detail::compare_expensive(F, G, opt)) {
        sep->nodes = searched.nodes;
        return *sep;
    }
    if (searched.undecided() && !searched.method.empty()) return searched;
    Verdict v;
    v.kind = Verdict::Kind::Undecided;
    v.method = "no-applicable-rule";
    v.detail = "equal profiles, and neither pair is quadratic nor power";
    return v;
}

inline Verdict ccz_decide(const Vbf& F, const Vbf& G, const DecideOptions& opt = {}) {
    if (F.n() != G.n() || !(F.spec() == G.spec()))
        throw Error(ErrorCode::MismatchedDimension, "functions over different fields");
    if (!is_apn(F)) throw Error(ErrorCode::NotApnInput, "first function is not APN");
    if (!is_apn(G)) throw Error(ErrorCode::NotApnInput, "second function is not APN");
    Prepared pf(F), pg(G);
    pf.assume_apn();
    pg.assume_apn();
    return ccz_decide(pf, pg, opt);
}

/// Re-checks a verdict: witnesses replay, separators re-separate.
inline bool verify_verdict(const Verdict& v, const Vbf& F, const Vbf& G, const DecideOptions& opt = {}) {
    if (v.equivalent()) return replay_witness(v, F, G);
    if (v.undecided()) return true;
    Prepared pf(F), pg(G);
    const std::string& m = v.method;
    if (m == "differential-spectrum") return pf.diff_spectrum() != pg.diff_spectrum();
    if (m == "extended-walsh-spectrum") return pf.extended_walsh() != pg.extended_walsh();
    if (m == "ortho-differential-spectrum")
        return pf.quadratic() && pg.quadratic() && pf.ortho_spectrum() != pg.ortho_spectrum();
    if (m == "ortho-extended-walsh-spectrum")
        return pf.quadratic() && pg.quadratic() && pf.ortho_walsh() != pg.ortho_walsh();
    const unsigned cap = std::max(opt.rank_cap, F.n());
    if (m == "gamma-rank") return pf.gamma_rank(cap) != pg.gamma_rank(cap);
    if (m == "delta-rank") return pf.delta_rank(cap) != pg.delta_rank(cap);
    if (m == "power-exponent-classes") {
        const auto a = pf.power(), b = pg.power();
        return a && b && power_power_decide(a->exponent, b->exponent, F.n()).inequivalent();
    }
    if (m == "quadratic-vs-nonquadratic-power" || m == "ea-search-via-inverse-exhausted") {
        const bool f_quad = pf.quadratic();
        Prepared& Q = f_quad ? pf : pg;
        Prepared& P = f_quad ? pg : pf;
        const auto pw = P.power();
        if (!Q.quadratic() || !pw || P.quadratic()) return false;
        const auto e = detail::quadratic_inverse(pw->exponent, F.n());
        if (m == "quadratic-vs-nonquadratic-power") return !e;
        if (!e) return false;
        const Vbf H = power_function(F.spec(), *e);
        const std::uint64_t budget = std::max<std::uint64_t>(v.nodes + 1, default_ea_budget(F.n()));
        return detail::ea_search(Q.function(), H, Q.quad(), prepare_quadratic(H), budget).inequivalent();
    }
    if (m == "ea-search-exhausted") {
        const std::uint64_t budget = std::max<std::uint64_t>(v.nodes + 1, default_ea_budget(F.n()));
        return detail::ea_search(F, G, pf.quad(), pg.quad(), budget).inequivalent();
    }
    return false;
}

} // namespace apn
