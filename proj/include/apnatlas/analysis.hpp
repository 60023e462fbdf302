#pragma once

// Differential and linear properties of vectorial Boolean functions, plus the
// auxiliary equivalence invariants (ortho-derivative spectra, Γ/Δ-ranks).
//
// Walsh coefficients use the bitwise dot product on encodings:
//   λ(a, b) = Σ_x (-1)^(b·F(x) + a·x).
// Individual values differ from the trace-form convention by a linear change
// of (a, b); every multiset computed here is identical under either choice.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apnatlas/error.hpp"
#include "apnatlas/field.hpp"
#include "apnatlas/hash.hpp"
#include "apnatlas/linalg.hpp"
#include "apnatlas/vbf.hpp"

namespace apn {

/// Sorted (value, multiplicity) list.
using Spectrum = std::vector<std::pair<std::int64_t, std::uint64_t>>;

inline Spectrum to_spectrum(const std::map<std::int64_t, std::uint64_t>& counts) {
    return {counts.begin(), counts.end()};
}

inline std::string spectrum_to_string(const Spectrum& s) {
    std::string out = "{";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i].first) + "^" + std::to_string(s[i].second);
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// Differential properties
// ---------------------------------------------------------------------------

/// Full difference distribution table, row-major: table[a * 2^n + b].
inline std::vector<std::uint32_t> ddt(const Vbf& F) {
    const std::uint32_t N = F.size();
    std::vector<std::uint32_t> table(static_cast<std::size_t>(N) * N, 0);
    const auto& t = F.lut();
    for (std::uint32_t a = 0; a < N; ++a) {
        auto* row = table.data() + static_cast<std::size_t>(a) * N;
        for (std::uint32_t x = 0; x < N; ++x) ++row[t[x] ^ t[x ^ a]];
    }
    return table;
}

inline std::uint32_t differential_uniformity(const Vbf& F) {
    const std::uint32_t N = F.size();
    const auto table = ddt(F);
    return *std::max_element(table.begin() + N, table.end());
}

namespace detail {

/// Walks the DDT row by row (a != 0) and hands each row's value histogram to
/// `visit(a, values)`, where values lists (entry, multiplicity) in increasing
/// entry order. Pairs {x, x+a} are visited once.
template <typename Visit>
void ddt_row_histograms(const std::vector<Element>& t, Visit&& visit) {
    const std::uint32_t N = static_cast<std::uint32_t>(t.size());
    std::vector<std::uint32_t> row(N, 0), hist(N + 1, 0), touched, values;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    touched.reserve(N);
    for (std::uint32_t a = 1; a < N; ++a) {
        const std::uint32_t high = std::bit_floor(a);
        for (std::uint32_t base = 0; base < N; base += 2 * high)
            for (std::uint32_t x = base; x < base + high; ++x) {
                const std::uint32_t b = t[x] ^ t[x ^ a];
                if (row[b] == 0) touched.push_back(b);
                row[b] += 2;
            }
        for (auto b : touched) {
            if (hist[row[b]]++ == 0) values.push_back(row[b]);
            row[b] = 0;
        }
        std::sort(values.begin(), values.end());
        out.clear();
        out.emplace_back(0, N - static_cast<std::uint32_t>(touched.size()));
        for (auto v : values) {
            out.emplace_back(v, hist[v]);
            hist[v] = 0;
        }
        if (out.front().second == 0) out.erase(out.begin());
        visit(a, out);
        touched.clear();
        values.clear();
    }
}

} // namespace detail

/// Multiset of DDT entries over a != 0 and all b.
inline Spectrum diff_spectrum(const Vbf& F) {
    std::map<std::int64_t, std::uint64_t> counts;
    detail::ddt_row_histograms(F.lut(), [&](std::uint32_t, const auto& values) {
        for (const auto& [v, m] : values) counts[v] += m;
    });
    return to_spectrum(counts);
}

/// APN test that abandons the candidate at the first DDT entry above 2.
inline bool is_apn(const Vbf& F) {
    const std::uint32_t N = F.size();
    const auto& t = F.lut();
    std::vector<std::uint32_t> stamp(N, 0);
    for (std::uint32_t a = 1; a < N; ++a) {
        // Each unordered pair {x, x+a} contributes 2 to one entry, so APN iff
        // the derivative takes each value on at most one pair.
        for (std::uint32_t x = 0; x < N; ++x) {
            if (x > (x ^ a)) continue;
            const Element b = t[x] ^ t[x ^ a];
            if (stamp[b] == a) return false;
            stamp[b] = a;
        }
    }
    return true;
}

/// APN test valid for functions of algebraic degree <= 2: F is APN iff every
/// derivative x ↦ F(x) + F(x+a) + F(a) + F(0) is linear of rank n - 1.
inline bool is_apn_quadratic(const Vbf& F) {
    const unsigned n = F.n();
    const auto& t = F.lut();
    std::uint32_t v[32];
    for (std::uint32_t a = 1; a < F.size(); ++a) {
        for (unsigned j = 0; j < n; ++j) {
            const std::uint32_t e = std::uint32_t{1} << j;
            v[j] = t[a ^ e] ^ t[a] ^ t[e] ^ t[0];
        }
        if (BitMatrix::rank_of(std::span<std::uint32_t>(v, n)) != n - 1) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Walsh transform
// ---------------------------------------------------------------------------

/// In-place fast Walsh–Hadamard transform, n·2^n additions.
template <typename T>
void fwht(std::vector<T>& v) {
    const std::size_t size = v.size();
    for (std::size_t h = 1; h < size; h <<= 1) {
        for (std::size_t i = 0; i < size; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const T x = v[j];
                const T y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
    }
}

/// Walsh spectrum of the Boolean component x ↦ b·F(x), indexed by a.
inline std::vector<std::int32_t> component_walsh(const Vbf& F, Element b) {
    std::vector<std::int32_t> v(F.size());
    for (Element x = 0; x < F.size(); ++x) v[x] = parity(b & F(x)) ? -1 : 1;
    fwht(v);
    return v;
}

/// λ(a, b) for all a, b (b = 0 included), stored as table[b * 2^n + a].
inline std::vector<std::int32_t> walsh_full(const Vbf& F) {
    const std::uint32_t N = F.size();
    std::vector<std::int32_t> table(static_cast<std::size_t>(N) * N);
    for (Element b = 0; b < N; ++b) {
        const auto row = component_walsh(F, b);
        std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(b) * N);
    }
    return table;
}

/// Multiset of |λ(a, b)| over all a and b != 0.
inline Spectrum extended_walsh_spectrum(const Vbf& F) {
    std::map<std::int64_t, std::uint64_t> counts;
    for (Element b = 1; b < F.size(); ++b)
        for (auto v : component_walsh(F, b)) ++counts[std::abs(v)];
    return to_spectrum(counts);
}

/// Multiset of signed λ(a, b) over all a and b != 0.
inline Spectrum walsh_spectrum(const Vbf& F) {
    std::map<std::int64_t, std::uint64_t> counts;
    for (Element b = 1; b < F.size(); ++b)
        for (auto v : component_walsh(F, b)) ++counts[v];
    return to_spectrum(counts);
}

/// Extended Walsh spectrum of a function of degree <= 2 from the radicals of
/// its component bilinear forms: a component whose form has a k-dimensional
/// radical has 2^(n-k) coefficients of magnitude 2^((n+k)/2), the rest zero.
inline Spectrum extended_walsh_spectrum_quadratic(const Vbf& F) {
    const unsigned n = F.n();
    const auto& t = F.lut();
    // bil[i][j] = F(e_i + e_j) + F(e_i) + F(e_j) + F(0)
    std::vector<std::uint32_t> bil(static_cast<std::size_t>(n) * n, 0);
    for (unsigned i = 0; i < n; ++i)
        for (unsigned j = 0; j < n; ++j) {
            const std::uint32_t ei = std::uint32_t{1} << i;
            const std::uint32_t ej = std::uint32_t{1} << j;
            bil[i * n + j] = (i == j) ? 0 : t[ei ^ ej] ^ t[ei] ^ t[ej] ^ t[0];
        }
    std::map<std::int64_t, std::uint64_t> counts;
    std::uint32_t rows[32];
    for (Element b = 1; b < F.size(); ++b) {
        for (unsigned i = 0; i < n; ++i) {
            std::uint32_t r = 0;
            for (unsigned j = 0; j < n; ++j) r |= parity(b & bil[i * n + j]) << j;
            rows[i] = r;
        }
        const unsigned rank = BitMatrix::rank_of(std::span<std::uint32_t>(rows, n));
        const unsigned k = n - rank;
        const std::uint64_t nonzero = std::uint64_t{1} << (n - k);
        counts[std::int64_t{1} << ((n + k) / 2)] += nonzero;
        if (nonzero < F.size()) counts[0] += F.size() - nonzero;
    }
    return to_spectrum(counts);
}

inline std::int64_t max_abs_walsh(const Vbf& F) {
    std::int64_t best = 0;
    for (Element b = 1; b < F.size(); ++b)
        for (auto v : component_walsh(F, b)) best = std::max<std::int64_t>(best, std::abs(v));
    return best;
}

/// 2^(n-1) - max|λ(a, b)| / 2 over all a and b != 0.
inline std::int64_t nonlinearity(const Vbf& F) {
    return (std::int64_t{1} << (F.n() - 1)) - max_abs_walsh(F) / 2;
}

/// n odd and every |λ(a, b)| in {0, 2^((n+1)/2)}.
inline bool is_ab(const Vbf& F) {
    if (F.n() % 2 == 0) return false;
    const std::int64_t peak = std::int64_t{1} << ((F.n() + 1) / 2);
    for (const auto& [v, m] : extended_walsh_spectrum(F))
        if (v != 0 && v != peak) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Ortho-derivative
// ---------------------------------------------------------------------------

/// For quadratic APN F: π(0) = 0 and, for a != 0, π(a) is the unique nonzero
/// element with tr(π(a)·h) = 0 for every h in {F(x)+F(x+a)+F(a)+F(0)}.
/// No degree check here; callers guarantee degree <= 2.
inline std::vector<Element> ortho_derivative_table(const Vbf& F) {
    const unsigned n = F.n();
    const auto& t = F.lut();
    std::vector<Element> pi(F.size(), 0);
    std::uint32_t rows[32];
    for (std::uint32_t a = 1; a < F.size(); ++a) {
        for (unsigned j = 0; j < n; ++j) {
            const std::uint32_t e = std::uint32_t{1} << j;
            rows[j] = t[a ^ e] ^ t[a] ^ t[e] ^ t[0];
        }
        // Reduced row echelon form; pivot = highest bit.
        unsigned r = 0;
        std::uint32_t pivots = 0;
        for (int bit = static_cast<int>(n) - 1; bit >= 0; --bit) {
            unsigned p = r;
            while (p < n && !((rows[p] >> bit) & 1U)) ++p;
            if (p == n) continue;
            std::swap(rows[p], rows[r]);
            for (unsigned i = 0; i < n; ++i)
                if (i != r && ((rows[i] >> bit) & 1U)) rows[i] ^= rows[r];
            pivots |= std::uint32_t{1} << bit;
            ++r;
        }
        if (r != n - 1) throw Error(ErrorCode::NotApn, "derivative in direction " + std::to_string(a) + " has rank " + std::to_string(r));
        const std::uint32_t free_mask = ~pivots & ((std::uint32_t{1} << n) - 1);
        const unsigned free = static_cast<unsigned>(std::countr_zero(free_mask));
        // Dot-product normal w: w_free = 1, w_pivot(row i) = bit `free` of row i.
        std::uint32_t w = std::uint32_t{1} << free;
        for (unsigned i = 0; i < r; ++i) {
            const unsigned pbit = 31U - static_cast<unsigned>(std::countl_zero(rows[i]));
            if ((rows[i] >> free) & 1U) w |= std::uint32_t{1} << pbit;
        }
        if (w == 0) throw Error(ErrorCode::DegenerateImageSet, "empty orthogonal complement");
        pi[a] = F.spec().trace_dual_inverse(w);
    }
    return pi;
}

inline Vbf ortho_derivative(const Vbf& F) {
    if (!is_quadratic(F)) throw Error(ErrorCode::NotQuadratic, "ortho-derivative requires algebraic degree 2");
    return Vbf(F.spec(), ortho_derivative_table(F));
}

/// Differential spectrum of a table together with a per-point signature: the
/// hash of the multiset of DDT entries in row a. Row multisets are preserved
/// by x ↦ M(T(L x)) for linear bijections L, M, so the signature of a must
/// equal the signature of L(a) under any such equivalence.
struct DiffProfile {
    Spectrum spectrum;
    std::vector<std::uint64_t> row_signature;
};

inline DiffProfile diff_profile(const std::vector<Element>& t) {
    DiffProfile out;
    out.row_signature.assign(t.size(), 0);
    std::map<std::int64_t, std::uint64_t> counts;
    detail::ddt_row_histograms(t, [&](std::uint32_t a, const auto& values) {
        std::uint64_t sig = 0x243f6a8885a308d3ULL;
        for (const auto& [v, m] : values) {
            counts[v] += m;
            sig = hash_combine(sig, (static_cast<std::uint64_t>(v) << 32) | m);
        }
        out.row_signature[a] = sig;
    });
    out.spectrum = to_spectrum(counts);
    return out;
}

// ---------------------------------------------------------------------------
// Γ-rank and Δ-rank
// ---------------------------------------------------------------------------

inline constexpr unsigned kDefaultRankCap = 8;

namespace detail {

/// GF(2)-rank of the 2^(2n)-square matrix whose row (u, v) is the indicator of
/// S + (u, v), S given as a list of points of GF(2)^(2n) encoded as (x << n) | y.
inline std::size_t translate_rank(unsigned n, const std::vector<std::uint32_t>& set) {
    const std::size_t size = std::size_t{1} << (2 * n);
    StreamingRank acc(size);
    std::vector<std::uint64_t> row(acc.words());
    for (std::uint32_t shift = 0; shift < size; ++shift) {
        std::fill(row.begin(), row.end(), 0);
        for (auto s : set) {
            const std::uint32_t p = s ^ shift;
            row[p >> 6] |= std::uint64_t{1} << (p & 63U);
        }
        acc.add(row);
    }
    return acc.rank();
}

inline void check_rank_cap(unsigned n, unsigned cap) {
    if (n > cap)
        throw Error(ErrorCode::DimensionCapExceeded,
                    "rank of a 2^" + std::to_string(2 * n) + "-sided matrix refused (cap n <= " + std::to_string(cap) +
                        "; needs about " + std::to_string((std::uint64_t{1} << (4 * n)) / 8 / (1 << 20)) + " MiB dense)");
}

} // namespace detail

/// Rank of the incidence structure of the graph G_F = {(x, F(x))}.
inline std::size_t gamma_rank(const Vbf& F, unsigned cap = kDefaultRankCap) {
    detail::check_rank_cap(F.n(), cap);
    std::vector<std::uint32_t> graph;
    graph.reserve(F.size());
    for (Element x = 0; x < F.size(); ++x) graph.push_back((x << F.n()) | F(x));
    return detail::translate_rank(F.n(), graph);
}

/// Rank of the incidence structure of D_F = {(a, F(x)+F(x+a)) : a != 0}.
inline std::size_t delta_rank(const Vbf& F, unsigned cap = kDefaultRankCap) {
    detail::check_rank_cap(F.n(), cap);
    const std::uint32_t N = F.size();
    std::vector<std::uint8_t> present(static_cast<std::size_t>(N) * N, 0);
    std::vector<std::uint32_t> set;
    for (Element a = 1; a < N; ++a)
        for (Element x = 0; x < N; ++x) {
            const std::uint32_t p = (a << F.n()) | (F(x) ^ F(x ^ a));
            if (!present[p]) {
                present[p] = 1;
                set.push_back(p);
            }
        }
    return detail::translate_rank(F.n(), set);
}

// ---------------------------------------------------------------------------
// Invariant bundle
// ---------------------------------------------------------------------------

struct BundleOptions {
    unsigned rank_cap = 0;          // ranks computed iff n <= rank_cap
    bool ortho_walsh = true;        // ortho-derivative extended Walsh spectrum
};

struct InvariantBundle {
    Spectrum diff_spectrum;
    Spectrum extended_walsh;
    unsigned degree = 0;
    std::optional<Spectrum> ortho_diff_spectrum;
    std::optional<Spectrum> ortho_extended_walsh;
    std::optional<std::uint64_t> gamma_rank;
    std::optional<std::uint64_t> delta_rank;

    friend bool operator==(const InvariantBundle&, const InvariantBundle&) = default;
};

inline nlohmann::json spectrum_to_json(const Spectrum& s) {
    auto arr = nlohmann::json::array();
    for (const auto& [v, m] : s) arr.push_back({v, m});
    return arr;
}

inline Spectrum spectrum_from_json(const nlohmann::json& j) {
    Spectrum s;
    for (const auto& e : j) s.emplace_back(e.at(0).get<std::int64_t>(), e.at(1).get<std::uint64_t>());
    return s;
}

/// Canonical record with stable (sorted) field order.
inline nlohmann::json to_json(const InvariantBundle& b) {
    nlohmann::json j;
    j["degree"] = b.degree;
    j["diff_spectrum"] = spectrum_to_json(b.diff_spectrum);
    j["extended_walsh"] = spectrum_to_json(b.extended_walsh);
    j["ortho_diff_spectrum"] = b.ortho_diff_spectrum ? spectrum_to_json(*b.ortho_diff_spectrum) : nlohmann::json();
    j["ortho_extended_walsh"] = b.ortho_extended_walsh ? spectrum_to_json(*b.ortho_extended_walsh) : nlohmann::json();
    j["gamma_rank"] = b.gamma_rank ? nlohmann::json(*b.gamma_rank) : nlohmann::json();
    j["delta_rank"] = b.delta_rank ? nlohmann::json(*b.delta_rank) : nlohmann::json();
    return j;
}

inline InvariantBundle bundle_from_json(const nlohmann::json& j) {
    InvariantBundle b;
    b.degree = j.at("degree").get<unsigned>();
    b.diff_spectrum = spectrum_from_json(j.at("diff_spectrum"));
    b.extended_walsh = spectrum_from_json(j.at("extended_walsh"));
    if (!j.at("ortho_diff_spectrum").is_null()) b.ortho_diff_spectrum = spectrum_from_json(j.at("ortho_diff_spectrum"));
    if (!j.at("ortho_extended_walsh").is_null()) b.ortho_extended_walsh = spectrum_from_json(j.at("ortho_extended_walsh"));
    if (!j.at("gamma_rank").is_null()) b.gamma_rank = j.at("gamma_rank").get<std::uint64_t>();
    if (!j.at("delta_rank").is_null()) b.delta_rank = j.at("delta_rank").get<std::uint64_t>();
    return b;
}

/// SHA-256 of the canonical record.
inline std::string bundle_hash(const InvariantBundle& b) { return sha256_hex(to_json(b).dump()); }

inline InvariantBundle compute_bundle(const Vbf& F, const BundleOptions& opt = {}) {
    InvariantBundle b;
    b.degree = algebraic_degree(F);
    b.diff_spectrum = diff_spectrum(F);
    if (b.degree == 2) {
        b.extended_walsh = extended_walsh_spectrum_quadratic(F);
        std::vector<Element> pi;
        try {
            pi = ortho_derivative_table(F);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotApn) throw;
        }
        if (!pi.empty()) {
            b.ortho_diff_spectrum = diff_profile(pi).spectrum;
            if (opt.ortho_walsh) b.ortho_extended_walsh = extended_walsh_spectrum(Vbf(F.spec(), std::move(pi)));
        }
    } else {
        b.extended_walsh = extended_walsh_spectrum(F);
    }
    if (F.n() <= opt.rank_cap) {
        b.gamma_rank = gamma_rank(F, opt.rank_cap);
        b.delta_rank = delta_rank(F, opt.rank_cap);
    }
    return b;
}

} // namespace apn
