#pragma once

// GF(2) linear algebra on short vectors (n <= 16 bits, stored in uint32) and
// a bitsliced rank routine for large dense matrices.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apnatlas/error.hpp"

namespace apn {

inline unsigned parity(std::uint32_t v) noexcept { return static_cast<unsigned>(std::popcount(v) & 1); }

/// Linear map GF(2)^n -> GF(2)^n stored by columns: column j is the image of e_j.
class BitMatrix {
public:
    BitMatrix() = default;
    explicit BitMatrix(unsigned n) : n_(n), cols_(n, 0) {}
    BitMatrix(unsigned n, std::vector<std::uint32_t> columns) : n_(n), cols_(std::move(columns)) {
        if (cols_.size() != n_) throw Error(ErrorCode::InvalidArgument, "column count differs from dimension");
    }

    static BitMatrix identity(unsigned n) {
        BitMatrix m(n);
        for (unsigned j = 0; j < n; ++j) m.cols_[j] = std::uint32_t{1} << j;
        return m;
    }

    /// Matrix of an arbitrary linear map given as a callable on basis vectors.
    template <typename Fn>
    static BitMatrix from_map(unsigned n, Fn&& fn) {
        BitMatrix m(n);
        for (unsigned j = 0; j < n; ++j) m.cols_[j] = fn(std::uint32_t{1} << j);
        return m;
    }

    [[nodiscard]] unsigned dim() const noexcept { return n_; }
    [[nodiscard]] std::span<const std::uint32_t> columns() const noexcept { return cols_; }
    [[nodiscard]] std::uint32_t column(unsigned j) const { return cols_.at(j); }
    void set_column(unsigned j, std::uint32_t v) { cols_.at(j) = v; }

    [[nodiscard]] std::uint32_t apply(std::uint32_t x) const noexcept {
        std::uint32_t r = 0;
        while (x != 0) {
            r ^= cols_[static_cast<unsigned>(std::countr_zero(x))];
            x &= x - 1;
        }
        return r;
    }

    /// Full lookup table of the map over all 2^n inputs (Gray-code style fill).
    [[nodiscard]] std::vector<std::uint32_t> table() const {
        std::vector<std::uint32_t> t(std::size_t{1} << n_, 0);
        for (std::uint32_t x = 1; x < t.size(); ++x) t[x] = t[x & (x - 1)] ^ cols_[static_cast<unsigned>(std::countr_zero(x))];
        return t;
    }

    /// this ∘ other
    [[nodiscard]] BitMatrix compose(const BitMatrix& other) const {
        BitMatrix m(n_);
        for (unsigned j = 0; j < n_; ++j) m.cols_[j] = apply(other.cols_[j]);
        return m;
    }

    [[nodiscard]] BitMatrix transpose() const {
        BitMatrix m(n_);
        for (unsigned j = 0; j < n_; ++j)
            for (unsigned i = 0; i < n_; ++i)
                if ((cols_[j] >> i) & 1U) m.cols_[i] |= std::uint32_t{1} << j;
        return m;
    }

    [[nodiscard]] unsigned rank() const {
        std::vector<std::uint32_t> v(cols_);
        return rank_of(v);
    }

    [[nodiscard]] bool invertible() const { return rank() == n_; }

    [[nodiscard]] BitMatrix inverse() const {
        // Solve by Gauss-Jordan on [cols | identity] with column vectors as rows of the transpose.
        const BitMatrix t = transpose();
        std::vector<std::uint32_t> rows(t.cols_);
        std::vector<std::uint32_t> aug(n_);
        for (unsigned i = 0; i < n_; ++i) aug[i] = std::uint32_t{1} << i;
        for (unsigned c = 0; c < n_; ++c) {
            unsigned p = c;
            while (p < n_ && !((rows[p] >> c) & 1U)) ++p;
            if (p == n_) throw Error(ErrorCode::SingularMap, "matrix is not invertible");
            std::swap(rows[p], rows[c]);
            std::swap(aug[p], aug[c]);
            for (unsigned r = 0; r < n_; ++r) {
                if (r != c && ((rows[r] >> c) & 1U)) {
                    rows[r] ^= rows[c];
                    aug[r] ^= aug[c];
                }
            }
        }
        // rows = I now; aug holds rows of (A^T)^{-1} = (A^{-1})^T.
        return BitMatrix(n_, aug).transpose();
    }

    static unsigned rank_of(std::span<std::uint32_t> vectors) {
        unsigned r = 0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            std::uint32_t v = vectors[i];
            if (v == 0) continue;
            const std::uint32_t pivot = std::uint32_t{1} << (31 - std::countl_zero(v));
            ++r;
            for (std::size_t k = i + 1; k < vectors.size(); ++k)
                if (vectors[k] & pivot) vectors[k] ^= v;
        }
        return r;
    }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    unsigned n_ = 0;
    std::vector<std::uint32_t> cols_;
};

/// x ↦ linear(x) + constant.
struct AffineMap {
    BitMatrix linear;
    std::uint32_t constant = 0;

    static AffineMap identity(unsigned n) { return {BitMatrix::identity(n), 0}; }
    static AffineMap zero(unsigned n) { return {BitMatrix(n), 0}; }

    [[nodiscard]] std::uint32_t apply(std::uint32_t x) const noexcept { return linear.apply(x) ^ constant; }
    [[nodiscard]] bool invertible() const { return linear.invertible(); }

    friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

/// Echelon basis of a subspace of GF(2)^n that remembers, for each stored
/// vector, a tag vector carried through the same row operations. Used to
/// build partial linear maps u ↦ v incrementally.
class TaggedEchelon {
public:
    explicit TaggedEchelon(unsigned n = 0) : n_(n) { pivot_.fill(-1); }

    /// Reduces (v, tag) against the basis; returns the residuals.
    [[nodiscard]] std::pair<std::uint32_t, std::uint32_t> reduce(std::uint32_t v, std::uint32_t tag) const noexcept {
        for (int bit = 31 - std::countl_zero(v | 1U); bit >= 0; --bit) {
            const int row = pivot_[static_cast<std::size_t>(bit)];
            if (row >= 0 && ((v >> bit) & 1U)) {
                v ^= rows_[static_cast<std::size_t>(row)].first;
                tag ^= rows_[static_cast<std::size_t>(row)].second;
            }
        }
        return {v, tag};
    }

    /// Adds a reduced, nonzero vector with its tag.
    void insert_reduced(std::uint32_t v, std::uint32_t tag) {
        const int bit = 31 - std::countl_zero(v);
        pivot_[static_cast<std::size_t>(bit)] = static_cast<int>(rows_.size());
        rows_.emplace_back(v, tag);
    }

    [[nodiscard]] unsigned rank() const noexcept { return static_cast<unsigned>(rows_.size()); }
    [[nodiscard]] unsigned dim() const noexcept { return n_; }
    [[nodiscard]] const std::vector<std::pair<std::uint32_t, std::uint32_t>>& rows() const noexcept { return rows_; }

private:
    unsigned n_;
    std::array<int, 32> pivot_{};
    std::vector<std::pair<std::uint32_t, std::uint32_t>> rows_;
};

/// Partial invertible linear map built from constraint pairs u ↦ v.
/// add() rejects a pair that is inconsistent with linearity or with
/// injectivity of the eventual map.
class PartialLinearMap {
public:
    explicit PartialLinearMap(unsigned n = 0) : n_(n), fwd_(n), bwd_(n) {}

    /// Returns false (leaving the map unchanged) on contradiction.
    bool add(std::uint32_t u, std::uint32_t v) {
        const auto [ru, rv] = fwd_.reduce(u, v);
        const auto [sv, su] = bwd_.reduce(v, u);
        if (ru == 0 || sv == 0) {
            // Both must be dependent, with matching combinations.
            return ru == 0 && sv == 0 && rv == 0 && su == 0;
        }
        fwd_.insert_reduced(ru, rv);
        bwd_.insert_reduced(sv, su);
        return true;
    }

    [[nodiscard]] bool consistent_with(std::uint32_t u, std::uint32_t v) const {
        const auto [ru, rv] = fwd_.reduce(u, v);
        const auto [sv, su] = bwd_.reduce(v, u);
        if (ru == 0 || sv == 0) return ru == 0 && sv == 0 && rv == 0 && su == 0;
        return true;
    }

    /// Image of u if u lies in the known domain.
    [[nodiscard]] std::optional<std::uint32_t> image(std::uint32_t u) const {
        const auto [ru, rv] = fwd_.reduce(u, 0);
        if (ru != 0) return std::nullopt;
        return rv;
    }

    /// Preimage of v if v lies in the known range.
    [[nodiscard]] std::optional<std::uint32_t> preimage(std::uint32_t v) const {
        const auto [sv, su] = bwd_.reduce(v, 0);
        if (sv != 0) return std::nullopt;
        return su;
    }

    [[nodiscard]] unsigned rank() const noexcept { return fwd_.rank(); }

    /// Writes preimage(v) into table[v] for every v in the known range.
    void fill_preimages(std::vector<std::uint32_t>& table) const {
        const auto& rows = bwd_.rows();
        std::uint32_t v = 0, u = 0;
        table[0] = 0;
        const std::uint32_t count = std::uint32_t{1} << rows.size();
        for (std::uint32_t i = 1; i < count; ++i) {
            const auto& [rv, ru] = rows[static_cast<std::size_t>(std::countr_zero(i))];
            v ^= rv;
            u ^= ru;
            table[v] = u;
        }
    }

    /// The full matrix once rank == n.
    [[nodiscard]] BitMatrix matrix() const {
        if (rank() != n_) throw Error(ErrorCode::SingularMap, "partial map is not fully determined");
        return BitMatrix::from_map(n_, [this](std::uint32_t e) { return *image(e); });
    }

private:
    unsigned n_;
    TaggedEchelon fwd_;
    TaggedEchelon bwd_;
};

/// Dense GF(2) matrix rank with rows streamed in as 64-bit word spans; rows are
/// eliminated against an echelon basis kept by pivot position.
class StreamingRank {
public:
    explicit StreamingRank(std::size_t columns)
        : words_((columns + 63) / 64), pivot_row_(columns, -1) {}

    /// Reduces and (if independent) stores the row; returns true if rank grew.
    bool add(std::vector<std::uint64_t> row) {
        for (std::size_t w = words_; w-- > 0;) {
            while (row[w] != 0) {
                const unsigned bit = 63U - static_cast<unsigned>(std::countl_zero(row[w]));
                const std::size_t col = w * 64 + bit;
                const int r = pivot_row_[col];
                if (r < 0) {
                    pivot_row_[col] = static_cast<int>(basis_.size());
                    basis_.push_back(std::move(row));
                    return true;
                }
                const auto& b = basis_[static_cast<std::size_t>(r)];
                for (std::size_t k = 0; k <= w; ++k) row[k] ^= b[k];
            }
        }
        return false;
    }

    [[nodiscard]] std::size_t rank() const noexcept { return basis_.size(); }
    [[nodiscard]] std::size_t words() const noexcept { return words_; }

private:
    std::size_t words_;
    std::vector<int> pivot_row_;
    std::vector<std::vector<std::uint64_t>> basis_;
};

} // namespace apn
