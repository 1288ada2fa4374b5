#pragma once

// Smallest integer lattice containing a finite point set, via column-style
// Hermite reduction over exact big integers.

#include "mtgw/rational.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <vector>

namespace mtgw {

using IntVec = std::vector<BigInt>;

// anchor + Z-span of basis columns. basis[c] is a column vector; pivot_row[c]
// gives the echelon structure (strictly increasing).
struct IntegerLattice {
    IntVec anchor;
    std::vector<IntVec> basis;
    std::vector<size_t> pivot_row;
    size_t dim = 0;

    size_t rank() const { return basis.size(); }

    BigInt abs_det() const {
        if (rank() != dim) throw std::logic_error("determinant needs full rank");
        BigInt d = 1;
        for (size_t c = 0; c < basis.size(); ++c) d *= basis[c][pivot_row[c]];
        return d < 0 ? BigInt(-d) : d;
    }

    // membership of point in anchor + span
    bool contains(const IntVec& p) const {
        if (p.size() != dim) throw std::invalid_argument("dimension mismatch");
        IntVec v(dim);
        for (size_t i = 0; i < dim; ++i) v[i] = p[i] - anchor[i];
        return contains_diff(v);
    }

    // membership of a difference vector in the span
    bool contains_diff(IntVec v) const {
        for (size_t c = 0; c < basis.size(); ++c) {
            size_t r = pivot_row[c];
            if (v[r] % basis[c][r] != 0) return false;
            BigInt k = v[r] / basis[c][r];
            for (size_t i = 0; i < dim; ++i) v[i] -= k * basis[c][i];
        }
        for (auto& x : v)
            if (x != 0) return false;
        return true;
    }
};

// Column echelon form over Z. Destroys cols.
inline IntegerLattice smallest_lattice(const std::vector<IntVec>& points, size_t anchor_index = 0) {
    if (points.empty()) throw std::invalid_argument("need at least one point");
    size_t dim = points[anchor_index].size();
    IntegerLattice lat;
    lat.dim = dim;
    lat.anchor = points[anchor_index];

    std::vector<IntVec> cols;
    for (size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) throw std::invalid_argument("dimension mismatch");
        IntVec d(dim);
        bool nonzero = false;
        for (size_t r = 0; r < dim; ++r) {
            d[r] = points[i][r] - lat.anchor[r];
            if (d[r] != 0) nonzero = true;
        }
        if (nonzero) cols.push_back(std::move(d));
    }

    size_t col_start = 0;
    for (size_t row = 0; row < dim && col_start < cols.size(); ++row) {
        // gcd-reduce entries of this row across columns [col_start, end)
        while (true) {
            size_t best = cols.size();
            for (size_t c = col_start; c < cols.size(); ++c) {
                if (cols[c][row] == 0) continue;
                if (best == cols.size() || abs(cols[c][row]) < abs(cols[best][row])) best = c;
            }
            if (best == cols.size()) break;  // row is zero everywhere; next row
            std::swap(cols[col_start], cols[best]);
            bool reduced_all = true;
            for (size_t c = col_start + 1; c < cols.size(); ++c) {
                if (cols[c][row] == 0) continue;
                BigInt k = cols[c][row] / cols[col_start][row];
                for (size_t r = 0; r < dim; ++r) cols[c][r] -= k * cols[col_start][r];
                if (cols[c][row] != 0) reduced_all = false;
            }
            if (reduced_all) {
                if (cols[col_start][row] < 0)
                    for (size_t r = 0; r < dim; ++r) cols[col_start][r] = -cols[col_start][r];
                // drop columns that became zero
                std::vector<IntVec> keep(cols.begin(), cols.begin() + col_start + 1);
                for (size_t c = col_start + 1; c < cols.size(); ++c) {
                    bool z = true;
                    for (size_t r = 0; r < dim; ++r)
                        if (cols[c][r] != 0) z = false;
                    if (!z) keep.push_back(std::move(cols[c]));
                }
                cols = std::move(keep);
                lat.pivot_row.push_back(row);
                ++col_start;
                break;
            }
        }
    }
    cols.resize(col_start);
    lat.basis = std::move(cols);
    return lat;
}

}  // namespace mtgw
