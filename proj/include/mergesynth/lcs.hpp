#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mergesynth {

struct MatchedPair {
    std::size_t first;
    std::size_t second;
    bool operator==(const MatchedPair&) const = default;
};

/// Longest common subsequence of `x` and `y` as index pairs in increasing
/// order. Ties are broken leftmost: a pair is matched as soon as matching it
/// is optimal, and when skipping either side is optimal the element of `x`
/// is skipped first.
template <class T>
std::vector<MatchedPair> lcs_matches(std::span<const T> x, std::span<const T> y) {
    const std::size_t n = x.size();
    const std::size_t m = y.size();
    std::vector<MatchedPair> out;
    if (n == 0 || m == 0) return out;

    // suffix table: len[i][j] = LCS(x[i:], y[j:])
    const std::size_t w = m + 1;
    std::vector<std::uint32_t> len((n + 1) * w, 0);
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            if (x[i] == y[j]) {
                len[i * w + j] = len[(i + 1) * w + j + 1] + 1;
            } else {
                len[i * w + j] = std::max(len[(i + 1) * w + j], len[i * w + j + 1]);
            }
        }
    }

    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (x[i] == y[j] && len[i * w + j] == len[(i + 1) * w + j + 1] + 1) {
            out.push_back({i, j});
            ++i;
            ++j;
        } else if (len[(i + 1) * w + j] >= len[i * w + j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

}  // namespace mergesynth
