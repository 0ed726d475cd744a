#pragma once

#include <algorithm>

#include "multifractal/numerics.hpp"

namespace multifractal {

namespace detail {

struct SuffixRoot {
    Word suffix;  // final symbols of the words in this chunk
};

std::vector<SuffixRoot> suffix_roots(const MarkovMap& map, int length);

}  // namespace detail

template <class Acc, class Visit, class Combine>
Acc reduce_cylinders(const MarkovMap& map, int n, std::span<const Potential* const> potentials,
                     Acc identity, Visit visit, Combine combine, std::uint64_t budget) {
    check_budget(map, n, budget);
    const int chunk_len = std::min(n, 4);
    const auto roots = detail::suffix_roots(map, chunk_len);
    const std::size_t np = potentials.size();

    return parallel_reduce(
        roots.size(), identity,
        [&](std::size_t r) {
            Acc acc = identity;
            const auto n_sz = static_cast<std::size_t>(n);
            Word buf(n_sz);
            // sums[d] holds the Birkhoff brackets of the depth-d suffix node
            std::vector<std::vector<Interval>> sums(n_sz + 1, std::vector<Interval>(np));
            std::vector<Interval> spans(n_sz + 1);

            const Word& root = roots[r].suffix;
            std::size_t start = n_sz - root.size();
            std::copy(root.begin(), root.end(), buf.begin() + static_cast<std::ptrdiff_t>(start));
            // Build the root chain right to left.
            spans[1] = map.core(buf[n_sz - 1]);
            for (std::size_t j = 0; j < np; ++j) {
                sums[1][j] = potentials[j]->site(
                    map, std::span<const Symbol>(buf).subspan(n_sz - 1), spans[1]);
            }
            for (std::size_t d = 2; d <= root.size(); ++d) {
                const std::size_t pos = n_sz - d;
                spans[d] = map.branch(buf[pos]).inverse(spans[d - 1]);
                for (std::size_t j = 0; j < np; ++j) {
                    sums[d][j] = sums[d - 1][j] +
                                 potentials[j]->site(
                                     map, std::span<const Symbol>(buf).subspan(pos), spans[d]);
                }
            }

            const auto recurse = [&](auto&& self, std::size_t d) -> void {
                if (d == n_sz) {
                    visit(acc, CylinderView{std::span<const Symbol>(buf), spans[d],
                                            std::span<const Interval>(sums[d])});
                    return;
                }
                const std::size_t pos = n_sz - d - 1;
                const Symbol next = buf[pos + 1];
                for (Symbol i = 0; i < static_cast<Symbol>(map.symbols()); ++i) {
                    if (!map.allowed(i, next)) continue;
                    buf[pos] = i;
                    spans[d + 1] = map.branch(i).inverse(spans[d]);
                    for (std::size_t j = 0; j < np; ++j) {
                        sums[d + 1][j] =
                            sums[d][j] + potentials[j]->site(
                                             map, std::span<const Symbol>(buf).subspan(pos),
                                             spans[d + 1]);
                    }
                    self(self, d + 1);
                }
            };
            recurse(recurse, root.size());
            return acc;
        },
        combine);
}

}  // namespace multifractal
