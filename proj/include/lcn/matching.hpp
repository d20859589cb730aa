#pragma once

#include <cstdint>
#include <vector>

namespace lcn {

// Maximum bipartite matching via Hopcroft–Karp layered augmentation.
// Adjacency is CSR over left vertices. Returns the matching size;
// match_l/match_r are filled with partner indices or UINT32_MAX.
std::size_t max_bipartite_matching(std::size_t n_left, std::size_t n_right,
                                   const std::vector<std::uint32_t>& row_ptr,
                                   const std::vector<std::uint32_t>& col,
                                   std::vector<std::uint32_t>& match_l,
                                   std::vector<std::uint32_t>& match_r);

}  // namespace lcn
