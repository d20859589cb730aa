#include "lcn/matching.hpp"

#include <limits>

namespace lcn {

namespace {
constexpr std::uint32_t kFree = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
}  // namespace

std::size_t max_bipartite_matching(std::size_t n_left, std::size_t n_right,
                                   const std::vector<std::uint32_t>& row_ptr,
                                   const std::vector<std::uint32_t>& col,
                                   std::vector<std::uint32_t>& match_l,
                                   std::vector<std::uint32_t>& match_r) {
    match_l.assign(n_left, kFree);
    match_r.assign(n_right, kFree);
    std::vector<std::uint32_t> dist(n_left);
    std::vector<std::uint32_t> queue(n_left);

    auto bfs = [&]() -> bool {
        std::size_t head = 0, tail = 0;
        for (std::size_t u = 0; u < n_left; ++u) {
            if (match_l[u] == kFree) {
                dist[u] = 0;
                queue[tail++] = static_cast<std::uint32_t>(u);
            } else {
                dist[u] = kInf;
            }
        }
        bool found = false;
        while (head < tail) {
            std::uint32_t u = queue[head++];
            for (std::uint32_t e = row_ptr[u]; e < row_ptr[u + 1]; ++e) {
                std::uint32_t w = match_r[col[e]];
                if (w == kFree) {
                    found = true;
                } else if (dist[w] == kInf) {
                    dist[w] = dist[u] + 1;
                    queue[tail++] = w;
                }
            }
        }
        return found;
    };

    // Iterative DFS along layered edges.
    std::vector<std::uint32_t> edge_it(n_left);
    std::vector<std::uint32_t> stack;
    auto dfs = [&](std::uint32_t root) -> bool {
        stack.clear();
        stack.push_back(root);
        edge_it[root] = row_ptr[root];
        while (!stack.empty()) {
            std::uint32_t u = stack.back();
            if (edge_it[u] == row_ptr[u + 1]) {
                dist[u] = kInf;
                stack.pop_back();
                continue;
            }
            std::uint32_t e = edge_it[u]++;
            std::uint32_t v = col[e];
            std::uint32_t w = match_r[v];
            if (w == kFree) {
                // Augment along the stack; match_l[stack[s]] is the right
                // vertex on the path edge from stack[s-1].
                std::uint32_t vv = v;
                for (std::size_t s = stack.size(); s-- > 0;) {
                    std::uint32_t uu = stack[s];
                    std::uint32_t prev = match_l[uu];
                    match_l[uu] = vv;
                    match_r[vv] = uu;
                    vv = prev;
                }
                return true;
            }
            if (dist[w] == dist[u] + 1) {
                edge_it[w] = row_ptr[w];
                stack.push_back(w);
            }
        }
        return false;
    };

    std::size_t matched = 0;
    while (bfs()) {
        for (std::size_t u = 0; u < n_left; ++u)
            if (match_l[u] == kFree && dfs(static_cast<std::uint32_t>(u))) ++matched;
    }
    return matched;
}

}  // namespace lcn
