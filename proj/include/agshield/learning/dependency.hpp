#pragma once

#include "agshield/core/error.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace agshield {

/// Directed graph over agents 0..n-1; edge (i, j) means agent i depends on agent j.
class DependencyGraph {
public:
    DependencyGraph() = default;
    DependencyGraph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) : n_(n) {
        for (auto [i, j] : edges) {
            if (i >= n || j >= n) throw InvalidArgument("dependency graph: agent out of range");
            if (i == j) throw InvalidArgument("dependency graph: self-dependency");
            edges_.insert({i, j});
        }
    }

    [[nodiscard]] std::size_t agent_count() const { return n_; }
    [[nodiscard]] const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    [[nodiscard]] bool depends(std::size_t i, std::size_t j) const { return edges_.count({i, j}) != 0; }

    friend bool operator==(const DependencyGraph& a, const DependencyGraph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

private:
    std::size_t n_ = 0;
    std::set<std::pair<std::size_t, std::size_t>> edges_;
};

inline std::string format_cycle(const std::vector<std::size_t>& cycle) {
    std::string s;
    for (auto i : cycle) s += std::to_string(i + 1) + " -> ";
    return s + std::to_string(cycle.front() + 1);
}

/// Repeatedly removes an agent with no outgoing edges to remaining agents. Ties go to the
/// earliest agent in `priority` (default: ascending index).
inline std::vector<std::size_t> topological_order(const DependencyGraph& g, std::vector<std::size_t> priority = {}) {
    const std::size_t n = g.agent_count();
    if (priority.empty()) {
        for (std::size_t i = 0; i < n; ++i) priority.push_back(i);
    }
    if (priority.size() != n) throw InvalidArgument("topological_order: priority must list every agent once");
    std::vector<bool> done(n, false);
    std::vector<std::size_t> order;
    while (order.size() < n) {
        std::optional<std::size_t> pick;
        for (auto i : priority) {
            if (done[i]) continue;
            bool free = true;
            for (std::size_t j = 0; j < n && free; ++j) free = done[j] || !g.depends(i, j);
            if (free) {
                pick = i;
                break;
            }
        }
        if (!pick) {
            // every remaining agent has a remaining successor: walk until a repeat
            std::size_t cur = 0;
            while (done[cur]) ++cur;
            std::vector<std::size_t> path;
            std::vector<int> seen(n, -1);
            while (seen[cur] < 0) {
                seen[cur] = static_cast<int>(path.size());
                path.push_back(cur);
                for (std::size_t j = 0; j < n; ++j)
                    if (!done[j] && g.depends(cur, j)) {
                        cur = j;
                        break;
                    }
            }
            const std::vector<std::size_t> cycle(path.begin() + seen[cur], path.end());
            throw CyclicDependency("cyclic dependency: " + format_cycle(cycle));
        }
        done[*pick] = true;
        order.push_back(*pick);
    }
    return order;
}

} // namespace agshield
