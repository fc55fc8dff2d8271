#pragma once

#include <limits>
#include <queue>
#include <vector>

#include "ctseg/common.hpp"

namespace ctseg {

// Residual flow network with paired reverse arcs; max flow via Dinic
// (BFS level graph + blocking-flow DFS). After max_flow the minimum cut
// is read off the residual reachability from the source.
class FlowGraph {
public:
    explicit FlowGraph(int n_nodes) : head_(n_nodes, -1) {
        if (n_nodes < 2) throw ParamError("FlowGraph: need at least 2 nodes");
    }

    int nodes() const { return static_cast<int>(head_.size()); }

    void add_edge(int u, int v, double cap, double rev_cap = 0.0) {
        if (u < 0 || v < 0 || u >= nodes() || v >= nodes() || u == v)
            throw ParamError("FlowGraph: bad arc endpoints");
        if (cap < 0.0 || rev_cap < 0.0) throw ParamError("FlowGraph: negative capacity");
        arcs_.push_back({v, head_[u], cap});
        head_[u] = static_cast<int>(arcs_.size()) - 1;
        arcs_.push_back({u, head_[v], rev_cap});
        head_[v] = static_cast<int>(arcs_.size()) - 1;
    }

    double max_flow(int s, int t) {
        source_ = s;
        double flow = 0.0;
        std::vector<int> level(nodes());
        std::vector<int> it(nodes());
        while (bfs_level(s, t, level)) {
            for (int i = 0; i < nodes(); ++i) it[i] = head_[i];
            while (true) {
                const double pushed =
                    dfs_push(s, t, std::numeric_limits<double>::infinity(), level, it);
                if (pushed <= 0.0) break;
                flow += pushed;
            }
        }
        return flow;
    }

    // valid after max_flow: true for nodes on the source side of the min cut
    std::vector<char> source_side() const {
        std::vector<char> side(nodes(), 0);
        std::queue<int> q;
        q.push(source_);
        side[source_] = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int e = head_[u]; e >= 0; e = arcs_[e].next) {
                if (arcs_[e].cap > kResidualEps && !side[arcs_[e].to]) {
                    side[arcs_[e].to] = 1;
                    q.push(arcs_[e].to);
                }
            }
        }
        return side;
    }

private:
    static constexpr double kResidualEps = 1e-12;

    struct Arc {
        int to;
        int next;
        double cap;
    };

    bool bfs_level(int s, int t, std::vector<int>& level) {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        q.push(s);
        level[s] = 0;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int e = head_[u]; e >= 0; e = arcs_[e].next) {
                if (arcs_[e].cap > kResidualEps && level[arcs_[e].to] < 0) {
                    level[arcs_[e].to] = level[u] + 1;
                    q.push(arcs_[e].to);
                }
            }
        }
        return level[t] >= 0;
    }

    double dfs_push(int u, int t, double limit, const std::vector<int>& level,
                    std::vector<int>& it) {
        if (u == t) return limit;
        for (int& e = it[u]; e >= 0; e = arcs_[e].next) {
            Arc& a = arcs_[e];
            if (a.cap > kResidualEps && level[a.to] == level[u] + 1) {
                const double pushed = dfs_push(a.to, t, std::min(limit, a.cap), level, it);
                if (pushed > 0.0) {
                    a.cap -= pushed;
                    arcs_[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
        }
        return 0.0;
    }

    std::vector<int> head_;
    std::vector<Arc> arcs_;
    int source_ = 0;
};

} // namespace ctseg
