#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace thinfilm {

/// Dinic max-flow on integer capacities. Exact: all arithmetic is int64.
/// After run(), min_cut_source_side() returns the smallest source side among
/// all minimum cuts (residual reachability), which is what minimal-minimizer
/// extraction relies on.
class MaxFlow {
  public:
    explicit MaxFlow(int n) : n_(n), head_(std::size_t(n), -1) {}

    int add_node() {
        head_.push_back(-1);
        return n_++;
    }

    void add_edge(int from, int to, int64_t cap, int64_t rev_cap = 0) {
        if (cap < 0 || rev_cap < 0) throw std::invalid_argument("MaxFlow: negative capacity");
        edges_.push_back({to, head_[std::size_t(from)], cap});
        head_[std::size_t(from)] = int(edges_.size()) - 1;
        edges_.push_back({from, head_[std::size_t(to)], rev_cap});
        head_[std::size_t(to)] = int(edges_.size()) - 1;
    }

    int64_t run(int s, int t) {
        s_ = s;
        t_ = t;
        int64_t flow = 0;
        std::vector<int> level(static_cast<std::size_t>(n_)), it(static_cast<std::size_t>(n_));
        std::vector<int> q(static_cast<std::size_t>(n_));
        while (true) {
            // BFS level graph
            std::fill(level.begin(), level.end(), -1);
            int qh = 0, qt = 0;
            q[std::size_t(qt++)] = s;
            level[std::size_t(s)] = 0;
            while (qh < qt) {
                const int v = q[std::size_t(qh++)];
                for (int e = head_[std::size_t(v)]; e != -1; e = edges_[std::size_t(e)].next) {
                    const Edge& ed = edges_[std::size_t(e)];
                    if (ed.cap > 0 && level[std::size_t(ed.to)] < 0) {
                        level[std::size_t(ed.to)] = level[std::size_t(v)] + 1;
                        q[std::size_t(qt++)] = ed.to;
                    }
                }
            }
            if (level[std::size_t(t)] < 0) break;
            for (int v = 0; v < n_; ++v) it[std::size_t(v)] = head_[std::size_t(v)];
            while (int64_t pushed = dfs(s, t, std::numeric_limits<int64_t>::max(), level, it))
                flow += pushed;
        }
        return flow;
    }

    /// Nodes reachable from the source in the residual network.
    std::vector<uint8_t> min_cut_source_side() const {
        std::vector<uint8_t> reach(std::size_t(n_), 0);
        std::vector<int> q;
        q.push_back(s_);
        reach[std::size_t(s_)] = 1;
        for (std::size_t h = 0; h < q.size(); ++h) {
            for (int e = head_[std::size_t(q[h])]; e != -1; e = edges_[std::size_t(e)].next) {
                const Edge& ed = edges_[std::size_t(e)];
                if (ed.cap > 0 && !reach[std::size_t(ed.to)]) {
                    reach[std::size_t(ed.to)] = 1;
                    q.push_back(ed.to);
                }
            }
        }
        return reach;
    }

  private:
    struct Edge {
        int to;
        int next;
        int64_t cap;
    };

    int64_t dfs(int v, int t, int64_t limit, std::vector<int>& level, std::vector<int>& it) {
        if (v == t) return limit;
        for (int& e = it[std::size_t(v)]; e != -1; e = edges_[std::size_t(e)].next) {
            Edge& ed = edges_[std::size_t(e)];
            if (ed.cap <= 0 || level[std::size_t(ed.to)] != level[std::size_t(v)] + 1) continue;
            const int64_t d = dfs(ed.to, t, std::min(limit, ed.cap), level, it);
            if (d > 0) {
                ed.cap -= d;
                edges_[std::size_t(e ^ 1)].cap += d;
                return d;
            }
        }
        level[std::size_t(v)] = -1;
        return 0;
    }

    int n_;
    int s_ = 0, t_ = 0;
    std::vector<int> head_;
    std::vector<Edge> edges_;
};

}  // namespace thinfilm
