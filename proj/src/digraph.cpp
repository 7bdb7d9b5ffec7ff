#include "d2d/digraph.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "d2d/error.hpp"

namespace d2d::graph {

namespace {

class CircuitFinder {
  public:
    CircuitFinder(const Adjacency &adj, std::size_t limit, std::vector<std::vector<int>> &out)
        : adj_(adj), limit_(limit), out_(out), blocked_(adj.size(), false), blocked_by_(adj.size()),
          in_component_(adj.size(), false) {}

    void run() {
        const int n = static_cast<int>(adj_.size());
        for (int s = 0; s < n; ++s) {
            // Restrict to the SCC of s inside the subgraph induced by vertices >= s.
            Adjacency sub(adj_.size());
            for (int v = s; v < n; ++v)
                for (int w : adj_[v])
                    if (w >= s) sub[v].push_back(w);
            std::fill(in_component_.begin(), in_component_.end(), false);
            for (const auto &comp : strongly_connected_components(sub)) {
                if (std::find(comp.begin(), comp.end(), s) == comp.end()) continue;
                for (int v : comp) in_component_[v] = true;
            }
            const bool self_loop = std::find(adj_[s].begin(), adj_[s].end(), s) != adj_[s].end();
            bool nontrivial = self_loop;
            for (int w : adj_[s])
                if (w != s && in_component_[w]) nontrivial = true;
            if (!nontrivial) continue;

            for (int v = s; v < n; ++v) {
                blocked_[v] = false;
                blocked_by_[v].clear();
            }
            start_ = s;
            circuit(s);
        }
    }

  private:
    bool circuit(int v) {
        bool found = false;
        stack_.push_back(v);
        blocked_[v] = true;
        std::vector<int> seen;
        for (int w : adj_[v]) {
            if (!in_component_[w] || std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
            seen.push_back(w);
            if (w == start_) {
                emit();
                found = true;
            } else if (!blocked_[w] && circuit(w)) {
                found = true;
            }
        }
        if (found) {
            unblock(v);
        } else {
            for (int w : seen) {
                auto &list = blocked_by_[w];
                if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
            }
        }
        stack_.pop_back();
        return found;
    }

    void unblock(int u) {
        blocked_[u] = false;
        auto pending = std::move(blocked_by_[u]);
        blocked_by_[u].clear();
        for (int w : pending)
            if (blocked_[w]) unblock(w);
    }

    void emit() {
        if (out_.size() >= limit_)
            throw Error(ErrorCode::CycleLimitExceeded,
                        "more than " + std::to_string(limit_) + " simple cycles");
        out_.push_back(stack_);
    }

    const Adjacency &adj_;
    std::size_t limit_;
    std::vector<std::vector<int>> &out_;
    std::vector<bool> blocked_;
    std::vector<std::vector<int>> blocked_by_;
    std::vector<bool> in_component_;
    std::vector<int> stack_;
    int start_ = 0;
};

} // namespace

std::vector<std::vector<int>> simple_cycles(const Adjacency &adj, std::size_t limit) {
    std::vector<std::vector<int>> cycles;
    CircuitFinder(adj, limit, cycles).run();
    return cycles;
}

std::vector<std::vector<int>> strongly_connected_components(const Adjacency &adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    std::vector<std::vector<int>> components;
    int counter = 0;

    std::function<void(int)> connect = [&](int v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : adj[v]) {
            if (index[w] < 0) {
                connect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<int> comp;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            components.push_back(std::move(comp));
        }
    };
    for (int v = 0; v < n; ++v)
        if (index[v] < 0) connect(v);
    return components;
}

std::optional<std::vector<int>> topological_order(const Adjacency &adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> in_degree(n, 0);
    for (const auto &out : adj)
        for (int w : out) ++in_degree[w];
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
        if (in_degree[v] == 0) ready.push(v);
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int w : adj[v])
            if (--in_degree[w] == 0) ready.push(w);
    }
    if (static_cast<int>(order.size()) != n) return std::nullopt;
    return order;
}

} // namespace d2d::graph
