#pragma once

// Leaf-based AVL tree with finger search. Payloads live only in leaves;
// inner nodes carry a router that separates their two subtrees. Leaf handles
// are stable: splitting a leaf turns a fresh node into the inner node and
// leaves the old leaf where the caller's registry expects it.
//
// Traits must provide
//   using Key, Router, Leaf;
//   static int  place(const Leaf&, const Key&);      // -1 before, 0 inside, +1 after
//   static bool goes_left(const Key&, const Router&);
//   static Router router_after(const Leaf&);         // separator right of this leaf
//   static bool left_of(const Leaf&, const Router&); // audit: leaf belongs left of router
//   static bool is_dummy(const Leaf&);
//   static Leaf dummy();

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "imprecise/core.hpp"

namespace imprecise::detail {

using Handle = std::uint32_t;
inline constexpr Handle kNil = std::numeric_limits<Handle>::max();

enum class Side { before, inside, after };

struct Position {
    Handle leaf = kNil;
    Side side = Side::inside;
};

/// Leaf count of the Fibonacci shape of height h: 1, 2, 3, 5, 8, ...
inline std::size_t fibonacci_leaves(std::size_t h) {
    std::size_t a = 1;
    std::size_t b = 2;
    for (std::size_t i = 0; i < h; ++i) {
        const std::size_t c = a + b;
        a = b;
        b = c;
    }
    return a;
}

template <typename Traits>
class LeafTree {
public:
    using Key = typename Traits::Key;
    using Router = typename Traits::Router;
    using Leaf = typename Traits::Leaf;

    LeafTree() = default;

    /// Fibonacci-shaped tree over `leaves` (left to right), padded on the
    /// right with dummies up to the next Fibonacci leaf count. The left
    /// subtree is always the taller one. Returns handles of the given leaves.
    std::vector<Handle> build_fibonacci(std::vector<Leaf> leaves) {
        nodes_.clear();
        root_ = first_ = kNil;
        const std::size_t real = leaves.size();
        std::size_t h = 0;
        while (fibonacci_leaves(h) < std::max<std::size_t>(real, 1)) ++h;
        const std::size_t total = fibonacci_leaves(h);
        while (leaves.size() < total) leaves.push_back(Traits::dummy());
        nodes_.reserve(2 * total);

        std::size_t next_leaf = 0;
        std::vector<Handle> handles;
        handles.reserve(total);
        Handle previous = kNil;
        auto make = [&](auto&& self, std::size_t height) -> Handle {
            if (height == 0) {
                const Handle leaf = allocate(true);
                nodes_[leaf].payload = std::move(leaves[next_leaf++]);
                nodes_[leaf].prev = previous;
                if (previous != kNil) nodes_[previous].next = leaf;
                previous = leaf;
                handles.push_back(leaf);
                return leaf;
            }
            const Handle inner = allocate(false);
            const Handle left = self(self, height - 1);
            const Handle right = self(self, height == 1 ? 0 : height - 2);
            attach(inner, left, right);
            nodes_[inner].balance = height == 1 ? 0 : -1;
            nodes_[inner].router = Traits::router_after(nodes_[rightmost(left)].payload);
            return inner;
        };
        root_ = make(make, h);
        nodes_[root_].parent = kNil;
        first_ = handles.front();
        handles.resize(real);
        return handles;
    }

    bool empty() const { return root_ == kNil; }
    Handle root() const { return root_; }
    Handle first_leaf() const { return first_; }
    Handle next(Handle leaf) const { return nodes_[leaf].next; }
    Handle prev(Handle leaf) const { return nodes_[leaf].prev; }
    const Leaf& leaf(Handle h) const { return nodes_[h].payload; }
    /// Mutable payload. Callers must keep the payload consistent with the
    /// routers around it (collapsing inside a span, shrinking before a split).
    Leaf& leaf(Handle h) { return nodes_[h].payload; }
    std::size_t leaf_count() const { return leaves_; }
    std::size_t inner_count() const { return nodes_.size() - leaves_; }

    /// Balance of every inner node, in allocation order.
    std::vector<int> inner_balances() const {
        std::vector<int> out;
        for (const auto& node : nodes_)
            if (!node.is_leaf) out.push_back(node.balance);
        return out;
    }

    std::size_t height() const {
        std::size_t h = 0;
        for (Handle u = root_; u != kNil && !nodes_[u].is_leaf; ++h)
            u = nodes_[u].balance > 0 ? nodes_[u].right : nodes_[u].left;
        return h;
    }

    /// Finger search from `start`: climb to the lowest ancestor whose subtree
    /// must hold `key`, then descend. Counts every edge and comparison.
    Position locate(Handle start, const Key& key, OpStats& stats) const {
        ++stats.value_comparisons;
        const int side = Traits::place(nodes_[start].payload, key);
        if (side == 0) return {start, Side::inside};
        const bool rightward = side > 0;
        Handle child = start;
        Handle u = nodes_[start].parent;
        while (u != kNil) {
            ++stats.node_traversals;
            const bool from_left = nodes_[u].left == child;
            if (from_left == rightward) {
                ++stats.value_comparisons;
                if (Traits::goes_left(key, nodes_[u].router) == rightward) {
                    ++stats.node_traversals;
                    return descend(child, key, stats);
                }
            }
            child = u;
            u = nodes_[u].parent;
        }
        return descend(child, key, stats);
    }

    /// Plain root-to-leaf search.
    Position find(const Key& key, OpStats& stats) const { return descend(root_, key, stats); }

    /// Splits `at` into an inner node over {at, fresh}; `fresh` goes to the
    /// right when `after` is set. Rebalances on the way up.
    Handle insert_adjacent(Handle at, bool after, Leaf payload, OpStats& stats) {
        const Handle fresh = allocate(true);
        const Handle inner = allocate(false);
        nodes_[fresh].payload = std::move(payload);
        const Handle parent = nodes_[at].parent;
        replace_child(parent, at, inner);
        nodes_[inner].parent = parent;
        if (after) {
            attach(inner, at, fresh);
            nodes_[fresh].prev = at;
            nodes_[fresh].next = nodes_[at].next;
            if (nodes_[at].next != kNil) nodes_[nodes_[at].next].prev = fresh;
            nodes_[at].next = fresh;
        } else {
            attach(inner, fresh, at);
            nodes_[fresh].next = at;
            nodes_[fresh].prev = nodes_[at].prev;
            if (nodes_[at].prev != kNil) {
                nodes_[nodes_[at].prev].next = fresh;
            } else {
                first_ = fresh;
            }
            nodes_[at].prev = fresh;
        }
        nodes_[inner].router = Traits::router_after(nodes_[nodes_[inner].left].payload);
        ++stats.insertions;
        retrace(inner, stats);
        return fresh;
    }

    /// Empty string when the structure is sound, otherwise the first problem.
    std::string audit() const {
        if (root_ == kNil) return "";
        if (nodes_[root_].parent != kNil) return "root has a parent";
        std::vector<Handle> order;
        std::string problem;
        check(root_, order, problem);
        if (!problem.empty()) return problem;
        if (order.size() != leaves_) return "leaf count mismatch";
        Handle walk = first_;
        for (std::size_t i = 0; i < order.size(); ++i, walk = nodes_[walk].next) {
            if (walk != order[i]) return "leaf chain disagrees with in-order traversal";
            const Handle p = nodes_[walk].prev;
            if (i == 0 ? p != kNil : p != order[i - 1]) return "broken prev link";
        }
        if (walk != kNil) return "leaf chain too long";
        return "";
    }

private:
    struct Node {
        Handle parent = kNil;
        Handle left = kNil;
        Handle right = kNil;
        Handle prev = kNil;
        Handle next = kNil;
        std::int8_t balance = 0;  // height(right) - height(left)
        bool is_leaf = false;
        Router router{};
        Leaf payload{};
    };

    Handle allocate(bool is_leaf) {
        nodes_.emplace_back();
        nodes_.back().is_leaf = is_leaf;
        if (is_leaf) ++leaves_;
        return static_cast<Handle>(nodes_.size() - 1);
    }

    void attach(Handle inner, Handle left, Handle right) {
        nodes_[inner].left = left;
        nodes_[inner].right = right;
        nodes_[left].parent = inner;
        nodes_[right].parent = inner;
    }

    void replace_child(Handle parent, Handle old_child, Handle new_child) {
        if (parent == kNil) {
            root_ = new_child;
        } else if (nodes_[parent].left == old_child) {
            nodes_[parent].left = new_child;
        } else {
            nodes_[parent].right = new_child;
        }
    }

    Handle rightmost(Handle u) const {
        while (!nodes_[u].is_leaf) u = nodes_[u].right;
        return u;
    }

    Position descend(Handle u, const Key& key, OpStats& stats) const {
        while (!nodes_[u].is_leaf) {
            ++stats.value_comparisons;
            ++stats.node_traversals;
            u = Traits::goes_left(key, nodes_[u].router) ? nodes_[u].left : nodes_[u].right;
        }
        ++stats.value_comparisons;
        const int side = Traits::place(nodes_[u].payload, key);
        return {u, side < 0 ? Side::before : side == 0 ? Side::inside : Side::after};
    }

    void set_balance(Handle u, int value) { nodes_[u].balance = static_cast<std::int8_t>(value); }

    // Rotations keep every router: each still separates its two subtrees.
    Handle rotate_right(Handle y, OpStats& stats) {
        const Handle x = nodes_[y].left;
        const Handle parent = nodes_[y].parent;
        const Handle middle = nodes_[x].right;
        nodes_[y].left = middle;
        nodes_[middle].parent = y;
        nodes_[x].right = y;
        nodes_[y].parent = x;
        nodes_[x].parent = parent;
        replace_child(parent, y, x);
        ++stats.rotations;
        return x;
    }

    Handle rotate_left(Handle x, OpStats& stats) {
        const Handle y = nodes_[x].right;
        const Handle parent = nodes_[x].parent;
        const Handle middle = nodes_[y].left;
        nodes_[x].right = middle;
        nodes_[middle].parent = x;
        nodes_[y].left = x;
        nodes_[x].parent = y;
        nodes_[y].parent = parent;
        replace_child(parent, x, y);
        ++stats.rotations;
        return y;
    }

    // The subtree rooted at `grown` just got one level taller. Walking up, a
    // run of 0 -> ±1 flips ends in one terminating ±1 -> 0 change or in a
    // rotation. balance_changes counts the flips and the plain terminating
    // change; a terminating rotation goes to the rotation counter only.
    void retrace(Handle grown, OpStats& stats) {
        Handle child = grown;
        for (Handle u = nodes_[child].parent; u != kNil; child = u, u = nodes_[u].parent) {
            const int updated = nodes_[u].balance + (nodes_[u].left == child ? -1 : 1);
            if (updated == 0) {
                ++stats.balance_changes;
                set_balance(u, 0);
                return;
            }
            if (updated == -1 || updated == 1) {
                ++stats.balance_changes;
                set_balance(u, updated);
                continue;
            }
            if (updated == -2) {
                const Handle x = nodes_[u].left;
                if (nodes_[x].balance <= 0) {
                    rotate_right(u, stats);
                    set_balance(u, 0);
                    set_balance(x, 0);
                } else {
                    const Handle g = nodes_[x].right;
                    const int gb = nodes_[g].balance;
                    rotate_left(x, stats);
                    rotate_right(u, stats);
                    set_balance(u, gb < 0 ? 1 : 0);
                    set_balance(x, gb > 0 ? -1 : 0);
                    set_balance(g, 0);
                }
            } else {
                const Handle x = nodes_[u].right;
                if (nodes_[x].balance >= 0) {
                    rotate_left(u, stats);
                    set_balance(u, 0);
                    set_balance(x, 0);
                } else {
                    const Handle g = nodes_[x].left;
                    const int gb = nodes_[g].balance;
                    rotate_right(x, stats);
                    rotate_left(u, stats);
                    set_balance(u, gb > 0 ? -1 : 0);
                    set_balance(x, gb < 0 ? 1 : 0);
                    set_balance(g, 0);
                }
            }
            return;
        }
    }

    // Returns the height; collects leaves in order and checks routers.
    int check(Handle u, std::vector<Handle>& order, std::string& problem) const {
        const Node& node = nodes_[u];
        if (node.is_leaf) {
            order.push_back(u);
            return 0;
        }
        if (node.left == kNil || node.right == kNil) {
            problem = "inner node with a missing child";
            return 0;
        }
        if (nodes_[node.left].parent != u || nodes_[node.right].parent != u) problem = "parent link mismatch";
        const std::size_t first = order.size();
        const int hl = check(node.left, order, problem);
        const std::size_t middle = order.size();
        const int hr = check(node.right, order, problem);
        if (!problem.empty()) return 0;
        if (hr - hl != node.balance) problem = "stored balance differs from subtree heights";
        if (hr - hl > 1 || hl - hr > 1) problem = "AVL condition violated";
        for (std::size_t i = first; i < order.size() && problem.empty(); ++i) {
            const Leaf& leaf = nodes_[order[i]].payload;
            if (Traits::is_dummy(leaf)) continue;
            if (Traits::left_of(leaf, node.router) != (i < middle)) problem = "router does not separate subtrees";
        }
        return 1 + std::max(hl, hr);
    }

    std::vector<Node> nodes_;
    Handle root_ = kNil;
    Handle first_ = kNil;
    std::size_t leaves_ = 0;
};

}  // namespace imprecise::detail
