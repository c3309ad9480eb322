#include "attsync/topology.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

namespace attsync {

namespace {

using Kind = TopologyError::Kind;

// Union-find over agents, used to detect cycles while edges are added.
class DisjointSets {
public:
    explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int x)
    {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent_[static_cast<std::size_t>(a)] = b;
        return true;
    }

private:
    std::vector<int> parent_;
};

void check_lengths(const OrientedTree& tree, std::size_t rotations, Eigen::Index vec, Eigen::Index expected)
{
    if (rotations != static_cast<std::size_t>(tree.n_edges())) {
        throw std::invalid_argument("edge rotation count does not match edge count");
    }
    if (vec != expected) {
        throw std::invalid_argument("stacked vector length mismatch");
    }
}

}  // namespace

int OrientedTree::edge_between(int i, int j) const
{
    for (const auto& inc : incidences(i)) {
        if (inc.neighbor == j) {
            return inc.edge;
        }
    }
    return -1;
}

OrientedTree build_tree(int n, std::span<const Edge> edges)
{
    if (n < 1) {
        throw TopologyError(Kind::empty, "tree needs at least one agent");
    }

    std::set<std::pair<int, int>> seen;
    DisjointSets sets(n);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [h, t] = edges[k];
        const std::string label = "edge " + std::to_string(k + 1);
        if (h < 0 || h >= n || t < 0 || t >= n) {
            throw TopologyError(Kind::index_out_of_range, label + " references an agent outside [1, " + std::to_string(n) + "]");
        }
        if (h == t) {
            throw TopologyError(Kind::self_loop, label + " is a self-loop");
        }
        if (!seen.insert({std::min(h, t), std::max(h, t)}).second) {
            throw TopologyError(Kind::duplicate_edge, label + " duplicates an earlier edge");
        }
        if (!sets.unite(h, t)) {
            throw TopologyError(Kind::cycle, label + " closes a cycle");
        }
    }
    if (static_cast<int>(edges.size()) != n - 1) {
        throw TopologyError(Kind::disconnected, "graph is disconnected: " + std::to_string(edges.size()) +
                                                    " edges for " + std::to_string(n) + " agents");
    }

    OrientedTree tree;
    tree.n_ = n;
    tree.edges_.assign(edges.begin(), edges.end());
    const auto un = static_cast<std::size_t>(n);
    tree.head_of_.resize(un);
    tree.tail_of_.resize(un);
    tree.neighbors_.resize(un);
    tree.incidences_.resize(un);
    for (int k = 0; k < tree.n_edges(); ++k) {
        const auto [h, t] = tree.edges_[static_cast<std::size_t>(k)];
        tree.head_of_[static_cast<std::size_t>(h)].push_back(k);
        tree.tail_of_[static_cast<std::size_t>(t)].push_back(k);
        tree.neighbors_[static_cast<std::size_t>(h)].push_back(t);
        tree.neighbors_[static_cast<std::size_t>(t)].push_back(h);
        tree.incidences_[static_cast<std::size_t>(h)].push_back({t, k, true});
        tree.incidences_[static_cast<std::size_t>(t)].push_back({h, k, false});
    }
    for (auto& nb : tree.neighbors_) {
        std::sort(nb.begin(), nb.end());
    }
    return tree;
}

Eigen::MatrixXd incidence(const OrientedTree& tree)
{
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(tree.n_agents(), tree.n_edges());
    for (int k = 0; k < tree.n_edges(); ++k) {
        h(tree.edge(k).head, k) = 1.0;
        h(tree.edge(k).tail, k) = -1.0;
    }
    return h;
}

Eigen::MatrixXd laplacian(const OrientedTree& tree)
{
    const Eigen::MatrixXd h = incidence(tree);
    return h * h.transpose();
}

Eigen::VectorXd hbar_apply(const OrientedTree& tree, std::span<const Mat3> edge_rotations, const Eigen::VectorXd& w)
{
    check_lengths(tree, edge_rotations.size(), w.size(), 3 * tree.n_agents());
    Eigen::VectorXd out(3 * tree.n_edges());
    for (int k = 0; k < tree.n_edges(); ++k) {
        const auto [i, j] = tree.edge(k);
        out.segment<3>(3 * k) = w.segment<3>(3 * i) - edge_rotations[static_cast<std::size_t>(k)].transpose() * w.segment<3>(3 * j);
    }
    return out;
}

Eigen::VectorXd hbar_premultiply(const OrientedTree& tree, std::span<const Mat3> edge_rotations,
                                 const Eigen::VectorXd& v)
{
    check_lengths(tree, edge_rotations.size(), v.size(), 3 * tree.n_edges());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * tree.n_agents());
    for (int k = 0; k < tree.n_edges(); ++k) {
        const auto [i, j] = tree.edge(k);
        out.segment<3>(3 * i) += v.segment<3>(3 * k);
        out.segment<3>(3 * j) -= edge_rotations[static_cast<std::size_t>(k)] * v.segment<3>(3 * k);
    }
    return out;
}

Eigen::MatrixXd hbar_matrix(const OrientedTree& tree, std::span<const Mat3> edge_rotations)
{
    if (edge_rotations.size() != static_cast<std::size_t>(tree.n_edges())) {
        throw std::invalid_argument("edge rotation count does not match edge count");
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * tree.n_agents(), 3 * tree.n_edges());
    for (int k = 0; k < tree.n_edges(); ++k) {
        const auto [i, j] = tree.edge(k);
        m.block<3, 3>(3 * i, 3 * k) = Mat3::Identity();
        m.block<3, 3>(3 * j, 3 * k) = -edge_rotations[static_cast<std::size_t>(k)];
    }
    return m;
}

}  // namespace attsync
