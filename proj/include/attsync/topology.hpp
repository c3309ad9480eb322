#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attsync/so3.hpp"

namespace attsync {

/// Oriented edge. Agent indices are 0-based in the API; the config file uses
/// 1-based ids and converts on load.
struct Edge {
    int head = 0;
    int tail = 0;
    bool operator==(const Edge&) const = default;
};

class TopologyError : public std::invalid_argument {
public:
    enum class Kind { empty, index_out_of_range, self_loop, duplicate_edge, cycle, disconnected };

    TopologyError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// One entry of an agent's incidence list: the neighbor reached through
/// `edge`, and whether the agent is that edge's head.
struct Incidence {
    int neighbor;
    int edge;
    bool is_head;
};

/// Undirected tree with a fixed virtual orientation. Edge k (0-based here,
/// k+1 in files) runs from edges()[k].head to edges()[k].tail.
class OrientedTree {
public:
    int n_agents() const { return n_; }
    int n_edges() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int k) const { return edges_.at(static_cast<std::size_t>(k)); }

    /// M_i^+ : edges whose head is agent i.
    const std::vector<int>& head_edges(int i) const { return head_of_.at(static_cast<std::size_t>(i)); }
    /// M_i^- : edges whose tail is agent i.
    const std::vector<int>& tail_edges(int i) const { return tail_of_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
    const std::vector<Incidence>& incidences(int i) const { return incidences_.at(static_cast<std::size_t>(i)); }

    /// Edge joining i and j, or -1.
    int edge_between(int i, int j) const;

    friend OrientedTree build_tree(int n, std::span<const Edge> edges);

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> head_of_;
    std::vector<std::vector<int>> tail_of_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<Incidence>> incidences_;
};

/// Validates and indexes a tree. Orientation is taken verbatim from `edges`.
/// Throws TopologyError (distinct Kind per failure).
OrientedTree build_tree(int n, std::span<const Edge> edges);

/// N x M incidence matrix with h_ik = +1 (head), -1 (tail), 0 otherwise.
Eigen::MatrixXd incidence(const OrientedTree& tree);

/// Graph Laplacian H H^T.
Eigen::MatrixXd laplacian(const OrientedTree& tree);

/// Hbar^T w: per edge k = (i, j), returns w_i - Rbar_k^T w_j. `w` is the
/// stacked 3N agent vector; result is stacked 3M. Throws on length mismatch.
Eigen::VectorXd hbar_apply(const OrientedTree& tree, std::span<const Mat3> edge_rotations,
                           const Eigen::VectorXd& w);

/// Hbar v, the adjoint of hbar_apply: agent i collects +v_k over its head
/// edges and -Rbar_k v_k over its tail edges.
Eigen::VectorXd hbar_premultiply(const OrientedTree& tree, std::span<const Mat3> edge_rotations,
                                 const Eigen::VectorXd& v);

/// Dense 3N x 3M matrix Hbar, for tests and rank checks.
Eigen::MatrixXd hbar_matrix(const OrientedTree& tree, std::span<const Mat3> edge_rotations);

}  // namespace attsync
