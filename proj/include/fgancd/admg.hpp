#pragma once

#include "fgancd/matrix.hpp"
#include "fgancd/tape.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fgancd {

// Acyclic directed mixed graph over d observed variables: a binary directed
// adjacency (entry (i,j) set means i -> j) plus a symmetric zero-diagonal
// binary bidirected adjacency (confounding). Bows (i -> j together with
// i <-> j) are allowed.
struct Admg {
    int d = 0;
    std::vector<std::uint8_t> directed;
    std::vector<std::uint8_t> bidirected;

    static Admg empty(int d) {
        Admg g;
        g.d = d;
        g.directed.assign(static_cast<std::size_t>(d) * d, 0);
        g.bidirected.assign(static_cast<std::size_t>(d) * d, 0);
        return g;
    }

    bool has_dir(int i, int j) const { return directed[static_cast<std::size_t>(i) * d + j] != 0; }
    bool has_bi(int i, int j) const { return bidirected[static_cast<std::size_t>(i) * d + j] != 0; }

    void set_dir(int i, int j, bool on = true) {
        directed[static_cast<std::size_t>(i) * d + j] = on ? 1 : 0;
    }
    void set_bi(int i, int j, bool on = true) {
        bidirected[static_cast<std::size_t>(i) * d + j] = on ? 1 : 0;
        bidirected[static_cast<std::size_t>(j) * d + i] = on ? 1 : 0;
    }

    int directed_edge_count() const;
    int bidirected_edge_count() const;  // unordered pairs

    bool operator==(const Admg&) const = default;
};

// Structural checks: symmetric bidirected part, zero diagonals. Throws
// SelfLoop / AsymmetricBidirected.
void validate(const Admg& g);

// Kahn's algorithm on the directed support.
bool is_acyclic(const Matrix& s);
bool is_acyclic(const Admg& g);

// Smooth acyclicity score h(W) = tr(e^{W o W}) - d; zero exactly on binary
// matrices whose support is a DAG.
double acyclicity_penalty(const Matrix& w);
Tensor acyclicity_penalty(Tape& tape, Tensor w);

// Canonical DAG obtained by replacing each bidirected edge with a fresh
// latent parent of both endpoints. Observed vertices keep their ids; latents
// are appended after them.
struct LatentDag {
    int observed = 0;
    int total = 0;
    std::vector<std::vector<int>> children;
    std::vector<std::vector<int>> parents;
};

LatentDag to_latent_dag(const Admg& g);

// Classic d-separation on a DAG (Bayes-ball reachability).
bool d_separated(const LatentDag& g, int i, int j, const std::vector<int>& z);

// m-separation on the ADMG, realized as d-separation on the latent DAG.
// i, j and all of z must be observed vertices.
bool m_separated(const Admg& g, int i, int j, const std::vector<int>& z);

// Edge-list text format: `nodes <d>` then `d <i> <j>` / `b <i> <j>` lines,
// `#` starts a comment. Bidirected pairs are written with i < j.
Admg parse_edge_list(const std::string& text);
std::string serialize_edge_list(const Admg& g);

}  // namespace fgancd
