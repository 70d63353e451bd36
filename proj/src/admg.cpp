#include "fgancd/admg.hpp"

#include "fgancd/errors.hpp"

#include <deque>
#include <sstream>
#include <utility>

namespace fgancd {

int Admg::directed_edge_count() const {
    int n = 0;
    for (auto v : directed) n += v != 0;
    return n;
}

int Admg::bidirected_edge_count() const {
    int n = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) n += has_bi(i, j);
    }
    return n;
}

void validate(const Admg& g) {
    for (int i = 0; i < g.d; ++i) {
        if (g.has_dir(i, i) || g.has_bi(i, i)) {
            throw SelfLoop("vertex " + std::to_string(i) + " has a self loop");
        }
        for (int j = 0; j < g.d; ++j) {
            if (g.has_bi(i, j) != g.has_bi(j, i)) {
                throw AsymmetricBidirected("bidirected entry (" + std::to_string(i) + "," +
                                           std::to_string(j) + ") is not mirrored");
            }
        }
    }
}

bool is_acyclic(const Matrix& s) {
    const int d = s.rows();
    if (s.cols() != d) throw ShapeMismatch("is_acyclic: matrix not square");
    std::vector<int> indeg(d, 0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (s(i, j) != 0.0) ++indeg[j];
        }
    }
    std::deque<int> ready;
    for (int v = 0; v < d; ++v) {
        if (indeg[v] == 0) ready.push_back(v);
    }
    int seen = 0;
    while (!ready.empty()) {
        const int v = ready.front();
        ready.pop_front();
        ++seen;
        for (int j = 0; j < d; ++j) {
            if (s(v, j) != 0.0 && --indeg[j] == 0) ready.push_back(j);
        }
    }
    return seen == d;
}

bool is_acyclic(const Admg& g) {
    Matrix s(g.d, g.d);
    for (int i = 0; i < g.d; ++i) {
        for (int j = 0; j < g.d; ++j) s(i, j) = g.has_dir(i, j) ? 1.0 : 0.0;
    }
    return is_acyclic(s);
}

double acyclicity_penalty(const Matrix& w) {
    if (w.rows() != w.cols()) throw ShapeMismatch("acyclicity_penalty: matrix not square");
    return trace(expm(hadamard(w, w))) - w.rows();
}

Tensor acyclicity_penalty(Tape& tape, Tensor w) {
    if (w.rows != w.cols) throw ShapeMismatch("acyclicity_penalty: matrix not square");
    Tensor t = tape.trace_expm(tape.hadamard(w, w));
    return tape.sub(t, tape.constant_scalar(static_cast<double>(w.rows)));
}

LatentDag to_latent_dag(const Admg& g) {
    if (!is_acyclic(g)) {
        throw CyclicDirectedPart("to_latent_dag: directed part has a cycle");
    }
    LatentDag dag;
    dag.observed = g.d;
    dag.total = g.d + g.bidirected_edge_count();
    dag.children.assign(dag.total, {});
    dag.parents.assign(dag.total, {});
    auto link = [&](int from, int to) {
        dag.children[from].push_back(to);
        dag.parents[to].push_back(from);
    };
    for (int i = 0; i < g.d; ++i) {
        for (int j = 0; j < g.d; ++j) {
            if (g.has_dir(i, j)) link(i, j);
        }
    }
    int latent = g.d;
    for (int i = 0; i < g.d; ++i) {
        for (int j = i + 1; j < g.d; ++j) {
            if (g.has_bi(i, j)) {
                link(latent, i);
                link(latent, j);
                ++latent;
            }
        }
    }
    return dag;
}

bool d_separated(const LatentDag& g, int i, int j, const std::vector<int>& z) {
    auto check_vertex = [&](int v) {
        if (v < 0 || v >= g.total) {
            throw InvalidVertex("d_separated: vertex " + std::to_string(v) + " out of range");
        }
    };
    check_vertex(i);
    check_vertex(j);
    if (i == j) throw InvalidVertex("d_separated: i == j");
    std::vector<char> in_z(g.total, 0);
    for (int v : z) {
        check_vertex(v);
        if (v == i || v == j) {
            throw InvalidVertex("d_separated: conditioning set contains an endpoint");
        }
        in_z[v] = 1;
    }

    // anc_z[v]: v is in Z or has a descendant in Z. Colliders open iff this
    // holds at the collider.
    std::vector<char> anc_z = in_z;
    std::deque<int> queue;
    for (int v = 0; v < g.total; ++v) {
        if (anc_z[v]) queue.push_back(v);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int p : g.parents[v]) {
            if (!anc_z[p]) {
                anc_z[p] = 1;
                queue.push_back(p);
            }
        }
    }

    // Bayes-ball over (vertex, arrival direction) states. UP = travelling
    // towards parents (as if arrived from a child), DOWN = arrived from a
    // parent.
    constexpr int kUp = 0;
    constexpr int kDown = 1;
    std::vector<char> visited(static_cast<std::size_t>(g.total) * 2, 0);
    std::deque<std::pair<int, int>> frontier;
    frontier.emplace_back(i, kUp);
    visited[static_cast<std::size_t>(i) * 2 + kUp] = 1;
    while (!frontier.empty()) {
        const auto [v, dir] = frontier.front();
        frontier.pop_front();
        if (v == j) return false;
        auto visit = [&](int u, int d2) {
            char& seen = visited[static_cast<std::size_t>(u) * 2 + d2];
            if (!seen) {
                seen = 1;
                frontier.emplace_back(u, d2);
            }
        };
        if (dir == kUp) {
            if (!in_z[v]) {
                for (int p : g.parents[v]) visit(p, kUp);
                for (int c : g.children[v]) visit(c, kDown);
            }
        } else {
            if (!in_z[v]) {
                for (int c : g.children[v]) visit(c, kDown);
            }
            if (anc_z[v]) {
                for (int p : g.parents[v]) visit(p, kUp);
            }
        }
    }
    return true;
}

bool m_separated(const Admg& g, int i, int j, const std::vector<int>& z) {
    auto check_observed = [&](int v) {
        if (v < 0 || v >= g.d) {
            throw InvalidVertex("m_separated: vertex " + std::to_string(v) +
                                " is not an observed vertex");
        }
    };
    check_observed(i);
    check_observed(j);
    for (int v : z) check_observed(v);
    return d_separated(to_latent_dag(g), i, j, z);
}

Admg parse_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    int d = -1;
    Admg g;
    auto fail = [&](const std::string& what) -> void {
        throw SyntaxError("line " + std::to_string(lineno) + ": " + what);
    };
    auto check_vertex = [&](int v) {
        if (v < 0 || v >= d) {
            throw VertexOutOfRange("line " + std::to_string(lineno) + ": vertex " +
                                   std::to_string(v) + " outside [0," + std::to_string(d) + ")");
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (d < 0) {
            if (tok != "nodes") fail("expected `nodes <d>`");
            if (!(ls >> d) || d < 0) fail("bad vertex count");
            g = Admg::empty(d);
            continue;
        }
        if (tok != "d" && tok != "b") fail("expected edge kind `d` or `b`");
        int i = 0;
        int j = 0;
        if (!(ls >> i >> j)) fail("expected two vertex ids");
        std::string extra;
        if (ls >> extra) fail("trailing token `" + extra + "`");
        check_vertex(i);
        check_vertex(j);
        if (i == j) {
            throw SelfLoop("line " + std::to_string(lineno) + ": self loop on vertex " +
                           std::to_string(i));
        }
        if (tok == "d") {
            g.set_dir(i, j);
        } else {
            g.set_bi(i, j);
        }
    }
    if (d < 0) {
        lineno = lineno == 0 ? 1 : lineno;
        fail("missing `nodes <d>` header");
    }
    return g;
}

std::string serialize_edge_list(const Admg& g) {
    std::ostringstream out;
    out << "nodes " << g.d << "\n";
    for (int i = 0; i < g.d; ++i) {
        for (int j = 0; j < g.d; ++j) {
            if (g.has_dir(i, j)) out << "d " << i << " " << j << "\n";
        }
    }
    for (int i = 0; i < g.d; ++i) {
        for (int j = i + 1; j < g.d; ++j) {
            if (g.has_bi(i, j)) out << "b " << i << " " << j << "\n";
        }
    }
    return out.str();
}

}  // namespace fgancd
