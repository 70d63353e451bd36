#include "fgancd/pag.hpp"

#include "fgancd/errors.hpp"

#include <algorithm>
#include <sstream>

namespace fgancd {

namespace {

// Lexicographic enumeration of size-k index combinations from a sorted pool.
bool next_combination(std::vector<int>& idx, int pool_size) {
    const int k = static_cast<int>(idx.size());
    for (int pos = k - 1; pos >= 0; --pos) {
        if (idx[pos] < pool_size - (k - pos)) {
            ++idx[pos];
            for (int q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

int Pag::edge_count() const {
    int n = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) n += adjacent(i, j);
    }
    return n;
}

int Pag::arrowhead_count() const {
    int n = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) n += at(i, j) == Mark::Arrow;
    }
    return n;
}

const std::vector<int>* SepsetTable::find(int i, int j) const {
    const auto it = sets.find({std::min(i, j), std::max(i, j)});
    return it == sets.end() ? nullptr : &it->second;
}

bool SepsetTable::contains(int i, int j, int v) const {
    const std::vector<int>* s = find(i, j);
    return s != nullptr && std::find(s->begin(), s->end(), v) != s->end();
}

namespace {

// Skeleton + sepsets by exhaustive oracle queries over all subsets of the
// remaining vertices, smallest first.
void build_skeleton(const Admg& g, Pag& p, SepsetTable& sepsets) {
    const int d = g.d;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            std::vector<int> pool;
            pool.reserve(d - 2);
            for (int v = 0; v < d; ++v) {
                if (v != i && v != j) pool.push_back(v);
            }
            bool separated = false;
            for (int size = 0; size <= static_cast<int>(pool.size()) && !separated; ++size) {
                std::vector<int> idx(size);
                for (int q = 0; q < size; ++q) idx[q] = q;
                do {
                    std::vector<int> z(size);
                    for (int q = 0; q < size; ++q) z[q] = pool[idx[q]];
                    if (m_separated(g, i, j, z)) {
                        sepsets.sets[{i, j}] = std::move(z);
                        separated = true;
                        break;
                    }
                } while (next_combination(idx, static_cast<int>(pool.size())));
            }
            if (!separated) {
                p.set(i, j, Mark::Circle);
                p.set(j, i, Mark::Circle);
            }
        }
    }
}

void orient_colliders(Pag& p, const SepsetTable& sepsets) {
    const int d = p.d;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < d; ++i) {
            if (i == k || !p.adjacent(i, k)) continue;
            for (int j = i + 1; j < d; ++j) {
                if (j == k || !p.adjacent(j, k) || p.adjacent(i, j)) continue;
                if (!sepsets.contains(i, j, k)) {
                    p.set(i, k, Mark::Arrow);
                    p.set(j, k, Mark::Arrow);
                }
            }
        }
    }
}

bool is_parent(const Pag& p, int a, int b) {
    return p.at(a, b) == Mark::Arrow && p.at(b, a) == Mark::Tail;
}

// R1: a *-> b o-* c with a, c non-adjacent  =>  b -> c.
bool rule_r1(Pag& p) {
    bool changed = false;
    const int d = p.d;
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            if (a == b || p.at(a, b) != Mark::Arrow) continue;
            for (int c = 0; c < d; ++c) {
                if (c == a || c == b || !p.adjacent(b, c) || p.adjacent(a, c)) continue;
                if (p.at(c, b) == Mark::Circle) {
                    p.set(c, b, Mark::Tail);
                    p.set(b, c, Mark::Arrow);
                    changed = true;
                }
            }
        }
    }
    return changed;
}

// R2: (a -> b *-> c) or (a *-> b -> c), with a *-o c  =>  a *-> c.
bool rule_r2(Pag& p) {
    bool changed = false;
    const int d = p.d;
    for (int a = 0; a < d; ++a) {
        for (int c = 0; c < d; ++c) {
            if (a == c || p.at(a, c) != Mark::Circle) continue;
            for (int b = 0; b < d; ++b) {
                if (b == a || b == c) continue;
                const bool chain1 = is_parent(p, a, b) && p.at(b, c) == Mark::Arrow;
                const bool chain2 = p.at(a, b) == Mark::Arrow && is_parent(p, b, c);
                if (chain1 || chain2) {
                    p.set(a, c, Mark::Arrow);
                    changed = true;
                    break;
                }
            }
        }
    }
    return changed;
}

// R3: a *-> b <-* c, a *-o m o-* c, a, c non-adjacent, m *-o b  =>  m *-> b.
bool rule_r3(Pag& p) {
    bool changed = false;
    const int d = p.d;
    for (int b = 0; b < d; ++b) {
        for (int m = 0; m < d; ++m) {
            if (m == b || p.at(m, b) != Mark::Circle) continue;
            bool fired = false;
            for (int a = 0; a < d && !fired; ++a) {
                if (a == b || a == m || p.at(a, b) != Mark::Arrow) continue;
                if (p.at(a, m) != Mark::Circle) continue;
                for (int c = 0; c < d; ++c) {
                    if (c == a || c == b || c == m) continue;
                    if (p.at(c, b) != Mark::Arrow) continue;
                    if (p.at(c, m) != Mark::Circle) continue;
                    if (p.adjacent(a, c)) continue;
                    p.set(m, b, Mark::Arrow);
                    changed = true;
                    fired = true;
                    break;
                }
            }
        }
    }
    return changed;
}

// Depth-first search for a discriminating path <theta, ..., alpha, beta,
// gamma> for beta: every vertex strictly between theta and beta is a
// collider on the path and a parent of gamma. Returns theta or -1.
int find_discriminating_theta(const Pag& p, int alpha, int beta, int gamma,
                              std::vector<char>& on_path, int current) {
    const int d = p.d;
    for (int w = 0; w < d; ++w) {
        if (on_path[w] || w == gamma || !p.adjacent(w, current)) continue;
        if (p.at(w, current) != Mark::Arrow) continue;  // collider half at `current`
        if (!p.adjacent(w, gamma)) {
            return w;  // endpoint found
        }
        // Interior extension: w must be a collider (towards current) and a
        // parent of gamma.
        if (p.at(current, w) == Mark::Arrow && is_parent(p, w, gamma)) {
            on_path[w] = 1;
            const int theta = find_discriminating_theta(p, alpha, beta, gamma, on_path, w);
            on_path[w] = 0;
            if (theta >= 0) return theta;
        }
    }
    return -1;
}

// R4: discriminating path rule.
bool rule_r4(Pag& p, const SepsetTable& sepsets) {
    bool changed = false;
    const int d = p.d;
    for (int beta = 0; beta < d; ++beta) {
        for (int gamma = 0; gamma < d; ++gamma) {
            if (gamma == beta || p.at(gamma, beta) != Mark::Circle) continue;
            for (int alpha = 0; alpha < d; ++alpha) {
                if (alpha == beta || alpha == gamma) continue;
                if (!p.adjacent(alpha, beta) || p.at(beta, alpha) != Mark::Arrow) continue;
                if (!is_parent(p, alpha, gamma)) continue;
                std::vector<char> on_path(d, 0);
                on_path[alpha] = on_path[beta] = 1;
                const int theta = find_discriminating_theta(p, alpha, beta, gamma, on_path, alpha);
                if (theta < 0) continue;
                if (sepsets.contains(theta, gamma, beta)) {
                    p.set(gamma, beta, Mark::Tail);
                    p.set(beta, gamma, Mark::Arrow);
                } else {
                    p.set(beta, alpha, Mark::Arrow);
                    p.set(alpha, beta, Mark::Arrow);
                    p.set(beta, gamma, Mark::Arrow);
                    p.set(gamma, beta, Mark::Arrow);
                }
                changed = true;
                break;
            }
        }
    }
    return changed;
}

}  // namespace

Pag fci_oracle(const Admg& g, SepsetTable& sepsets_out) {
    validate(g);
    if (!is_acyclic(g)) {
        throw CyclicDirectedPart("fci_oracle: directed part has a cycle");
    }
    Pag p = Pag::empty(g.d);
    sepsets_out.sets.clear();
    build_skeleton(g, p, sepsets_out);
    orient_colliders(p, sepsets_out);
    bool changed = true;
    while (changed) {
        changed = false;
        changed |= rule_r1(p);
        changed |= rule_r2(p);
        changed |= rule_r3(p);
        changed |= rule_r4(p, sepsets_out);
    }
    return p;
}

Pag fci_oracle(const Admg& g) {
    SepsetTable sepsets;
    return fci_oracle(g, sepsets);
}

int shd(const Pag& est, const Pag& truth) {
    if (est.d != truth.d) {
        throw DimensionMismatch("shd: " + std::to_string(est.d) + " vs " +
                                std::to_string(truth.d) + " vertices");
    }
    int dist = 0;
    for (int i = 0; i < est.d; ++i) {
        for (int j = i + 1; j < est.d; ++j) {
            const bool adj_e = est.adjacent(i, j);
            const bool adj_t = truth.adjacent(i, j);
            if (adj_e != adj_t) {
                ++dist;
            } else if (adj_e) {
                if (est.at(i, j) != truth.at(i, j) || est.at(j, i) != truth.at(j, i)) ++dist;
            }
        }
    }
    return dist;
}

namespace {

double f1_from_counts(long tp, long fp, long fn) {
    if (tp + fp + fn == 0) return 1.0;
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / (tp + fp);
    const double recall = static_cast<double>(tp) / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double skeleton_f1(const Pag& est, const Pag& truth) {
    if (est.d != truth.d) {
        throw DimensionMismatch("skeleton_f1: vertex counts differ");
    }
    long tp = 0;
    long fp = 0;
    long fn = 0;
    for (int i = 0; i < est.d; ++i) {
        for (int j = i + 1; j < est.d; ++j) {
            const bool e = est.adjacent(i, j);
            const bool t = truth.adjacent(i, j);
            tp += e && t;
            fp += e && !t;
            fn += !e && t;
        }
    }
    return f1_from_counts(tp, fp, fn);
}

double arrowhead_f1(const Pag& est, const Pag& truth) {
    if (est.d != truth.d) {
        throw DimensionMismatch("arrowhead_f1: vertex counts differ");
    }
    long tp = 0;
    long fp = 0;
    long fn = 0;
    for (int i = 0; i < est.d; ++i) {
        for (int j = 0; j < est.d; ++j) {
            if (i == j) continue;
            const bool e = est.at(i, j) == Mark::Arrow;
            const bool t = truth.at(i, j) == Mark::Arrow;
            tp += e && t;
            fp += e && !t;
            fn += !e && t;
        }
    }
    return f1_from_counts(tp, fp, fn);
}

namespace {

char mark_char(Mark m) {
    switch (m) {
        case Mark::Circle: return 'c';
        case Mark::Arrow: return 'a';
        case Mark::Tail: return 't';
        case Mark::None: break;
    }
    throw SyntaxError("serialize_pag: edge with a None mark");
}

Mark mark_from_char(char c, int lineno) {
    switch (c) {
        case 'c': return Mark::Circle;
        case 'a': return Mark::Arrow;
        case 't': return Mark::Tail;
        default:
            throw SyntaxError("line " + std::to_string(lineno) + ": bad mark `" +
                              std::string(1, c) + "`");
    }
}

}  // namespace

Pag parse_pag(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    int d = -1;
    Pag p;
    auto fail = [&](const std::string& what) -> void {
        throw SyntaxError("line " + std::to_string(lineno) + ": " + what);
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
            p = Pag::empty(d);
            continue;
        }
        if (tok != "e") fail("expected edge line `e <i> <mi> <mj> <j>`");
        int i = 0;
        int j = 0;
        std::string mi;
        std::string mj;
        if (!(ls >> i >> mi >> mj >> j)) fail("expected `e <i> <mi> <mj> <j>`");
        if (mi.size() != 1 || mj.size() != 1) fail("marks must be single characters");
        if (i < 0 || i >= d || j < 0 || j >= d) {
            throw VertexOutOfRange("line " + std::to_string(lineno) + ": vertex outside range");
        }
        if (i == j) {
            throw SelfLoop("line " + std::to_string(lineno) + ": self loop");
        }
        p.set(j, i, mark_from_char(mi[0], lineno));
        p.set(i, j, mark_from_char(mj[0], lineno));
    }
    if (d < 0) {
        lineno = lineno == 0 ? 1 : lineno;
        throw SyntaxError("line " + std::to_string(lineno) + ": missing `nodes <d>` header");
    }
    return p;
}

std::string serialize_pag(const Pag& p) {
    std::ostringstream out;
    out << "nodes " << p.d << "\n";
    for (int i = 0; i < p.d; ++i) {
        for (int j = i + 1; j < p.d; ++j) {
            if (!p.adjacent(i, j)) continue;
            out << "e " << i << " " << mark_char(p.at(j, i)) << " " << mark_char(p.at(i, j))
                << " " << j << "\n";
        }
    }
    return out.str();
}

}  // namespace fgancd
