#pragma once

#include "fgancd/admg.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fgancd {

enum class Mark : std::uint8_t { None = 0, Circle, Arrow, Tail };

// Partial ancestral graph stored as an end-mark matrix: at(i, j) is the mark
// sitting at vertex j on the edge between i and j; None on both sides means
// the pair is non-adjacent.
struct Pag {
    int d = 0;
    std::vector<Mark> marks;

    static Pag empty(int d) {
        Pag p;
        p.d = d;
        p.marks.assign(static_cast<std::size_t>(d) * d, Mark::None);
        return p;
    }

    Mark at(int i, int j) const { return marks[static_cast<std::size_t>(i) * d + j]; }
    void set(int i, int j, Mark m) { marks[static_cast<std::size_t>(i) * d + j] = m; }
    bool adjacent(int i, int j) const { return at(i, j) != Mark::None; }

    int edge_count() const;
    int arrowhead_count() const;

    bool operator==(const Pag&) const = default;
};

// Separating sets found during the skeleton phase, keyed by unordered pair.
// A pair is present exactly when it is non-adjacent in the skeleton.
struct SepsetTable {
    std::map<std::pair<int, int>, std::vector<int>> sets;

    const std::vector<int>* find(int i, int j) const;
    bool contains(int i, int j, int v) const;
};

// FCI with exact graphical independence queries in place of statistical
// tests: exhaustive skeleton search (subsets in increasing size,
// lexicographic within a size), unshielded-collider orientation, then
// orientation rules R1-R4 to a fixpoint. Selection-bias rules do not apply
// here and the R8-R10 completions are intentionally omitted.
Pag fci_oracle(const Admg& g);
Pag fci_oracle(const Admg& g, SepsetTable& sepsets_out);

// Structural Hamming distance between PAGs: one unit per vertex pair whose
// adjacency differs, else one unit when the pair's two end marks differ.
int shd(const Pag& est, const Pag& truth);

// F1 over edge existence (unordered pairs), ignoring orientation. 1.0 when
// both skeletons are empty.
double skeleton_f1(const Pag& est, const Pag& truth);

// F1 over ordered end positions, positive = arrowhead. 1.0 when neither
// graph has an arrowhead.
double arrowhead_f1(const Pag& est, const Pag& truth);

// PAG text format: `nodes <d>` then `e <i> <mi> <mj> <j>` lines with marks
// in {c, a, t}, written with i < j.
Pag parse_pag(const std::string& text);
std::string serialize_pag(const Pag& p);

}  // namespace fgancd
