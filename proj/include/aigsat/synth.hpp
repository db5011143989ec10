#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aigsat/circuit.hpp"

namespace aigsat {

// ---------------------------------------------------------------------------
// Cuts and 4-input truth tables
// ---------------------------------------------------------------------------

struct Cut {
    int root = -1;
    std::vector<int> leaves;  // sorted ascending, 1..4 entries
};

// 16-bit table over up to 4 cut leaves; bit i = root value when the leaves
// take the binary expansion of i (leaf j -> bit j of i)
using TruthTable4 = uint16_t;

struct NpnTransform {
    std::array<uint8_t, 4> perm{0, 1, 2, 3};  // canonical input j comes from original input perm[j]
    uint8_t input_neg = 0;                    // bit j: negate canonical input j
    bool output_neg = false;
};

// f'(x0..x3) = out_neg ^ f(y) with y[perm[j]] = x[j] ^ ((input_neg>>j)&1)
TruthTable4 apply_npn(TruthTable4 t, const NpnTransform& tf);

// lexicographic minimum over all 4! * 2^4 * 2 = 768 transforms; the returned
// transform satisfies apply_npn(canonical, tf) == t
std::pair<TruthTable4, NpnTransform> npn_canonicalize(TruthTable4 t);

// number of distinct canonical representatives over all 65536 tables
int count_npn_classes();

// structural hashing / constant propagation; PO function unchanged,
// node count never increases
AigCircuit strash(const AigCircuit& c);

// per-node sets of non-dominated K-feasible cuts, smallest first, capped
std::vector<std::vector<Cut>> enumerate_cuts(const AigCircuit& c, int k = 4, int per_node_cap = 20);

// local exhaustive simulation of the cone between cut leaves and root
TruthTable4 cut_function(const AigCircuit& c, const Cut& cut);

// maximum fanout-free cone of root bounded by the cut leaves (the nodes
// deleted if root were re-expressed); includes root
std::vector<int> mffc(const AigCircuit& c, int root, const Cut& cut);

// ---------------------------------------------------------------------------
// Rewrite library
// ---------------------------------------------------------------------------

struct TemplateOp {
    bool is_and = false;  // otherwise NOT
    int arg0 = 0;         // and: args are operand indices; not: arg0 only
    int arg1 = 0;
};

// A small AIG over 4 formal inputs. Operand indices: 0..3 = formal inputs,
// 4 = constant 0, 5+i = output of ops[i].
struct Template {
    std::vector<TemplateOp> ops;
    int root = -1;       // operand index of the output
    int and_count = 0;
};

class RewriteLibrary {
public:
    // iterative-deepening enumeration of leaf-DAG structures up to
    // max_template_nodes AND2 gates; one minimal template per reachable
    // canonical class
    static RewriteLibrary build(int max_template_nodes = 7);

    const Template* find(TruthTable4 canonical) const;
    size_t size() const { return templates_.size(); }
    int budget() const { return budget_; }

    std::string serialize() const;  // versioned JSON with a content checksum
    static RewriteLibrary deserialize(const std::string& text);

private:
    std::map<TruthTable4, Template> templates_;
    int budget_ = 0;
};

// process-wide library built once on first use
const RewriteLibrary& default_rewrite_library();

// ---------------------------------------------------------------------------
// Optimization passes
// ---------------------------------------------------------------------------

struct RewriteStats {
    int nodes_before = 0;
    int nodes_after = 0;
    int replacements = 0;
};

// DAG-aware rewriting: per AND root in topological order, try every
// enumerated cut against the library and apply the best strictly
// positive-gain replacement. Function preserved, node count never grows.
std::pair<AigCircuit, RewriteStats> rewrite_pass(const AigCircuit& c,
                                                 const RewriteLibrary& lib = default_rewrite_library());

// level-minimizing reconstruction of maximal single-fanout AND trees
// (Huffman pairing on operand levels); depth never increases
AigCircuit balance_pass(const AigCircuit& c);

struct OptStats {
    int nodes_before = 0, nodes_after = 0;
    int depth_before = 0, depth_after = 0;
    std::optional<double> br_before, br_after;
};

// the fixed pipeline: (rewrite; balance) three times
std::pair<AigCircuit, OptStats> optimize(const AigCircuit& c,
                                         const RewriteLibrary& lib = default_rewrite_library());

}  // namespace aigsat
