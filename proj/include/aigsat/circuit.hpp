#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aigsat {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CNF
// ---------------------------------------------------------------------------

struct Literal {
    int variable;  // 1-based
    bool negated;

    bool operator==(const Literal&) const = default;
};

using Clause = std::vector<Literal>;

struct CnfFormula {
    int num_variables = 0;
    std::vector<Clause> clauses;

    bool eval(const std::vector<uint8_t>& assignment) const;
};

// DIMACS CNF reader. Rejects malformed headers, out-of-range literals and
// empty clauses (an empty clause makes the formula trivially UNSAT).
CnfFormula parse_dimacs(const std::string& text);
std::string write_dimacs(const CnfFormula& f);

// ---------------------------------------------------------------------------
// AIG
// ---------------------------------------------------------------------------

enum class NodeKind : uint8_t { PI, AND2, NOT, CONST0 };

const char* node_kind_name(NodeKind k);

struct AigNode {
    NodeKind kind;
    int fanin0 = -1;  // NOT/AND2
    int fanin1 = -1;  // AND2 only
};

// Nodes are stored in topological order with dense 0-based ids; the PIs
// occupy ids [0, num_pis). Exactly one primary output.
struct AigCircuit {
    std::vector<AigNode> nodes;
    int num_pis = 0;
    int po = -1;

    int size() const { return static_cast<int>(nodes.size()); }
    bool is_pi(int id) const { return id < num_pis; }

    // per-node fanout counts / lists over the stored nodes
    std::vector<int> fanout_counts() const;
    std::vector<std::vector<int>> fanout_lists() const;

    int count_ands() const;

    // throws std::logic_error if ids are not topologically sorted / out of range
    void check_invariants() const;
};

using Assignment = std::vector<uint8_t>;  // one bit per PI

// Ternary per-node condition vector, values in {1, 0, -1}.
struct Mask {
    std::vector<int8_t> values;

    static Mask empty(const AigCircuit& c) { return Mask{std::vector<int8_t>(c.nodes.size(), 0)}; }
    static Mask po_condition(const AigCircuit& c);  // PO entry = 1, rest 0

    // PI entries may be -1/0/1; internal gates must be 0 except the PO entry
    // which may be 1. Throws std::invalid_argument otherwise.
    void validate(const AigCircuit& c) const;
};

// ---------------------------------------------------------------------------
// Construction (structural hashing built in)
// ---------------------------------------------------------------------------

// Builder applying AND(x,0)=0, AND(x,1)=x, AND(x,x)=x, AND(x,!x)=0,
// NOT(NOT x)=x and merging structurally identical gates on the fly.
class AigBuilder {
public:
    int add_pi();
    int add_const0();
    int add_and(int a, int b);
    int add_not(int a);
    int add_or(int a, int b);  // De Morgan: NOT(AND(NOT a, NOT b))

    // compacts to an AigCircuit: dangling gates removed, PIs first, dense
    // topological ids
    AigCircuit finish(int po) const;

    const std::vector<AigNode>& nodes() const { return nodes_; }
    int num_pis() const { return num_pis_; }

private:
    bool is_complement_pair(int a, int b) const;

    std::vector<AigNode> nodes_;
    int num_pis_ = 0;
    int const0_ = -1;
    std::unordered_map<uint64_t, int> and_hash_;
    std::unordered_map<int, int> not_hash_;
};

// PO evaluates to 1 exactly on satisfying assignments of f. Each clause is
// realized as NOT(AND of negated literals), clauses combined by a left-deep
// AND tree; structural hashing applies throughout.
AigCircuit cnf_to_aig(const CnfFormula& f);

// ---------------------------------------------------------------------------
// AIGER ASCII ("aag") I/O
// ---------------------------------------------------------------------------

// Complemented edges become explicit NOT nodes on parse and are re-absorbed
// on write. Latches and multiple outputs are rejected.
AigCircuit parse_aiger(const std::string& text);
std::string write_aiger(const AigCircuit& c);

// canonical text dump for golden tests: one node per line "id kind fanins"
std::string dump_circuit(const AigCircuit& c);

// ---------------------------------------------------------------------------
// Topology / statistics / evaluation
// ---------------------------------------------------------------------------

struct TopoInfo {
    std::vector<int> level;  // logic level: PI=0, AND=1+max(fanins), NOT=level(fanin)
    int depth = 0;           // level of the PO
};

TopoInfo topo_order(const AigCircuit& c);

// Mean over AND2 gates of max/min transitive fan-in cone size (cone size
// counts nodes of all kinds, inclusive of the fanin node). nullopt when the
// circuit has no AND2 node.
std::optional<double> balance_ratio(const AigCircuit& c);

// full node valuation under standard gate semantics
std::vector<uint8_t> evaluate(const AigCircuit& c, const Assignment& a);

inline uint8_t evaluate_po(const AigCircuit& c, const Assignment& a) {
    return evaluate(c, a)[c.po];
}

}  // namespace aigsat
