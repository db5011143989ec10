#include "aigsat/circuit.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace aigsat {

// ---------------------------------------------------------------------------
// CNF
// ---------------------------------------------------------------------------

bool CnfFormula::eval(const std::vector<uint8_t>& assignment) const {
    for (const Clause& cl : clauses) {
        bool sat = false;
        for (const Literal& lit : cl) {
            bool v = assignment[lit.variable - 1] != 0;
            if (v != lit.negated) { sat = true; break; }
        }
        if (!sat) return false;
    }
    return true;
}

CnfFormula parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CnfFormula f;
    bool header_seen = false;
    int declared_clauses = 0;
    Clause current;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos) continue;
        if (line[i] == 'c') continue;
        if (line[i] == 'p') {
            std::istringstream hs(line.substr(i));
            std::string p, cnf;
            if (!(hs >> p >> cnf >> f.num_variables >> declared_clauses) || cnf != "cnf" ||
                f.num_variables < 0 || declared_clauses < 0) {
                throw ParseError("malformed DIMACS header: " + line);
            }
            header_seen = true;
            continue;
        }
        if (!header_seen) throw ParseError("clause before 'p cnf' header");
        std::istringstream ls(line.substr(i));
        long v;
        while (ls >> v) {
            if (v == 0) {
                if (current.empty()) throw ParseError("empty clause");
                f.clauses.push_back(current);
                current.clear();
            } else {
                long var = v < 0 ? -v : v;
                if (var > f.num_variables)
                    throw ParseError("literal " + std::to_string(v) + " exceeds declared variable count");
                current.push_back(Literal{static_cast<int>(var), v < 0});
            }
        }
        if (!ls.eof()) throw ParseError("non-integer token in clause line: " + line);
    }
    if (!header_seen) throw ParseError("missing 'p cnf' header");
    if (!current.empty()) f.clauses.push_back(current);  // tolerate missing trailing 0
    return f;
}

std::string write_dimacs(const CnfFormula& f) {
    std::ostringstream out;
    out << "p cnf " << f.num_variables << ' ' << f.clauses.size() << '\n';
    for (const Clause& cl : f.clauses) {
        for (const Literal& lit : cl) out << (lit.negated ? -lit.variable : lit.variable) << ' ';
        out << "0\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// AIG basics
// ---------------------------------------------------------------------------

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::PI: return "PI";
        case NodeKind::AND2: return "AND2";
        case NodeKind::NOT: return "NOT";
        case NodeKind::CONST0: return "CONST0";
    }
    return "?";
}

std::vector<int> AigCircuit::fanout_counts() const {
    std::vector<int> fc(nodes.size(), 0);
    for (const AigNode& n : nodes) {
        if (n.kind == NodeKind::NOT) fc[n.fanin0]++;
        if (n.kind == NodeKind::AND2) { fc[n.fanin0]++; fc[n.fanin1]++; }
    }
    return fc;
}

std::vector<std::vector<int>> AigCircuit::fanout_lists() const {
    std::vector<std::vector<int>> fo(nodes.size());
    for (int i = 0; i < size(); ++i) {
        const AigNode& n = nodes[i];
        if (n.kind == NodeKind::NOT) fo[n.fanin0].push_back(i);
        if (n.kind == NodeKind::AND2) { fo[n.fanin0].push_back(i); fo[n.fanin1].push_back(i); }
    }
    return fo;
}

int AigCircuit::count_ands() const {
    int k = 0;
    for (const AigNode& n : nodes) k += n.kind == NodeKind::AND2;
    return k;
}

void AigCircuit::check_invariants() const {
    if (po < 0 || po >= size()) throw std::logic_error("PO out of range");
    for (int i = 0; i < size(); ++i) {
        const AigNode& n = nodes[i];
        switch (n.kind) {
            case NodeKind::PI:
                if (i >= num_pis) throw std::logic_error("PI not in leading block");
                break;
            case NodeKind::CONST0:
                break;
            case NodeKind::NOT:
                if (n.fanin0 < 0 || n.fanin0 >= i) throw std::logic_error("NOT fanin not topological");
                break;
            case NodeKind::AND2:
                if (n.fanin0 < 0 || n.fanin0 >= i || n.fanin1 < 0 || n.fanin1 >= i)
                    throw std::logic_error("AND2 fanin not topological");
                break;
        }
        if (i < num_pis && n.kind != NodeKind::PI) throw std::logic_error("non-PI in PI block");
    }
}

Mask Mask::po_condition(const AigCircuit& c) {
    Mask m = Mask::empty(c);
    m.values[c.po] = 1;
    return m;
}

void Mask::validate(const AigCircuit& c) const {
    if (static_cast<int>(values.size()) != c.size())
        throw std::invalid_argument("mask length does not match node count");
    for (int i = 0; i < c.size(); ++i) {
        int8_t v = values[i];
        if (v < -1 || v > 1) throw std::invalid_argument("mask entry outside {-1,0,1}");
        if (!c.is_pi(i)) {
            if (i == c.po) {
                if (v == -1) throw std::invalid_argument("PO mask may only be 0 or 1");
            } else if (v != 0) {
                throw std::invalid_argument("internal gate mask must be 0");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

int AigBuilder::add_pi() {
    nodes_.push_back(AigNode{NodeKind::PI});
    ++num_pis_;
    return static_cast<int>(nodes_.size()) - 1;
}

int AigBuilder::add_const0() {
    if (const0_ < 0) {
        nodes_.push_back(AigNode{NodeKind::CONST0});
        const0_ = static_cast<int>(nodes_.size()) - 1;
    }
    return const0_;
}

bool AigBuilder::is_complement_pair(int a, int b) const {
    return (nodes_[a].kind == NodeKind::NOT && nodes_[a].fanin0 == b) ||
           (nodes_[b].kind == NodeKind::NOT && nodes_[b].fanin0 == a);
}

int AigBuilder::add_not(int a) {
    if (nodes_[a].kind == NodeKind::NOT) return nodes_[a].fanin0;  // NOT(NOT x) = x
    auto it = not_hash_.find(a);
    if (it != not_hash_.end()) return it->second;
    nodes_.push_back(AigNode{NodeKind::NOT, a});
    int id = static_cast<int>(nodes_.size()) - 1;
    not_hash_.emplace(a, id);
    return id;
}

int AigBuilder::add_and(int a, int b) {
    if (a == b) return a;                        // AND(x,x) = x
    if (is_complement_pair(a, b)) return add_const0();  // AND(x,!x) = 0
    // constants: AND(x,0)=0, AND(x,1)=x
    if (a == const0_ || b == const0_) return add_const0();
    if (const0_ >= 0) {
        if (nodes_[a].kind == NodeKind::NOT && nodes_[a].fanin0 == const0_) return b;
        if (nodes_[b].kind == NodeKind::NOT && nodes_[b].fanin0 == const0_) return a;
    }
    if (a > b) std::swap(a, b);
    uint64_t key = (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
    auto it = and_hash_.find(key);
    if (it != and_hash_.end()) return it->second;
    nodes_.push_back(AigNode{NodeKind::AND2, a, b});
    int id = static_cast<int>(nodes_.size()) - 1;
    and_hash_.emplace(key, id);
    return id;
}

int AigBuilder::add_or(int a, int b) { return add_not(add_and(add_not(a), add_not(b))); }

AigCircuit AigBuilder::finish(int po) const {
    if (po < 0 || po >= static_cast<int>(nodes_.size())) throw std::logic_error("invalid PO id");
    // keep all PIs plus everything reachable from the PO
    std::vector<uint8_t> keep(nodes_.size(), 0);
    std::vector<int> stack{po};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (keep[v]) continue;
        keep[v] = 1;
        const AigNode& n = nodes_[v];
        if (n.kind == NodeKind::NOT) stack.push_back(n.fanin0);
        if (n.kind == NodeKind::AND2) { stack.push_back(n.fanin0); stack.push_back(n.fanin1); }
    }
    AigCircuit c;
    std::vector<int> remap(nodes_.size(), -1);
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (nodes_[i].kind != NodeKind::PI) continue;
        remap[i] = c.size();
        c.nodes.push_back(nodes_[i]);
    }
    c.num_pis = c.size();
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (nodes_[i].kind == NodeKind::PI || !keep[i]) continue;
        AigNode n = nodes_[i];
        if (n.kind == NodeKind::NOT) n.fanin0 = remap[n.fanin0];
        if (n.kind == NodeKind::AND2) { n.fanin0 = remap[n.fanin0]; n.fanin1 = remap[n.fanin1]; }
        remap[i] = c.size();
        c.nodes.push_back(n);
    }
    c.po = remap[po];
    c.check_invariants();
    return c;
}

AigCircuit cnf_to_aig(const CnfFormula& f) {
    AigBuilder b;
    std::vector<int> pis(f.num_variables);
    for (int i = 0; i < f.num_variables; ++i) pis[i] = b.add_pi();

    int conj = -1;
    for (const Clause& cl : f.clauses) {
        // clause = NOT(AND of negated literals)
        int neg_tree = -1;
        for (const Literal& lit : cl) {
            int l = pis[lit.variable - 1];
            if (!lit.negated) l = b.add_not(l);
            neg_tree = neg_tree < 0 ? l : b.add_and(neg_tree, l);
        }
        int clause_node = b.add_not(neg_tree);
        conj = conj < 0 ? clause_node : b.add_and(conj, clause_node);
    }
    if (conj < 0) {
        // empty formula is trivially satisfied: PO = NOT(const0)
        conj = b.add_not(b.add_const0());
    }
    return b.finish(conj);
}

// ---------------------------------------------------------------------------
// AIGER ASCII
// ---------------------------------------------------------------------------

AigCircuit parse_aiger(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    long m, i, l, o, a;
    if (!(in >> magic >> m >> i >> l >> o >> a)) throw ParseError("malformed aag header");
    if (magic != "aag") throw ParseError("bad magic: expected 'aag'");
    if (l != 0) throw ParseError("latches are not supported");
    if (o != 1) throw ParseError("exactly one output is required");
    if (m < i + l + a) throw ParseError("inconsistent aag header counts");

    std::vector<long> input_lits(i);
    for (long k = 0; k < i; ++k) {
        if (!(in >> input_lits[k])) throw ParseError("truncated input section");
        if (input_lits[k] != 2 * (k + 1)) throw ParseError("non-canonical input literal numbering");
    }
    long out_lit;
    if (!(in >> out_lit)) throw ParseError("truncated output section");
    struct AndRow { long lhs, rhs0, rhs1; };
    std::vector<AndRow> ands(a);
    long prev_lhs = 2 * i;
    for (long k = 0; k < a; ++k) {
        if (!(in >> ands[k].lhs >> ands[k].rhs0 >> ands[k].rhs1)) throw ParseError("truncated and section");
        if (ands[k].lhs % 2 != 0) throw ParseError("and gate lhs must be even");
        if (ands[k].lhs <= prev_lhs) throw ParseError("non-monotone node numbering");
        if (ands[k].rhs0 >= ands[k].lhs || ands[k].rhs1 >= ands[k].lhs)
            throw ParseError("and gate rhs must precede lhs");
        prev_lhs = ands[k].lhs;
    }

    AigBuilder b;
    std::unordered_map<long, int> var_node;  // aiger variable (lit/2) -> node id
    for (long k = 0; k < i; ++k) var_node[k + 1] = b.add_pi();

    // resolves a literal to a node, inserting NOT / CONST0 as needed
    auto lit_node = [&](long lit) -> int {
        if (lit == 0) return b.add_const0();
        if (lit == 1) return b.add_not(b.add_const0());
        auto it = var_node.find(lit / 2);
        if (it == var_node.end()) throw ParseError("undefined literal " + std::to_string(lit));
        int n = it->second;
        return (lit % 2) ? b.add_not(n) : n;
    };

    for (const AndRow& r : ands) var_node[r.lhs / 2] = b.add_and(lit_node(r.rhs0), lit_node(r.rhs1));
    return b.finish(lit_node(out_lit));
}

std::string write_aiger(const AigCircuit& c) {
    // literal per node; NOT nodes collapse onto their fanin's literal
    std::vector<long> lit(c.size(), -1);
    long next_var = 0;
    for (int v = 0; v < c.num_pis; ++v) lit[v] = 2 * (++next_var);
    struct AndRow { long lhs, rhs0, rhs1; };
    std::vector<AndRow> rows;
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI: break;
            case NodeKind::CONST0: lit[v] = 0; break;
            case NodeKind::NOT: lit[v] = lit[n.fanin0] ^ 1; break;
            case NodeKind::AND2: {
                lit[v] = 2 * (++next_var);
                rows.push_back(AndRow{lit[v], lit[n.fanin0], lit[n.fanin1]});
                break;
            }
        }
    }
    std::ostringstream out;
    out << "aag " << next_var << ' ' << c.num_pis << " 0 1 " << rows.size() << '\n';
    for (int v = 0; v < c.num_pis; ++v) out << lit[v] << '\n';
    out << lit[c.po] << '\n';
    for (const AndRow& r : rows) out << r.lhs << ' ' << r.rhs0 << ' ' << r.rhs1 << '\n';
    return out.str();
}

std::string dump_circuit(const AigCircuit& c) {
    std::ostringstream out;
    out << "aig " << c.size() << ' ' << c.num_pis << ' ' << c.po << '\n';
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        out << v << ' ' << node_kind_name(n.kind);
        if (n.kind == NodeKind::NOT) out << ' ' << n.fanin0;
        if (n.kind == NodeKind::AND2) out << ' ' << n.fanin0 << ' ' << n.fanin1;
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Topology / stats / evaluation
// ---------------------------------------------------------------------------

TopoInfo topo_order(const AigCircuit& c) {
    TopoInfo t;
    t.level.assign(c.size(), 0);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        if (n.kind == NodeKind::AND2)
            t.level[v] = 1 + std::max(t.level[n.fanin0], t.level[n.fanin1]);
        else if (n.kind == NodeKind::NOT)
            t.level[v] = t.level[n.fanin0];  // inverters are free
    }
    t.depth = t.level[c.po];
    return t;
}

namespace {

// cone size (all node kinds, inclusive) via DFS with a stamp array
int cone_size(const AigCircuit& c, int root, std::vector<int>& stamp, int tick) {
    int count = 0;
    std::vector<int> stack{root};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (stamp[v] == tick) continue;
        stamp[v] = tick;
        ++count;
        const AigNode& n = c.nodes[v];
        if (n.kind == NodeKind::NOT) stack.push_back(n.fanin0);
        if (n.kind == NodeKind::AND2) { stack.push_back(n.fanin0); stack.push_back(n.fanin1); }
    }
    return count;
}

}  // namespace

std::optional<double> balance_ratio(const AigCircuit& c) {
    std::vector<int> stamp(c.size(), -1);
    int tick = 0;
    double sum = 0;
    int ands = 0;
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        if (n.kind != NodeKind::AND2) continue;
        int s0 = cone_size(c, n.fanin0, stamp, tick++);
        int s1 = cone_size(c, n.fanin1, stamp, tick++);
        int lo = std::max(1, std::min(s0, s1));
        int hi = std::max(s0, s1);
        sum += static_cast<double>(hi) / lo;
        ++ands;
    }
    if (ands == 0) return std::nullopt;
    return sum / ands;
}

std::vector<uint8_t> evaluate(const AigCircuit& c, const Assignment& a) {
    if (static_cast<int>(a.size()) != c.num_pis)
        throw std::invalid_argument("assignment length does not match PI count");
    std::vector<uint8_t> val(c.size(), 0);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI: val[v] = a[v] ? 1 : 0; break;
            case NodeKind::CONST0: val[v] = 0; break;
            case NodeKind::NOT: val[v] = val[n.fanin0] ^ 1; break;
            case NodeKind::AND2: val[v] = val[n.fanin0] & val[n.fanin1]; break;
        }
    }
    return val;
}

}  // namespace aigsat
