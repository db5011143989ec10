#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aigsat/circuit.hpp"

namespace aigsat {

struct RandomGraph {
    int num_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // u < v, no duplicates

    bool adjacent(int u, int v) const;
};

struct SrPair {
    CnfFormula sat_instance;
    CnfFormula unsat_instance;
};

// Complete DPLL with unit propagation and pure-literal elimination. The
// returned assignment is verified against the formula before returning.
std::optional<Assignment> dpll_solve(const CnfFormula& f);

// Paired random k-SAT generation: grow a random formula one clause at a
// time (length 1 + Bernoulli(0.7) + Geometric(0.4), clamped to n) until it
// turns UNSAT; flipping one literal of the last clause restores SAT.
SrPair gen_sr(int n, uint64_t seed);

RandomGraph gen_graph(int n_min, int n_max, double edge_prob, uint64_t seed);

// CNF encodings; each is satisfiable iff the graph property holds
CnfFormula encode_coloring(const RandomGraph& g, int k);
CnfFormula encode_clique(const RandomGraph& g, int k);
CnfFormula encode_vertex_cover(const RandomGraph& g, int k);
CnfFormula encode_domset(const RandomGraph& g, int k);

// brute-force graph checkers (independent oracles for the encoders)
bool has_coloring(const RandomGraph& g, int k);
bool has_clique(const RandomGraph& g, int k);
bool has_vertex_cover(const RandomGraph& g, int k);
bool has_domset(const RandomGraph& g, int k);

struct BenchmarkEntry {
    std::string file;
    std::string kind;
    int n = 0;          // variable count (SR) or vertex count (graph kinds)
    int k = 0;          // parameter for graph kinds, 0 for SR
    uint64_t seed = 0;
    bool sat = false;   // oracle-verified tag
    int num_variables = 0;
    int num_clauses = 0;
};

struct BenchmarkManifest {
    std::string kind;
    uint64_t seed = 0;
    std::vector<BenchmarkEntry> entries;
};

// kinds: "sr" (paired SAT/UNSAT over n in [n_min,n_max]), "coloring",
// "clique", "vertex_cover", "domset". Writes DIMACS files into out_dir and
// returns the manifest (serialized separately as JSON lines).
BenchmarkManifest build_benchmark(const std::string& kind, int count, int n_min, int n_max,
                                  uint64_t seed, const std::string& out_dir);

std::string write_manifest(const BenchmarkManifest& m);

}  // namespace aigsat
