#include "aigsat/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "aigsat/rng.hpp"
#include "json.hpp"

namespace aigsat {

bool RandomGraph::adjacent(int u, int v) const {
    if (u > v) std::swap(u, v);
    return std::find(edges.begin(), edges.end(), std::make_pair(u, v)) != edges.end();
}

// ---------------------------------------------------------------------------
// DPLL
// ---------------------------------------------------------------------------

namespace {

enum : int8_t { kUnset = 0, kTrue = 1, kFalse = -1 };

bool lit_true(const Literal& l, const std::vector<int8_t>& a) {
    return a[l.variable - 1] == (l.negated ? kFalse : kTrue);
}
bool lit_false(const Literal& l, const std::vector<int8_t>& a) {
    return a[l.variable - 1] == (l.negated ? kTrue : kFalse);
}

// unit propagation + pure literal elimination; false on conflict
bool propagate(const CnfFormula& f, std::vector<int8_t>& a) {
    bool again = true;
    while (again) {
        again = false;
        for (const Clause& cl : f.clauses) {
            int unassigned = 0;
            const Literal* unit = nullptr;
            bool sat = false;
            for (const Literal& l : cl) {
                if (lit_true(l, a)) { sat = true; break; }
                if (!lit_false(l, a)) { ++unassigned; unit = &l; }
            }
            if (sat) continue;
            if (unassigned == 0) return false;
            if (unassigned == 1) {
                a[unit->variable - 1] = unit->negated ? kFalse : kTrue;
                again = true;
            }
        }
        std::vector<uint8_t> pos(f.num_variables, 0), neg(f.num_variables, 0);
        for (const Clause& cl : f.clauses) {
            bool sat = false;
            for (const Literal& l : cl) if (lit_true(l, a)) { sat = true; break; }
            if (sat) continue;
            for (const Literal& l : cl) {
                if (lit_false(l, a)) continue;
                (l.negated ? neg : pos)[l.variable - 1] = 1;
            }
        }
        for (int v = 0; v < f.num_variables; ++v) {
            if (a[v] != kUnset) continue;
            if (pos[v] && !neg[v]) { a[v] = kTrue; again = true; }
            else if (neg[v] && !pos[v]) { a[v] = kFalse; again = true; }
        }
    }
    return true;
}

bool all_satisfied(const CnfFormula& f, const std::vector<int8_t>& a) {
    for (const Clause& cl : f.clauses) {
        bool sat = false;
        for (const Literal& l : cl) if (lit_true(l, a)) { sat = true; break; }
        if (!sat) return false;
    }
    return true;
}

bool dpll(const CnfFormula& f, std::vector<int8_t>& a) {
    if (!propagate(f, a)) return false;
    if (all_satisfied(f, a)) return true;
    int branch = -1;
    for (int v = 0; v < f.num_variables; ++v)
        if (a[v] == kUnset) { branch = v; break; }
    if (branch < 0) return false;  // fully assigned but some clause unsatisfied
    for (int8_t val : {kTrue, kFalse}) {
        std::vector<int8_t> saved = a;
        a[branch] = val;
        if (dpll(f, a)) return true;
        a = std::move(saved);
    }
    return false;
}

}  // namespace

std::optional<Assignment> dpll_solve(const CnfFormula& f) {
    std::vector<int8_t> a(f.num_variables, kUnset);
    if (!dpll(f, a)) return std::nullopt;
    Assignment out(f.num_variables);
    for (int v = 0; v < f.num_variables; ++v) out[v] = a[v] == kTrue ? 1 : 0;
    if (!f.eval(out)) throw std::logic_error("DPLL produced a non-satisfying assignment");
    return out;
}

// ---------------------------------------------------------------------------
// SR(n)
// ---------------------------------------------------------------------------

namespace {

// geometric number of trials until first success (support {1,2,...}, mean 1/p)
int geometric_trials(SplitMix64& gen, double p) {
    double u = gen.next_u01();
    return 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

Clause random_clause(SplitMix64& gen, int n) {
    int k = 1 + (gen.next_bool(0.7) ? 1 : 0) + geometric_trials(gen, 0.4);
    k = std::min(k, n);
    std::vector<int> vars(n);
    for (int i = 0; i < n; ++i) vars[i] = i + 1;
    Clause cl;
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(gen.next_below(n - i));
        std::swap(vars[i], vars[j]);
        cl.push_back(Literal{vars[i], gen.next_bool(0.5)});
    }
    return cl;
}

}  // namespace

SrPair gen_sr(int n, uint64_t seed) {
    if (n < 3) throw std::invalid_argument("SR(n) requires n >= 3");
    SplitMix64 gen(seed);
    CnfFormula f;
    f.num_variables = n;
    while (true) {
        f.clauses.push_back(random_clause(gen, n));
        if (!dpll_solve(f)) break;
    }
    SrPair pair;
    pair.unsat_instance = f;
    pair.sat_instance = f;
    // every satisfying assignment of the previous formula falsifies the last
    // clause, so flipping any of its literals makes the formula satisfiable
    Literal& flip = pair.sat_instance.clauses.back().front();
    flip.negated = !flip.negated;
    return pair;
}

RandomGraph gen_graph(int n_min, int n_max, double edge_prob, uint64_t seed) {
    if (n_min < 1 || n_max < n_min) throw std::invalid_argument("bad vertex range");
    SplitMix64 gen(seed);
    RandomGraph g;
    g.num_vertices = n_min + static_cast<int>(gen.next_below(n_max - n_min + 1));
    for (int u = 0; u < g.num_vertices; ++u)
        for (int v = u + 1; v < g.num_vertices; ++v)
            if (gen.next_bool(edge_prob)) g.edges.emplace_back(u, v);
    return g;
}

// ---------------------------------------------------------------------------
// Graph problem encodings
// ---------------------------------------------------------------------------

namespace {

Literal pos(int var) { return Literal{var, false}; }
Literal neg(int var) { return Literal{var, true}; }

// variables y[slot][vertex], 1-based: slot*n + vertex + 1
int slot_var(int slot, int vertex, int n) { return slot * n + vertex + 1; }

void at_least_one_per_slot(CnfFormula& f, int k, int n) {
    for (int s = 0; s < k; ++s) {
        Clause cl;
        for (int v = 0; v < n; ++v) cl.push_back(pos(slot_var(s, v, n)));
        f.clauses.push_back(cl);
    }
}

void at_most_one_per_slot(CnfFormula& f, int k, int n) {
    for (int s = 0; s < k; ++s)
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                f.clauses.push_back({neg(slot_var(s, u, n)), neg(slot_var(s, v, n))});
}

}  // namespace

CnfFormula encode_coloring(const RandomGraph& g, int k) {
    // x[v][c]: vertex v has color c
    int n = g.num_vertices;
    CnfFormula f;
    f.num_variables = n * k;
    auto var = [&](int v, int c) { return v * k + c + 1; };
    for (int v = 0; v < n; ++v) {
        Clause cl;
        for (int c = 0; c < k; ++c) cl.push_back(pos(var(v, c)));
        f.clauses.push_back(cl);
        for (int c1 = 0; c1 < k; ++c1)
            for (int c2 = c1 + 1; c2 < k; ++c2)
                f.clauses.push_back({neg(var(v, c1)), neg(var(v, c2))});
    }
    for (auto [u, v] : g.edges)
        for (int c = 0; c < k; ++c) f.clauses.push_back({neg(var(u, c)), neg(var(v, c))});
    return f;
}

CnfFormula encode_clique(const RandomGraph& g, int k) {
    // k slots, each picking exactly one vertex; all picks distinct and
    // pairwise adjacent
    int n = g.num_vertices;
    CnfFormula f;
    f.num_variables = k * n;
    at_least_one_per_slot(f, k, n);
    at_most_one_per_slot(f, k, n);
    for (int s1 = 0; s1 < k; ++s1)
        for (int s2 = s1 + 1; s2 < k; ++s2)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    if (u == v || !g.adjacent(u, v))
                        f.clauses.push_back({neg(slot_var(s1, u, n)), neg(slot_var(s2, v, n))});
                }
    return f;
}

CnfFormula encode_vertex_cover(const RandomGraph& g, int k) {
    // k slots with repetition allowed: a cover of size <= k
    int n = g.num_vertices;
    CnfFormula f;
    f.num_variables = k * n;
    at_least_one_per_slot(f, k, n);
    at_most_one_per_slot(f, k, n);
    for (auto [u, v] : g.edges) {
        Clause cl;
        for (int s = 0; s < k; ++s) {
            cl.push_back(pos(slot_var(s, u, n)));
            cl.push_back(pos(slot_var(s, v, n)));
        }
        f.clauses.push_back(cl);
    }
    return f;
}

CnfFormula encode_domset(const RandomGraph& g, int k) {
    int n = g.num_vertices;
    CnfFormula f;
    f.num_variables = k * n;
    at_least_one_per_slot(f, k, n);
    at_most_one_per_slot(f, k, n);
    for (int v = 0; v < n; ++v) {
        Clause cl;  // some slot picks v or a neighbor of v
        for (int s = 0; s < k; ++s)
            for (int u = 0; u < n; ++u)
                if (u == v || g.adjacent(u, v)) cl.push_back(pos(slot_var(s, u, n)));
        f.clauses.push_back(cl);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Brute-force graph checkers
// ---------------------------------------------------------------------------

bool has_coloring(const RandomGraph& g, int k) {
    std::vector<int> color(g.num_vertices, -1);
    std::function<bool(int)> go = [&](int v) -> bool {
        if (v == g.num_vertices) return true;
        for (int c = 0; c < k; ++c) {
            bool ok = true;
            for (int u = 0; u < v && ok; ++u)
                if (color[u] == c && g.adjacent(u, v)) ok = false;
            if (!ok) continue;
            color[v] = c;
            if (go(v + 1)) return true;
            color[v] = -1;
        }
        return false;
    };
    return go(0);
}

namespace {

// enumerate all vertex subsets of size exactly k
template <typename Pred>
bool any_subset(int n, int k, Pred&& pred) {
    if (k > n) return false;
    std::vector<int> pick(k);
    std::function<bool(int, int)> go = [&](int start, int depth) -> bool {
        if (depth == k) return pred(pick);
        for (int v = start; v <= n - (k - depth); ++v) {
            pick[depth] = v;
            if (go(v + 1, depth + 1)) return true;
        }
        return false;
    };
    return go(0, 0);
}

}  // namespace

bool has_clique(const RandomGraph& g, int k) {
    return any_subset(g.num_vertices, k, [&](const std::vector<int>& s) {
        for (size_t i = 0; i < s.size(); ++i)
            for (size_t j = i + 1; j < s.size(); ++j)
                if (!g.adjacent(s[i], s[j])) return false;
        return true;
    });
}

bool has_vertex_cover(const RandomGraph& g, int k) {
    // cover of size <= k; subsets of size exactly min(k,n) suffice
    int kk = std::min(k, g.num_vertices);
    return any_subset(g.num_vertices, kk, [&](const std::vector<int>& s) {
        for (auto [u, v] : g.edges) {
            bool covered = std::find(s.begin(), s.end(), u) != s.end() ||
                           std::find(s.begin(), s.end(), v) != s.end();
            if (!covered) return false;
        }
        return true;
    });
}

bool has_domset(const RandomGraph& g, int k) {
    int kk = std::min(k, g.num_vertices);
    return any_subset(g.num_vertices, kk, [&](const std::vector<int>& s) {
        for (int v = 0; v < g.num_vertices; ++v) {
            bool dominated = false;
            for (int u : s)
                if (u == v || g.adjacent(u, v)) { dominated = true; break; }
            if (!dominated) return false;
        }
        return true;
    });
}

// ---------------------------------------------------------------------------
// Benchmark builder
// ---------------------------------------------------------------------------

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string entry_name(const std::string& kind, int index, const char* tag) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05d_%s.cnf", kind.c_str(), index, tag);
    return buf;
}

}  // namespace

BenchmarkManifest build_benchmark(const std::string& kind, int count, int n_min, int n_max,
                                  uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    BenchmarkManifest man;
    man.kind = kind;
    man.seed = seed;

    auto add = [&](const std::string& name, const CnfFormula& f, int n, int k, uint64_t s, bool sat) {
        write_file((fs::path(out_dir) / name).string(), write_dimacs(f));
        man.entries.push_back(BenchmarkEntry{name, kind, n, k, s, sat, f.num_variables,
                                             static_cast<int>(f.clauses.size())});
    };

    if (kind == "sr") {
        for (int i = 0; i < count; ++i) {
            uint64_t s = mix_seed(seed, i);
            int n = n_min + static_cast<int>(SplitMix64(mix_seed(s, 1)).next_below(n_max - n_min + 1));
            SrPair pair = gen_sr(n, s);
            if (!dpll_solve(pair.sat_instance)) throw std::logic_error("SR sat twin is UNSAT");
            if (dpll_solve(pair.unsat_instance)) throw std::logic_error("SR unsat twin is SAT");
            add(entry_name(kind, i, "sat"), pair.sat_instance, n, 0, s, true);
            add(entry_name(kind, i, "unsat"), pair.unsat_instance, n, 0, s, false);
        }
        return man;
    }

    struct Kind {
        CnfFormula (*encode)(const RandomGraph&, int);
        int k_min, k_max;
    };
    Kind spec;
    if (kind == "coloring") spec = {encode_coloring, 3, 5};
    else if (kind == "clique") spec = {encode_clique, 3, 5};
    else if (kind == "vertex_cover") spec = {encode_vertex_cover, 4, 6};
    else if (kind == "domset") spec = {encode_domset, 2, 4};
    else throw std::invalid_argument("unknown benchmark kind: " + kind);

    for (int i = 0; i < count; ++i) {
        uint64_t s = mix_seed(seed, i);
        RandomGraph g = gen_graph(n_min, n_max, 0.37, s);
        SplitMix64 kgen(mix_seed(s, 2));
        int k = spec.k_min + static_cast<int>(kgen.next_below(spec.k_max - spec.k_min + 1));
        CnfFormula f = spec.encode(g, k);
        bool sat = dpll_solve(f).has_value();
        add(entry_name(kind, i, sat ? "sat" : "unsat"), f, g.num_vertices, k, s, sat);
    }
    return man;
}

std::string write_manifest(const BenchmarkManifest& m) {
    std::ostringstream out;
    for (const BenchmarkEntry& e : m.entries) {
        nlohmann::json row = {
            {"file", e.file}, {"kind", e.kind}, {"n", e.n}, {"k", e.k},
            {"seed", e.seed}, {"sat", e.sat}, {"num_variables", e.num_variables},
            {"num_clauses", e.num_clauses},
        };
        out << row.dump() << '\n';
    }
    return out.str();
}

}  // namespace aigsat
