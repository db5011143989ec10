#include "aigsat/synth.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <functional>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace aigsat {

// variable patterns of the 4 formal inputs over 16 rows
static constexpr TruthTable4 kVar4[4] = {0xAAAA, 0xCCCC, 0xF0F0, 0xFF00};

// ---------------------------------------------------------------------------
// NPN canonicalization
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::array<uint8_t, 4>>& all_perms() {
    static const std::vector<std::array<uint8_t, 4>> perms = [] {
        std::vector<std::array<uint8_t, 4>> out;
        std::array<uint8_t, 4> p{0, 1, 2, 3};
        do out.push_back(p);
        while (std::next_permutation(p.begin(), p.end()));
        return out;
    }();
    return perms;
}

// row map for a (perm, input_neg) combination: result bit i reads t bit map[i]
std::array<uint8_t, 16> row_map(const std::array<uint8_t, 4>& perm, uint8_t input_neg) {
    std::array<uint8_t, 16> map{};
    for (int i = 0; i < 16; ++i) {
        int y = 0;
        for (int j = 0; j < 4; ++j) {
            int bit = ((i >> j) & 1) ^ ((input_neg >> j) & 1);
            y |= bit << perm[j];
        }
        map[i] = static_cast<uint8_t>(y);
    }
    return map;
}

TruthTable4 permute_rows(TruthTable4 t, const std::array<uint8_t, 16>& map) {
    TruthTable4 r = 0;
    for (int i = 0; i < 16; ++i) r |= ((t >> map[i]) & 1) << i;
    return r;
}

struct RowMaps {
    // 24 perms x 16 negation masks, precomputed once
    std::vector<std::array<uint8_t, 16>> maps;
    RowMaps() {
        maps.reserve(24 * 16);
        for (const auto& p : all_perms())
            for (int neg = 0; neg < 16; ++neg) maps.push_back(row_map(p, static_cast<uint8_t>(neg)));
    }
};

const RowMaps& row_maps() {
    static const RowMaps rm;
    return rm;
}

}  // namespace

TruthTable4 apply_npn(TruthTable4 t, const NpnTransform& tf) {
    TruthTable4 r = permute_rows(t, row_map(tf.perm, tf.input_neg));
    return tf.output_neg ? static_cast<TruthTable4>(~r) : r;
}

std::pair<TruthTable4, NpnTransform> npn_canonicalize(TruthTable4 t) {
    const auto& rm = row_maps();
    TruthTable4 best = 0xFFFF;
    for (const auto& map : rm.maps) {
        TruthTable4 r = permute_rows(t, map);
        best = std::min({best, r, static_cast<TruthTable4>(~r)});
    }
    // deterministic inverse search: first transform taking canonical -> t
    const auto& perms = all_perms();
    for (size_t pi = 0; pi < perms.size(); ++pi) {
        for (int neg = 0; neg < 16; ++neg) {
            TruthTable4 r = permute_rows(best, rm.maps[pi * 16 + neg]);
            for (int on = 0; on < 2; ++on) {
                TruthTable4 cand = on ? static_cast<TruthTable4>(~r) : r;
                if (cand == t) {
                    NpnTransform tf;
                    tf.perm = perms[pi];
                    tf.input_neg = static_cast<uint8_t>(neg);
                    tf.output_neg = on != 0;
                    return {best, tf};
                }
            }
        }
    }
    throw std::logic_error("npn orbit did not close");  // unreachable
}

int count_npn_classes() {
    const auto& rm = row_maps();
    std::set<TruthTable4> reps;
    for (uint32_t t = 0; t < 65536; ++t) {
        TruthTable4 best = 0xFFFF;
        for (const auto& map : rm.maps) {
            TruthTable4 r = permute_rows(static_cast<TruthTable4>(t), map);
            best = std::min({best, r, static_cast<TruthTable4>(~r)});
        }
        reps.insert(best);
    }
    return static_cast<int>(reps.size());
}

// ---------------------------------------------------------------------------
// strash
// ---------------------------------------------------------------------------

AigCircuit strash(const AigCircuit& c) {
    AigBuilder b;
    std::vector<int> map(c.size(), -1);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI: map[v] = b.add_pi(); break;
            case NodeKind::CONST0: map[v] = b.add_const0(); break;
            case NodeKind::NOT: map[v] = b.add_not(map[n.fanin0]); break;
            case NodeKind::AND2: map[v] = b.add_and(map[n.fanin0], map[n.fanin1]); break;
        }
    }
    return b.finish(map[c.po]);
}

// ---------------------------------------------------------------------------
// generic cone helpers (shared between AigCircuit and the mutable work graph)
// ---------------------------------------------------------------------------

namespace {

struct CircuitView {
    const AigCircuit* c;
    NodeKind kind(int v) const { return c->nodes[v].kind; }
    int fanin0(int v) const { return c->nodes[v].fanin0; }
    int fanin1(int v) const { return c->nodes[v].fanin1; }
};

template <typename View>
TruthTable4 cone_function(const View& g, int root, const std::vector<int>& leaves) {
    std::unordered_map<int, TruthTable4> memo;
    for (size_t j = 0; j < leaves.size(); ++j) memo[leaves[j]] = kVar4[j];
    // iterative post-order
    std::vector<std::pair<int, bool>> stack{{root, false}};
    while (!stack.empty()) {
        auto [v, ready] = stack.back();
        stack.pop_back();
        if (memo.count(v)) continue;
        NodeKind k = g.kind(v);
        if (k == NodeKind::CONST0) { memo[v] = 0; continue; }
        if (k == NodeKind::PI) throw std::logic_error("cut does not dominate root");
        if (!ready) {
            stack.push_back({v, true});
            stack.push_back({g.fanin0(v), false});
            if (k == NodeKind::AND2) stack.push_back({g.fanin1(v), false});
        } else {
            if (k == NodeKind::NOT)
                memo[v] = static_cast<TruthTable4>(~memo[g.fanin0(v)]);
            else
                memo[v] = memo[g.fanin0(v)] & memo[g.fanin1(v)];
        }
    }
    return memo[root];
}

// cone nodes strictly above the leaves (root included, leaves excluded)
template <typename View>
std::vector<int> cone_region(const View& g, int root, const std::vector<int>& leaves) {
    std::vector<int> region;
    std::set<int> seen(leaves.begin(), leaves.end());
    std::vector<int> stack{root};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (seen.count(v)) continue;
        seen.insert(v);
        NodeKind k = g.kind(v);
        if (k == NodeKind::PI || k == NodeKind::CONST0) continue;  // defensive bound
        region.push_back(v);
        stack.push_back(g.fanin0(v));
        if (k == NodeKind::AND2) stack.push_back(g.fanin1(v));
    }
    return region;
}

// fanout_of: callable(int v) -> const std::vector<int>&; `pinned` (the PO)
// can never be deleted and so never joins the cone unless it is the root
template <typename View, typename FanoutOf>
std::vector<int> mffc_impl(const View& g, int root, const std::vector<int>& leaves, FanoutOf&& fanout_of,
                           int pinned) {
    std::vector<int> region = cone_region(g, root, leaves);
    std::set<int> in_mffc{root};
    // fixpoint: a node joins when all its fanouts are already in the MFFC
    bool changed = true;
    while (changed) {
        changed = false;
        for (int v : region) {
            if (in_mffc.count(v) || v == root || v == pinned) continue;
            const std::vector<int>& fos = fanout_of(v);
            bool all_in = !fos.empty();
            for (int f : fos)
                if (!in_mffc.count(f)) { all_in = false; break; }
            if (all_in) { in_mffc.insert(v); changed = true; }
        }
    }
    std::vector<int> out(in_mffc.begin(), in_mffc.end());
    return out;
}

// merge two cut sets at an AND node; returns sorted, dominance-filtered, capped
void merge_cuts(int root, const std::vector<Cut>& a, const std::vector<Cut>& b, int k, int cap,
                std::vector<Cut>& out) {
    std::set<std::vector<int>> leaf_sets;
    leaf_sets.insert({root});  // trivial cut
    for (const Cut& ca : a)
        for (const Cut& cb : b) {
            std::vector<int> merged;
            std::set_union(ca.leaves.begin(), ca.leaves.end(), cb.leaves.begin(), cb.leaves.end(),
                           std::back_inserter(merged));
            if (static_cast<int>(merged.size()) <= k) leaf_sets.insert(std::move(merged));
        }
    // order by (size, lexicographic); remove dominated (supersets of kept sets)
    std::vector<std::vector<int>> ordered(leaf_sets.begin(), leaf_sets.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& x, const auto& y) { return x.size() < y.size(); });
    out.clear();
    for (const auto& ls : ordered) {
        bool dominated = false;
        for (const Cut& kept : out) {
            if (std::includes(ls.begin(), ls.end(), kept.leaves.begin(), kept.leaves.end())) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            out.push_back(Cut{root, ls});
            if (static_cast<int>(out.size()) >= cap) break;
        }
    }
}

}  // namespace

std::vector<std::vector<Cut>> enumerate_cuts(const AigCircuit& c, int k, int per_node_cap) {
    CircuitView g{&c};
    std::vector<std::vector<Cut>> cuts(c.size());
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI:
            case NodeKind::CONST0:
                cuts[v] = {Cut{v, {v}}};
                break;
            case NodeKind::NOT: {
                cuts[v].push_back(Cut{v, {v}});
                for (const Cut& cu : cuts[n.fanin0]) cuts[v].push_back(Cut{v, cu.leaves});
                if (static_cast<int>(cuts[v].size()) > per_node_cap) cuts[v].resize(per_node_cap);
                break;
            }
            case NodeKind::AND2:
                merge_cuts(v, cuts[n.fanin0], cuts[n.fanin1], k, per_node_cap, cuts[v]);
                break;
        }
    }
    return cuts;
}

TruthTable4 cut_function(const AigCircuit& c, const Cut& cut) {
    if (cut.leaves.empty() || cut.leaves.size() > 4) throw std::invalid_argument("cut must have 1..4 leaves");
    return cone_function(CircuitView{&c}, cut.root, cut.leaves);
}

std::vector<int> mffc(const AigCircuit& c, int root, const Cut& cut) {
    auto fanouts = c.fanout_lists();
    return mffc_impl(
        CircuitView{&c}, root, cut.leaves,
        [&](int v) -> const std::vector<int>& { return fanouts[v]; }, c.po);
}

// ---------------------------------------------------------------------------
// Rewrite library: formula DP over all 4-input functions
// ---------------------------------------------------------------------------

namespace {

struct Reach {
    enum Kind : uint8_t { kNone, kVar, kNVar, kConst0, kConst1, kAnd, kNand };
    uint8_t kind = kNone;
    uint8_t var = 0;
    uint16_t l = 0, r = 0;
    uint8_t cost = 0xFF;
};

// template construction with shared-subterm memo
struct TemplateBuilder {
    Template t;
    std::unordered_map<uint32_t, int> memo;  // table (+polarity tag) -> operand index

    int emit_and(int a0, int a1) {
        t.ops.push_back(TemplateOp{true, a0, a1});
        ++t.and_count;
        return 4 + static_cast<int>(t.ops.size());  // 5 + index - 1
    }
    int emit_not(int a0) {
        t.ops.push_back(TemplateOp{false, a0, 0});
        return 4 + static_cast<int>(t.ops.size());
    }

    int build(const std::vector<Reach>& reach, TruthTable4 tt) {
        auto it = memo.find(tt);
        if (it != memo.end()) return it->second;
        const Reach& r = reach[tt];
        int op;
        switch (r.kind) {
            case Reach::kVar: op = r.var; break;
            case Reach::kNVar: op = emit_not(r.var); break;
            case Reach::kConst0: op = 4; break;
            case Reach::kConst1: op = emit_not(4); break;
            case Reach::kAnd: {
                int a = build(reach, r.l);
                int b = build(reach, r.r);
                op = emit_and(a, b);
                break;
            }
            case Reach::kNand: {
                int a = build(reach, r.l);
                int b = build(reach, r.r);
                op = emit_not(emit_and(a, b));
                break;
            }
            default: throw std::logic_error("unreachable table in template build");
        }
        memo[tt] = op;
        return op;
    }
};

TruthTable4 simulate_template(const Template& t) {
    std::vector<TruthTable4> val(5 + t.ops.size());
    for (int j = 0; j < 4; ++j) val[j] = kVar4[j];
    val[4] = 0;
    for (size_t i = 0; i < t.ops.size(); ++i) {
        const TemplateOp& op = t.ops[i];
        val[5 + i] = op.is_and ? (val[op.arg0] & val[op.arg1])
                               : static_cast<TruthTable4>(~val[op.arg0]);
    }
    return val[t.root];
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

RewriteLibrary RewriteLibrary::build(int max_template_nodes) {
    std::vector<Reach> reach(65536);
    std::vector<std::vector<uint16_t>> level(max_template_nodes + 1);

    auto set_base = [&](TruthTable4 tt, Reach r) {
        if (reach[tt].kind == Reach::kNone) {
            r.cost = 0;
            reach[tt] = r;
            level[0].push_back(tt);
        }
    };
    for (uint8_t j = 0; j < 4; ++j) {
        set_base(kVar4[j], Reach{Reach::kVar, j});
        set_base(static_cast<TruthTable4>(~kVar4[j]), Reach{Reach::kNVar, j});
    }
    set_base(0x0000, Reach{Reach::kConst0});
    set_base(0xFFFF, Reach{Reach::kConst1});

    for (int n = 1; n <= max_template_nodes; ++n) {
        for (int i = 0; i + i <= n - 1; ++i) {
            int j = n - 1 - i;
            const auto& li = level[i];
            const auto& lj = level[j];
            for (size_t x = 0; x < li.size(); ++x) {
                size_t y0 = (i == j) ? x : 0;
                for (size_t y = y0; y < lj.size(); ++y) {
                    TruthTable4 t = li[x] & lj[y];
                    if (reach[t].cost == 0xFF) {
                        reach[t] = Reach{Reach::kAnd, 0, li[x], lj[y], static_cast<uint8_t>(n)};
                        level[n].push_back(t);
                    }
                    TruthTable4 nt = static_cast<TruthTable4>(~t);
                    if (reach[nt].cost == 0xFF) {
                        reach[nt] = Reach{Reach::kNand, 0, li[x], lj[y], static_cast<uint8_t>(n)};
                        level[n].push_back(nt);
                    }
                }
            }
        }
    }

    RewriteLibrary lib;
    lib.budget_ = max_template_nodes;
    std::set<TruthTable4> canon_done;
    for (int n = 0; n <= max_template_nodes; ++n) {
        for (TruthTable4 tt : level[n]) {
            TruthTable4 canon = npn_canonicalize(tt).first;
            if (canon_done.count(canon)) continue;
            canon_done.insert(canon);
            if (reach[canon].cost == 0xFF) continue;  // canonical rep itself out of budget
            TemplateBuilder tb;
            tb.t.root = tb.build(reach, canon);
            if (simulate_template(tb.t) != canon)
                throw std::logic_error("template does not realize its class");
            lib.templates_.emplace(canon, std::move(tb.t));
        }
    }
    return lib;
}

const Template* RewriteLibrary::find(TruthTable4 canonical) const {
    auto it = templates_.find(canonical);
    return it == templates_.end() ? nullptr : &it->second;
}

std::string RewriteLibrary::serialize() const {
    nlohmann::json tpl = nlohmann::json::array();
    std::string blob;
    for (const auto& [tt, t] : templates_) {
        nlohmann::json ops = nlohmann::json::array();
        blob += std::to_string(tt) + ":" + std::to_string(t.root) + ";";
        for (const TemplateOp& op : t.ops) {
            ops.push_back({op.is_and ? 1 : 0, op.arg0, op.arg1});
            blob += std::to_string(op.is_and) + "," + std::to_string(op.arg0) + "," +
                    std::to_string(op.arg1) + ";";
        }
        tpl.push_back({{"tt", tt}, {"root", t.root}, {"and_count", t.and_count}, {"ops", ops}});
    }
    nlohmann::json doc = {{"format", "aigsat-rewrite-library"},
                          {"version", 1},
                          {"budget", budget_},
                          {"checksum", fnv1a(blob)},
                          {"templates", tpl}};
    return doc.dump(2) + "\n";
}

RewriteLibrary RewriteLibrary::deserialize(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "aigsat-rewrite-library")
        throw ParseError("not a rewrite library file");
    if (doc.value("version", 0) != 1) throw ParseError("unsupported library version");
    RewriteLibrary lib;
    lib.budget_ = doc.value("budget", 0);
    std::string blob;
    for (const auto& row : doc.at("templates")) {
        TruthTable4 tt = row.at("tt").get<uint16_t>();
        Template t;
        t.root = row.at("root").get<int>();
        t.and_count = row.at("and_count").get<int>();
        blob += std::to_string(tt) + ":" + std::to_string(t.root) + ";";
        for (const auto& op : row.at("ops")) {
            TemplateOp o{op.at(0).get<int>() != 0, op.at(1).get<int>(), op.at(2).get<int>()};
            t.ops.push_back(o);
            blob += std::to_string(o.is_and) + "," + std::to_string(o.arg0) + "," +
                    std::to_string(o.arg1) + ";";
        }
        if (simulate_template(t) != tt) throw ParseError("library template corrupt");
        lib.templates_.emplace(tt, std::move(t));
    }
    if (doc.at("checksum").get<uint64_t>() != fnv1a(blob)) throw ParseError("library checksum mismatch");
    return lib;
}

const RewriteLibrary& default_rewrite_library() {
    static const RewriteLibrary lib = RewriteLibrary::build(7);
    return lib;
}

// ---------------------------------------------------------------------------
// rewrite pass
// ---------------------------------------------------------------------------

namespace {

// mutable AIG with structural hashing, fanout lists and dead flags
struct WorkAig {
    struct N {
        NodeKind kind;
        int f0 = -1, f1 = -1;
        bool dead = false;
    };
    std::vector<N> nodes;
    std::vector<std::vector<int>> fanouts;
    int num_pis = 0;
    int po = -1;
    int const0 = -1;
    std::unordered_map<uint64_t, int> and_hash;
    std::unordered_map<int, int> not_hash;

    NodeKind kind(int v) const { return nodes[v].kind; }
    int fanin0(int v) const { return nodes[v].f0; }
    int fanin1(int v) const { return nodes[v].f1; }

    int push(N n) {
        nodes.push_back(n);
        fanouts.emplace_back();
        int id = static_cast<int>(nodes.size()) - 1;
        if (n.kind == NodeKind::NOT) fanouts[n.f0].push_back(id);
        if (n.kind == NodeKind::AND2) {
            fanouts[n.f0].push_back(id);
            fanouts[n.f1].push_back(id);
        }
        return id;
    }

    int get_const0() {
        if (const0 < 0) const0 = push(N{NodeKind::CONST0});
        return const0;
    }

    bool complement_pair(int a, int b) const {
        return (nodes[a].kind == NodeKind::NOT && nodes[a].f0 == b) ||
               (nodes[b].kind == NodeKind::NOT && nodes[b].f0 == a);
    }

    // lookup-only variants return -1 on miss (used for gain dry runs)
    int find_not(int a) const {
        if (nodes[a].kind == NodeKind::NOT) return nodes[a].f0;
        auto it = not_hash.find(a);
        return it == not_hash.end() ? -1 : it->second;
    }
    int find_and(int a, int b) const {
        if (a == b) return a;
        if (complement_pair(a, b)) return -2;  // needs const0
        if (a == const0 || b == const0) return -2;
        if (const0 >= 0) {
            if (nodes[a].kind == NodeKind::NOT && nodes[a].f0 == const0) return b;
            if (nodes[b].kind == NodeKind::NOT && nodes[b].f0 == const0) return a;
        }
        if (a > b) std::swap(a, b);
        auto it = and_hash.find((static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b));
        return it == and_hash.end() ? -1 : it->second;
    }

    int add_not(int a) {
        int hit = find_not(a);
        if (hit >= 0) return hit;
        int id = push(N{NodeKind::NOT, a});
        not_hash.emplace(a, id);
        return id;
    }
    int add_and(int a, int b) {
        int hit = find_and(a, b);
        if (hit == -2) return get_const0();
        if (hit >= 0) return hit;
        if (a > b) std::swap(a, b);
        int id = push(N{NodeKind::AND2, a, b});
        and_hash.emplace((static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b), id);
        return id;
    }

    void drop_fanout(int of, int fanout) {
        auto& fo = fanouts[of];
        auto it = std::find(fo.begin(), fo.end(), fanout);
        if (it != fo.end()) fo.erase(it);
    }

    void unhash(int v) {
        const N& n = nodes[v];
        if (n.kind == NodeKind::NOT) {
            auto it = not_hash.find(n.f0);
            if (it != not_hash.end() && it->second == v) not_hash.erase(it);
        } else if (n.kind == NodeKind::AND2) {
            auto it = and_hash.find((static_cast<uint64_t>(n.f0) << 32) | static_cast<uint32_t>(n.f1));
            if (it != and_hash.end() && it->second == v) and_hash.erase(it);
        }
    }

    void kill_recursive(int v) {
        if (nodes[v].dead || nodes[v].kind == NodeKind::PI || v == po) return;
        if (!fanouts[v].empty()) return;
        nodes[v].dead = true;
        unhash(v);
        const N n = nodes[v];
        if (n.kind == NodeKind::NOT) {
            drop_fanout(n.f0, v);
            kill_recursive(n.f0);
        } else if (n.kind == NodeKind::AND2) {
            drop_fanout(n.f0, v);
            drop_fanout(n.f1, v);
            kill_recursive(n.f0);
            kill_recursive(n.f1);
        }
    }

    // create bypassing the hash hit (used when the hit sits inside the cone
    // that is about to be deleted); the hash is repointed at the fresh node
    int add_not_fresh(int a) {
        int id = push(N{NodeKind::NOT, a});
        not_hash[a] = id;
        return id;
    }
    int add_and_fresh(int a, int b) {
        if (a > b) std::swap(a, b);
        int id = push(N{NodeKind::AND2, a, b});
        and_hash[(static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b)] = id;
        return id;
    }

    // redirect every fanout of v to w, then garbage-collect v's cone
    void replace(int v, int w) {
        std::vector<int> fos = fanouts[v];
        for (int f : fos) {
            unhash(f);  // keep the hash in sync with the fanin change
            N& fn = nodes[f];
            if (fn.kind == NodeKind::NOT) {
                fn.f0 = w;
                if (!not_hash.count(w)) not_hash.emplace(w, f);
            } else {
                if (fn.f0 == v) fn.f0 = w;
                if (fn.f1 == v) fn.f1 = w;
                if (fn.f0 > fn.f1) std::swap(fn.f0, fn.f1);
                uint64_t key = (static_cast<uint64_t>(fn.f0) << 32) | static_cast<uint32_t>(fn.f1);
                if (!and_hash.count(key)) and_hash.emplace(key, f);
            }
            fanouts[w].push_back(f);
        }
        fanouts[v].clear();
        if (po == v) po = w;
        kill_recursive(v);
    }

    int live_count() const {
        int k = 0;
        for (const N& n : nodes) k += !n.dead;
        return k;
    }
};

WorkAig to_work(const AigCircuit& c) {
    // rebuilding through the hashing interface doubles as the strash step
    WorkAig w;
    std::vector<int> map(c.size(), -1);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI:
                map[v] = w.push(WorkAig::N{NodeKind::PI});
                ++w.num_pis;
                break;
            case NodeKind::CONST0: map[v] = w.get_const0(); break;
            case NodeKind::NOT: map[v] = w.add_not(map[n.fanin0]); break;
            case NodeKind::AND2: map[v] = w.add_and(map[n.fanin0], map[n.fanin1]); break;
        }
    }
    w.po = map[c.po];
    return w;
}

AigCircuit from_work(const WorkAig& w) {
    AigBuilder b;
    std::vector<int> map(w.nodes.size(), -1);
    for (size_t v = 0; v < w.nodes.size(); ++v)
        if (w.nodes[v].kind == NodeKind::PI) map[v] = b.add_pi();
    // iterative DFS from the PO (ids are not topologically ordered after replaces)
    std::vector<std::pair<int, bool>> stack{{w.po, false}};
    while (!stack.empty()) {
        auto [v, ready] = stack.back();
        stack.pop_back();
        if (map[v] >= 0) continue;
        const WorkAig::N& n = w.nodes[v];
        if (n.kind == NodeKind::CONST0) { map[v] = b.add_const0(); continue; }
        if (!ready) {
            stack.push_back({v, true});
            stack.push_back({n.f0, false});
            if (n.kind == NodeKind::AND2) stack.push_back({n.f1, false});
        } else {
            map[v] = n.kind == NodeKind::NOT ? b.add_not(map[n.f0]) : b.add_and(map[n.f0], map[n.f1]);
        }
    }
    return b.finish(map[w.po]);
}

struct WorkFanouts {
    const WorkAig* w;
    std::vector<int> live;  // scratch
    const std::vector<int>& operator()(int v) {
        live.clear();
        for (int f : w->fanouts[v])
            if (!w->nodes[f].dead) live.push_back(f);
        return live;
    }
};

// Resolve a template against actual leaves, honoring structural-hash reuse
// but never reusing nodes from `forbidden` (the MFFC about to be deleted).
// With create=false nothing is mutated and *added counts the nodes a real
// instantiation would create. Returns the node computing the original cut
// function, or nullopt when the candidate is not applicable.
std::optional<int> resolve_template(WorkAig& w, const Template& tmpl, const NpnTransform& tf,
                                    const std::vector<int>& leaves, const std::set<int>& forbidden,
                                    bool create, int* added) {
    *added = 0;
    // formal input m of the canonical function reads original input pinv[m]
    std::array<int, 4> pinv{-1, -1, -1, -1};
    for (int j = 0; j < 4; ++j) pinv[tf.perm[j]] = j;

    // operand values: >=0 real node, <= -3 virtual node (dry run only),
    // INT32_MIN = unavailable
    std::vector<int> val(5 + tmpl.ops.size(), INT32_MIN);
    int next_virtual = -3;
    int virtual_const = INT32_MIN;
    std::unordered_map<uint64_t, int> v_and;
    std::unordered_map<int64_t, int> v_not;

    auto emit_const0 = [&]() -> int {
        if (create) return w.get_const0();
        if (w.const0 >= 0) return w.const0;
        if (virtual_const == INT32_MIN) {
            ++*added;
            virtual_const = next_virtual--;
        }
        return virtual_const;
    };
    auto emit_not = [&](int a) -> int {
        if (a >= 0) {
            int hit = w.find_not(a);
            if (hit >= 0 && !forbidden.count(hit) && !w.nodes[hit].dead) return hit;
            if (create) return hit >= 0 ? w.add_not_fresh(a) : w.add_not(a);
        }
        auto it = v_not.find(a);
        if (it != v_not.end()) return it->second;
        ++*added;
        int id = next_virtual--;
        v_not.emplace(a, id);
        return id;
    };
    auto emit_and = [&](int a, int b) -> int {
        if (a >= 0 && b >= 0) {
            int hit = w.find_and(a, b);
            if (hit == -2) return emit_const0();
            if (hit >= 0 && !forbidden.count(hit) && !w.nodes[hit].dead) return hit;
            if (create) return hit >= 0 ? w.add_and_fresh(a, b) : w.add_and(a, b);
        }
        int x = std::min(a, b), y = std::max(a, b);
        uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(x)) << 32) | static_cast<uint32_t>(y);
        auto it = v_and.find(key);
        if (it != v_and.end()) return it->second;
        ++*added;
        int id = next_virtual--;
        v_and.emplace(key, id);
        return id;
    };

    for (int m = 0; m < 4; ++m) {
        int j = pinv[m];
        if (j < 0 || j >= static_cast<int>(leaves.size())) continue;  // absent leaf
        int node = leaves[j];
        if ((tf.input_neg >> j) & 1) node = emit_not(node);
        val[m] = node;
    }

    auto operand = [&](int idx) -> int {
        if (idx == 4) {
            if (val[4] == INT32_MIN) val[4] = emit_const0();
            return val[4];
        }
        return val[idx];
    };

    for (size_t i = 0; i < tmpl.ops.size(); ++i) {
        const TemplateOp& op = tmpl.ops[i];
        int a = operand(op.arg0);
        if (a == INT32_MIN) return std::nullopt;  // template references an absent leaf
        if (op.is_and) {
            int b = operand(op.arg1);
            if (b == INT32_MIN) return std::nullopt;
            val[5 + i] = emit_and(a, b);
        } else {
            val[5 + i] = emit_not(a);
        }
    }
    int root = operand(tmpl.root);
    if (root == INT32_MIN) return std::nullopt;
    if (tf.output_neg) root = emit_not(root);
    if (root >= 0 && (forbidden.count(root) || w.nodes[root].dead)) return std::nullopt;
    return root;
}

}  // namespace

std::pair<AigCircuit, RewriteStats> rewrite_pass(const AigCircuit& c, const RewriteLibrary& lib) {
    RewriteStats stats;
    stats.nodes_before = c.size();
    WorkAig w = to_work(c);
    WorkFanouts fanout_of{&w};

    // cut memo over the live graph; cleared after every replacement
    std::unordered_map<int, std::vector<Cut>> cut_memo;
    std::function<const std::vector<Cut>&(int)> cuts_of = [&](int v) -> const std::vector<Cut>& {
        auto it = cut_memo.find(v);
        if (it != cut_memo.end()) return it->second;
        const WorkAig::N& n = w.nodes[v];
        std::vector<Cut> cs;
        switch (n.kind) {
            case NodeKind::PI:
            case NodeKind::CONST0: cs = {Cut{v, {v}}}; break;
            case NodeKind::NOT: {
                cs.push_back(Cut{v, {v}});
                for (const Cut& cu : cuts_of(n.f0)) cs.push_back(Cut{v, cu.leaves});
                if (cs.size() > 20) cs.resize(20);
                break;
            }
            case NodeKind::AND2: {
                const std::vector<Cut> a = cuts_of(n.f0);  // copies: recursion may invalidate refs
                const std::vector<Cut> b = cuts_of(n.f1);
                merge_cuts(v, a, b, 4, 20, cs);
                break;
            }
        }
        return cut_memo.emplace(v, std::move(cs)).first->second;
    };

    for (int v = 0; v < static_cast<int>(w.nodes.size()); ++v) {
        if (w.nodes[v].dead || w.nodes[v].kind != NodeKind::AND2) continue;

        struct Candidate {
            int gain = 0;
            size_t leaf_count = 0;
            TruthTable4 tt = 0;
            Cut cut;
            const Template* tmpl = nullptr;
            NpnTransform tf;
        };
        std::optional<Candidate> best;

        std::vector<Cut> cuts = cuts_of(v);
        for (const Cut& cut : cuts) {
            if (cut.leaves.size() < 2) continue;  // trivial / single-leaf cuts cannot shrink anything
            TruthTable4 tt = cone_function(w, v, cut.leaves);
            auto [canon, tf] = npn_canonicalize(tt);
            const Template* tmpl = lib.find(canon);
            if (!tmpl) continue;
            std::vector<int> cone = mffc_impl(w, v, cut.leaves, fanout_of, w.po);
            std::set<int> forbidden(cone.begin(), cone.end());
            int added = 0;
            auto root = resolve_template(w, *tmpl, tf, cut.leaves, forbidden, false, &added);
            if (!root) continue;
            int gain = static_cast<int>(cone.size()) - added;
            if (gain <= 0) continue;
            Candidate cand{gain, cut.leaves.size(), tt, cut, tmpl, tf};
            if (!best || cand.gain > best->gain ||
                (cand.gain == best->gain && (cand.leaf_count < best->leaf_count ||
                                             (cand.leaf_count == best->leaf_count && cand.tt < best->tt))))
                best = cand;
        }

        if (best) {
            std::vector<int> cone = mffc_impl(w, v, best->cut.leaves, fanout_of, w.po);
            std::set<int> forbidden(cone.begin(), cone.end());
            int added = 0;
            auto root = resolve_template(w, *best->tmpl, best->tf, best->cut.leaves, forbidden, true, &added);
            if (root && *root != v) {
                w.replace(v, *root);
                ++stats.replacements;
                cut_memo.clear();
            }
        }
    }

    AigCircuit out = from_work(w);
    out.check_invariants();
    stats.nodes_after = out.size();
    return {out, stats};
}

// ---------------------------------------------------------------------------
// balance pass
// ---------------------------------------------------------------------------

AigCircuit balance_pass(const AigCircuit& c) {
    std::vector<int> fc = c.fanout_counts();
    fc[c.po] += 1;  // the output reference pins the PO as a tree boundary

    auto absorbed = [&](int u) {
        return c.nodes[u].kind == NodeKind::AND2 && fc[u] == 1;
    };
    // an AND is absorbed into its parent tree iff its single fanout is an AND;
    // roots are the remaining ANDs
    std::vector<uint8_t> internal(c.size(), 0);
    {
        auto fo = c.fanout_lists();
        for (int v = 0; v < c.size(); ++v)
            if (absorbed(v) && c.nodes[fo[v][0]].kind == NodeKind::AND2) internal[v] = 1;
    }

    AigBuilder b;
    std::vector<int> map(c.size(), -1);
    std::vector<int> lvl;  // level per builder node; -1 until first recorded
    auto level_of = [&](int nb) {
        return nb < static_cast<int>(lvl.size()) && lvl[nb] >= 0 ? lvl[nb] : 0;
    };
    auto note_level = [&](int nb, int l) {
        if (nb >= static_cast<int>(lvl.size())) lvl.resize(nb + 1, -1);
        if (lvl[nb] < 0) lvl[nb] = l;  // hash hits keep their original level
    };

    // collect tree operands: descend through internal single-fanout ANDs
    std::function<void(int, std::vector<int>&)> collect = [&](int u, std::vector<int>& ops) {
        if (internal[u]) {
            collect(c.nodes[u].fanin0, ops);
            collect(c.nodes[u].fanin1, ops);
        } else {
            ops.push_back(map[u]);
        }
    };

    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI: map[v] = b.add_pi(); note_level(map[v], 0); break;
            case NodeKind::CONST0: map[v] = b.add_const0(); note_level(map[v], 0); break;
            case NodeKind::NOT:
                map[v] = b.add_not(map[n.fanin0]);
                note_level(map[v], level_of(map[n.fanin0]));
                break;
            case NodeKind::AND2: {
                if (internal[v]) break;  // materialized by its tree root
                std::vector<int> ops;
                collect(c.nodes[v].fanin0, ops);
                collect(c.nodes[v].fanin1, ops);
                // Huffman pairing: repeatedly join the two lowest-level operands,
                // ties broken by ascending node id
                std::set<std::pair<int, int>> heap;
                for (int o : ops) heap.insert({level_of(o), o});
                while (heap.size() > 1) {
                    auto i1 = heap.begin();
                    auto [l1, n1] = *i1;
                    heap.erase(i1);
                    auto i2 = heap.begin();
                    auto [l2, n2] = *i2;
                    heap.erase(i2);
                    int nn = b.add_and(n1, n2);
                    note_level(nn, 1 + std::max(l1, l2));
                    heap.insert({level_of(nn), nn});
                }
                map[v] = heap.begin()->second;
                break;
            }
        }
    }
    AigCircuit out = b.finish(map[c.po]);
    out.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

std::pair<AigCircuit, OptStats> optimize(const AigCircuit& c, const RewriteLibrary& lib) {
    OptStats s;
    s.nodes_before = c.size();
    s.depth_before = topo_order(c).depth;
    s.br_before = balance_ratio(c);
    AigCircuit cur = c;
    for (int round = 0; round < 3; ++round) {
        cur = rewrite_pass(cur, lib).first;
        cur = balance_pass(cur);
    }
    s.nodes_after = cur.size();
    s.depth_after = topo_order(cur).depth;
    s.br_after = balance_ratio(cur);
    return {cur, s};
}

}  // namespace aigsat
