#include "aigsat/sim.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aigsat/rng.hpp"

namespace aigsat {

std::vector<uint64_t> simulate_block(const AigCircuit& c, const std::vector<uint64_t>& pattern_words) {
    if (static_cast<int>(pattern_words.size()) != c.num_pis)
        throw std::invalid_argument("one pattern word per PI required");
    std::vector<uint64_t> w(c.size(), 0);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        switch (n.kind) {
            case NodeKind::PI: w[v] = pattern_words[v]; break;
            case NodeKind::CONST0: w[v] = 0; break;
            case NodeKind::NOT: w[v] = ~w[n.fanin0]; break;
            case NodeKind::AND2: w[v] = w[n.fanin0] & w[n.fanin1]; break;
        }
    }
    return w;
}

namespace {

// Shared driver for the masked-pattern estimators. Calls sink(node_words,
// accept_word, block_index) for every 64-pattern block; accept_word selects
// the lanes that are live in this block and fulfill the PO condition.
template <typename Sink>
void run_masked_simulation(const AigCircuit& c, const Mask& m, const SimConfig& cfg, Sink&& sink) {
    m.validate(c);
    if (cfg.num_patterns < 1 || cfg.num_patterns < cfg.min_accepted)
        throw std::invalid_argument("num_patterns must be >= min_accepted >= 1");
    SplitMix64 gen(cfg.seed);
    uint64_t blocks = (cfg.num_patterns + 63) / 64;
    bool po_conditioned = m.values[c.po] == 1;
    std::vector<uint64_t> pis(c.num_pis);
    std::vector<uint64_t> words;
    for (uint64_t b = 0; b < blocks; ++b) {
        for (int i = 0; i < c.num_pis; ++i) {
            uint64_t w = gen.next();  // drawn for every PI so the stream does not depend on the mask
            if (m.values[i] == 1) w = ~0ULL;
            else if (m.values[i] == -1) w = 0ULL;
            pis[i] = w;
        }
        uint64_t live = ~0ULL;
        uint64_t rem = cfg.num_patterns - b * 64;
        if (rem < 64) live = (1ULL << rem) - 1;
        words = simulate_block(c, pis);
        uint64_t accept = live;
        if (po_conditioned) accept &= words[c.po];
        sink(words, accept, b);
    }
}

}  // namespace

std::optional<SimProfile> conditional_estimate(const AigCircuit& c, const Mask& m, const SimConfig& cfg) {
    std::vector<uint64_t> ones(c.size(), 0);
    uint64_t accepted = 0;
    run_masked_simulation(c, m, cfg, [&](const std::vector<uint64_t>& words, uint64_t accept, uint64_t) {
        accepted += std::popcount(accept);
        for (int v = 0; v < c.size(); ++v) ones[v] += std::popcount(words[v] & accept);
    });
    if (accepted < cfg.min_accepted) return std::nullopt;
    SimProfile p;
    p.accepted = accepted;
    p.theta.resize(c.size());
    for (int v = 0; v < c.size(); ++v) p.theta[v] = static_cast<double>(ones[v]) / accepted;
    return p;
}

SimProfile estimate_probabilities(const AigCircuit& c, const SimConfig& cfg) {
    SimConfig unconditional = cfg;
    unconditional.min_accepted = 1;
    auto p = conditional_estimate(c, Mask::empty(c), unconditional);
    return *p;  // empty mask accepts every pattern
}

std::vector<Assignment> sample_accepted_assignments(const AigCircuit& c, const Mask& m,
                                                    const SimConfig& cfg, size_t count) {
    // uniform reservoir over accepted patterns; reservoir RNG is a separate
    // stream so pattern generation stays aligned with conditional_estimate
    SplitMix64 pick(mix_seed(cfg.seed, 0x7265736572766FULL));
    std::vector<Assignment> reservoir;
    uint64_t seen = 0;
    run_masked_simulation(c, m, cfg, [&](const std::vector<uint64_t>& words, uint64_t accept, uint64_t) {
        while (accept) {
            int lane = std::countr_zero(accept);
            accept &= accept - 1;
            ++seen;
            size_t slot;
            if (reservoir.size() < count) {
                slot = reservoir.size();
                reservoir.emplace_back();
            } else {
                uint64_t j = pick.next_below(seen);
                if (j >= count) continue;
                slot = static_cast<size_t>(j);
            }
            Assignment a(c.num_pis);
            for (int i = 0; i < c.num_pis; ++i) a[i] = (words[i] >> lane) & 1;
            reservoir[slot] = std::move(a);
        }
    });
    return reservoir;
}

std::optional<SimProfile> exact_profile(const AigCircuit& c, const Mask& m) {
    m.validate(c);
    if (c.num_pis > 26) throw std::invalid_argument("exact_profile limited to 26 PIs");
    bool po_conditioned = m.values[c.po] == 1;

    // enumerate 2^I assignments in 64-lane blocks; PI i takes bit i of the
    // global pattern index
    int i_count = c.num_pis;
    uint64_t total = i_count == 0 ? 1 : (1ULL << i_count);
    uint64_t blocks = (total + 63) / 64;
    std::vector<uint64_t> ones(c.size(), 0);
    uint64_t accepted = 0;
    static constexpr uint64_t kVarWord[6] = {
        0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
        0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
    std::vector<uint64_t> pis(c.num_pis);
    for (uint64_t b = 0; b < blocks; ++b) {
        for (int i = 0; i < i_count; ++i) {
            uint64_t w;
            if (i < 6) w = kVarWord[i];
            else w = ((b >> (i - 6)) & 1) ? ~0ULL : 0ULL;
            pis[i] = w;
        }
        uint64_t keep = total - b * 64 < 64 ? (1ULL << (total - b * 64)) - 1 : ~0ULL;
        // masked PIs restrict the enumeration
        for (int i = 0; i < i_count; ++i) {
            if (m.values[i] == 1) keep &= pis[i];
            else if (m.values[i] == -1) keep &= ~pis[i];
        }
        std::vector<uint64_t> words = simulate_block(c, pis);
        uint64_t accept = keep;
        if (po_conditioned) accept &= words[c.po];
        accepted += std::popcount(accept);
        for (int v = 0; v < c.size(); ++v) ones[v] += std::popcount(words[v] & accept);
    }
    if (accepted == 0) return std::nullopt;
    SimProfile p;
    p.accepted = accepted;
    p.theta.resize(c.size());
    for (int v = 0; v < c.size(); ++v) p.theta[v] = static_cast<double>(ones[v]) / accepted;
    return p;
}

std::vector<ErrorStudyRow> simulation_error_study(const std::vector<AigCircuit>& circuits,
                                                  const std::vector<uint64_t>& sample_counts,
                                                  uint64_t seed) {
    std::vector<ErrorStudyRow> rows;
    for (uint64_t n : sample_counts) {
        double sum = 0;
        uint64_t entries = 0;
        for (size_t ci = 0; ci < circuits.size(); ++ci) {
            const AigCircuit& c = circuits[ci];
            auto exact = exact_profile(c, Mask::empty(c));
            SimConfig cfg{n, mix_seed(seed, ci), 1};
            SimProfile sim = estimate_probabilities(c, cfg);
            for (int v = 0; v < c.size(); ++v) {
                sum += std::abs(sim.theta[v] - exact->theta[v]);
                ++entries;
            }
        }
        rows.push_back(ErrorStudyRow{n, entries ? sum / entries : 0.0});
    }
    return rows;
}

DatasetBuildResult build_dataset(const std::vector<std::shared_ptr<const AigCircuit>>& circuits,
                                 const std::vector<std::string>& refs,
                                 const MaskPolicy& policy, const SimConfig& cfg) {
    DatasetBuildResult out;
    for (size_t ci = 0; ci < circuits.size(); ++ci) {
        const auto& cptr = circuits[ci];
        const AigCircuit& c = *cptr;
        std::string ref = ci < refs.size() ? refs[ci] : "";
        Mask po_mask = Mask::po_condition(c);

        SimConfig rec_cfg = cfg;
        rec_cfg.seed = mix_seed(cfg.seed, ci, 0);
        auto base = conditional_estimate(c, po_mask, rec_cfg);
        if (!base) {
            ++out.dropped;  // condition unsatisfiable or too rare; skip circuit
            continue;
        }
        out.records.push_back(DatasetRecord{cptr, ref, po_mask, *base});

        for (int r = 1; r <= policy.extra_records_per_circuit; ++r) {
            if (c.num_pis < 2) break;  // no room for extra masked PIs
            SimConfig sub_cfg = cfg;
            sub_cfg.seed = mix_seed(cfg.seed, ci, r);
            auto pattern = sample_accepted_assignments(c, po_mask, sub_cfg, 1);
            if (pattern.empty()) { ++out.dropped; continue; }

            SplitMix64 pick(mix_seed(cfg.seed ^ 0x6D61736BULL, ci, r));
            int k = 1 + static_cast<int>(pick.next_below(c.num_pis - 1));  // U{1..I-1}
            Mask m = po_mask;
            // sample k distinct PIs
            std::vector<int> ids(c.num_pis);
            for (int i = 0; i < c.num_pis; ++i) ids[i] = i;
            for (int i = 0; i < k; ++i) {
                int j = i + static_cast<int>(pick.next_below(c.num_pis - i));
                std::swap(ids[i], ids[j]);
                m.values[ids[i]] = pattern[0][ids[i]] ? 1 : -1;
            }
            auto prof = conditional_estimate(c, m, sub_cfg);
            if (!prof) { ++out.dropped; continue; }
            out.records.push_back(DatasetRecord{cptr, ref, m, *prof});
        }
    }
    return out;
}

std::string write_dataset(const std::vector<DatasetRecord>& records) {
    std::ostringstream out;
    char buf[16];
    for (const DatasetRecord& r : records) {
        out << r.circuit_ref << '\t';
        for (size_t i = 0; i < r.mask.values.size(); ++i) {
            if (i) out << ' ';
            out << static_cast<int>(r.mask.values[i]);
        }
        out << '\t';
        for (size_t i = 0; i < r.theta.theta.size(); ++i) {
            if (i) out << ' ';
            std::snprintf(buf, sizeof buf, "%.6f", r.theta.theta[i]);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

std::vector<DatasetRecord> read_dataset(
    const std::string& text,
    const std::function<std::shared_ptr<const AigCircuit>(const std::string&)>& load_circuit) {
    std::vector<DatasetRecord> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw ParseError("dataset line must have three tab-separated fields");
        DatasetRecord r;
        r.circuit_ref = line.substr(0, t1);
        r.circuit = load_circuit(r.circuit_ref);
        std::istringstream ms(line.substr(t1 + 1, t2 - t1 - 1));
        int mv;
        while (ms >> mv) r.mask.values.push_back(static_cast<int8_t>(mv));
        std::istringstream ts(line.substr(t2 + 1));
        double tv;
        while (ts >> tv) r.theta.theta.push_back(tv);
        if (r.circuit && (r.mask.values.size() != r.circuit->nodes.size() ||
                          r.theta.theta.size() != r.circuit->nodes.size()))
            throw ParseError("dataset record length mismatch for " + r.circuit_ref);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace aigsat
