#include "aigsat/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "aigsat/ad.hpp"
#include "aigsat/rng.hpp"

namespace aigsat {

std::vector<double> prototype_pos(int dim) { return std::vector<double>(dim, 1.0); }
std::vector<double> prototype_neg(int dim) { return std::vector<double>(dim, -1.0); }

// ---------------------------------------------------------------------------
// parameter layout
// ---------------------------------------------------------------------------

ModelParams::Layout ModelParams::layout() const {
    Layout l{};
    int d = dim;
    int in = d + 3;
    l.input_dim = in;
    int off = 0;
    auto take = [&](int n) { int o = off; off += n; return o; };
    l.fw_w1 = take(d);
    l.fw_w2 = take(d);
    l.fw_wih = take(3 * d * in);
    l.fw_whh = take(3 * d * d);
    l.fw_bih = take(3 * d);
    l.fw_bhh = take(3 * d);
    l.rv_w1 = take(d);
    l.rv_w2 = take(d);
    l.rv_wih = take(3 * d * in);
    l.rv_whh = take(3 * d * d);
    l.rv_bih = take(3 * d);
    l.rv_bhh = take(3 * d);
    l.reg_w1 = take(d * d);
    l.reg_b1 = take(d);
    l.reg_w2 = take(d * d);
    l.reg_b2 = take(d);
    l.reg_w3 = take(d);
    l.reg_b3 = take(1);
    l.total = off;
    return l;
}

std::vector<ParamGroup> ModelParams::groups() const {
    Layout l = layout();
    int d = dim, in = l.input_dim;
    return {
        {"fw.attn_w1", l.fw_w1, d},        {"fw.attn_w2", l.fw_w2, d},
        {"fw.gru_wih", l.fw_wih, 3 * d * in}, {"fw.gru_whh", l.fw_whh, 3 * d * d},
        {"fw.gru_bih", l.fw_bih, 3 * d},   {"fw.gru_bhh", l.fw_bhh, 3 * d},
        {"rv.attn_w1", l.rv_w1, d},        {"rv.attn_w2", l.rv_w2, d},
        {"rv.gru_wih", l.rv_wih, 3 * d * in}, {"rv.gru_whh", l.rv_whh, 3 * d * d},
        {"rv.gru_bih", l.rv_bih, 3 * d},   {"rv.gru_bhh", l.rv_bhh, 3 * d},
        {"reg.w1", l.reg_w1, d * d},       {"reg.b1", l.reg_b1, d},
        {"reg.w2", l.reg_w2, d * d},       {"reg.b2", l.reg_b2, d},
        {"reg.w3", l.reg_w3, d},           {"reg.b3", l.reg_b3, 1},
    };
}

ModelParams ModelParams::init(int dim, uint64_t seed) {
    ModelParams p;
    p.dim = dim;
    Layout l = p.layout();
    p.values.assign(l.total, 0.0);
    SplitMix64 gen(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& v : p.values) v = (2.0 * gen.next_u01() - 1.0) * bound;
    return p;
}

// ---------------------------------------------------------------------------
// propagation graph construction
// ---------------------------------------------------------------------------

namespace {

// scheduling levels: every gate (NOT included) adds one, so that nodes on
// the same level never depend on each other
std::vector<int> strict_levels(const AigCircuit& c) {
    std::vector<int> lv(c.size(), 0);
    for (int v = 0; v < c.size(); ++v) {
        const AigNode& n = c.nodes[v];
        if (n.kind == NodeKind::NOT) lv[v] = 1 + lv[n.fanin0];
        if (n.kind == NodeKind::AND2) lv[v] = 1 + std::max(lv[n.fanin0], lv[n.fanin1]);
    }
    return lv;
}

std::vector<double> gate_one_hot(NodeKind k) {
    switch (k) {
        case NodeKind::PI: return {1, 0, 0};
        case NodeKind::AND2: return {0, 1, 0};
        case NodeKind::NOT: return {0, 0, 1};
        default: throw std::invalid_argument("constant nodes have no gate-type encoding");
    }
}

struct LayerOffsets {
    int w1, w2, wih, whh, bih, bhh;
};

// The GRU consumes slices of the stacked weight blocks; rather than adding a
// slice op the three gates address their own sub-matrix offsets directly.
struct GruOffsets {
    int w_r, w_z, w_n;  // input weights, each d x in
    int u_r, u_z, u_n;  // state weights, each d x d
    int bi_r, bi_z, bi_n;
    int bh_r, bh_z, bh_n;
};

GruOffsets gru_offsets(const LayerOffsets& lo, int d, int in) {
    GruOffsets g{};
    g.w_r = lo.wih;
    g.w_z = lo.wih + d * in;
    g.w_n = lo.wih + 2 * d * in;
    g.u_r = lo.whh;
    g.u_z = lo.whh + d * d;
    g.u_n = lo.whh + 2 * d * d;
    g.bi_r = lo.bih;
    g.bi_z = lo.bih + d;
    g.bi_n = lo.bih + 2 * d;
    g.bh_r = lo.bhh;
    g.bh_z = lo.bhh + d;
    g.bh_n = lo.bhh + 2 * d;
    return g;
}

int gru_update(ad::Tape& t, const ModelParams& p, const LayerOffsets& lo, int x, int h) {
    int d = p.dim;
    int in = d + 3;
    GruOffsets go = gru_offsets(lo, d, in);
    int r = t.sigmoid(t.add(t.add(t.matvec(go.w_r, d, in, x), t.param_vector(go.bi_r, d)),
                            t.add(t.matvec(go.u_r, d, d, h), t.param_vector(go.bh_r, d))));
    int z = t.sigmoid(t.add(t.add(t.matvec(go.w_z, d, in, x), t.param_vector(go.bi_z, d)),
                            t.add(t.matvec(go.u_z, d, d, h), t.param_vector(go.bh_z, d))));
    int n = t.tanh(t.add(t.add(t.matvec(go.w_n, d, in, x), t.param_vector(go.bi_n, d)),
                         t.hadamard(r, t.add(t.matvec(go.u_n, d, d, h), t.param_vector(go.bh_n, d)))));
    // h' = (1 - z) .* n + z .* h
    return t.add(t.hadamard(t.one_minus(z), n), t.hadamard(z, h));
}

int aggregate(ad::Tape& t, const ModelParams& p, const LayerOffsets& lo, int h_query,
              const std::vector<int>& neighbors) {
    int d = p.dim;
    if (neighbors.size() == 1) return neighbors[0];
    std::vector<int> scores;
    int q = t.dot_param(lo.w1, d, h_query);
    for (int u : neighbors) scores.push_back(t.add(q, t.dot_param(lo.w2, d, u)));
    int alpha = t.softmax(scores);
    return t.weighted_sum(alpha, neighbors);
}

// full propagation over the circuit on a tape; returns per-node state vars
std::vector<int> sweep(ad::Tape& t, const AigCircuit& c, const ModelParams& p, bool forward,
                       const std::vector<int>& h_in) {
    ModelParams::Layout l = p.layout();
    LayerOffsets lo = forward ? LayerOffsets{l.fw_w1, l.fw_w2, l.fw_wih, l.fw_whh, l.fw_bih, l.fw_bhh}
                              : LayerOffsets{l.rv_w1, l.rv_w2, l.rv_wih, l.rv_whh, l.rv_bih, l.rv_bhh};

    std::vector<int> lv = strict_levels(c);
    int max_lv = 0;
    for (int v : lv) max_lv = std::max(max_lv, v);
    std::vector<std::vector<int>> by_level(max_lv + 1);
    for (int v = 0; v < c.size(); ++v) by_level[lv[v]].push_back(v);

    std::vector<std::vector<int>> nbr(c.size());
    if (forward) {
        for (int v = 0; v < c.size(); ++v) {
            const AigNode& n = c.nodes[v];
            if (n.kind == NodeKind::NOT) nbr[v] = {n.fanin0};
            if (n.kind == NodeKind::AND2) nbr[v] = {n.fanin0, n.fanin1};
        }
    } else {
        for (int v = 0; v < c.size(); ++v) {
            const AigNode& n = c.nodes[v];
            if (n.kind == NodeKind::NOT) nbr[n.fanin0].push_back(v);
            if (n.kind == NodeKind::AND2) {
                nbr[n.fanin0].push_back(v);
                nbr[n.fanin1].push_back(v);
            }
        }
    }

    std::vector<int> h = h_in;
    auto process = [&](int v) {
        std::vector<int> neigh;
        for (int u : nbr[v]) neigh.push_back(h[u]);
        if (neigh.empty()) return;  // sources keep their input state
        int agg = aggregate(t, p, lo, h_in[v], neigh);
        int x = t.concat_const(agg, gate_one_hot(c.nodes[v].kind));
        h[v] = gru_update(t, p, lo, x, h_in[v]);
    };
    if (forward) {
        for (int L = 0; L <= max_lv; ++L)
            for (int v : by_level[L]) process(v);
    } else {
        for (int L = max_lv; L >= 0; --L)
            for (int v : by_level[L]) process(v);
    }
    return h;
}

std::vector<int> masked_vars(ad::Tape& t, const AigCircuit& c, const Mask& m, const ModelParams& p,
                             const std::vector<int>& h) {
    std::vector<int> out = h;
    for (int v = 0; v < c.size(); ++v) {
        if (m.values[v] == 1) out[v] = t.constant(prototype_pos(p.dim));
        else if (m.values[v] == -1) out[v] = t.constant(prototype_neg(p.dim));
    }
    return out;
}

std::vector<int> regressor_heads(ad::Tape& t, const AigCircuit& c, const ModelParams& p,
                                 const std::vector<int>& h) {
    ModelParams::Layout l = p.layout();
    int d = p.dim;
    std::vector<int> preds(c.size());
    for (int v = 0; v < c.size(); ++v) {
        int a1 = t.relu(t.add(t.matvec(l.reg_w1, d, d, h[v]), t.param_vector(l.reg_b1, d)));
        int a2 = t.relu(t.add(t.matvec(l.reg_w2, d, d, a1), t.param_vector(l.reg_b2, d)));
        int a3 = t.add(t.dot_param(l.reg_w3, d, a2), t.param_vector(l.reg_b3, 1));
        preds[v] = t.sigmoid(a3);
    }
    return preds;
}

HiddenState gaussian_init(const AigCircuit& c, int dim, uint64_t seed) {
    SplitMix64 gen(seed);
    HiddenState h(c.size(), std::vector<double>(dim));
    for (int v = 0; v < c.size(); ++v) {
        for (int j = 0; j < dim; ++j) {
            // Box-Muller
            double u1 = gen.next_u01();
            double u2 = gen.next_u01();
            u1 = std::max(u1, 1e-15);
            h[v][j] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        }
    }
    return h;
}

// build the full pipeline graph; returns per-node sigmoid prediction vars
std::vector<int> build_pipeline(ad::Tape& t, const AigCircuit& c, const Mask& m,
                                const ModelParams& p, const HiddenState& h_init) {
    std::vector<int> h0(c.size());
    for (int v = 0; v < c.size(); ++v) h0[v] = t.constant(h_init[v]);
    std::vector<int> hm = masked_vars(t, c, m, p, h0);
    std::vector<int> hf = sweep(t, c, p, true, hm);
    hf = masked_vars(t, c, m, p, hf);
    std::vector<int> hb = sweep(t, c, p, false, hf);
    hb = masked_vars(t, c, m, p, hb);
    return regressor_heads(t, c, p, hb);
}

}  // namespace

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

void apply_mask(HiddenState& h, const Mask& m) {
    if (h.size() != m.values.size()) throw std::invalid_argument("mask/state length mismatch");
    for (size_t v = 0; v < h.size(); ++v) {
        if (m.values[v] == 1) std::fill(h[v].begin(), h[v].end(), 1.0);
        else if (m.values[v] == -1) std::fill(h[v].begin(), h[v].end(), -1.0);
    }
}

HiddenState forward_prop(const AigCircuit& c, const HiddenState& h_init, const ModelParams& params) {
    std::vector<double> dummy_grad(params.values.size(), 0.0);
    ad::Tape t(params.values.data(), dummy_grad.data(), params.values.size());
    std::vector<int> h0(c.size());
    for (int v = 0; v < c.size(); ++v) h0[v] = t.constant(h_init[v]);
    std::vector<int> hf = sweep(t, c, params, true, h0);
    HiddenState out(c.size());
    for (int v = 0; v < c.size(); ++v) out[v] = t.value(hf[v]);
    return out;
}

HiddenState reverse_prop(const AigCircuit& c, const HiddenState& h_fw_masked, const ModelParams& params) {
    std::vector<double> dummy_grad(params.values.size(), 0.0);
    ad::Tape t(params.values.data(), dummy_grad.data(), params.values.size());
    std::vector<int> h0(c.size());
    for (int v = 0; v < c.size(); ++v) h0[v] = t.constant(h_fw_masked[v]);
    std::vector<int> hb = sweep(t, c, params, false, h0);
    HiddenState out(c.size());
    for (int v = 0; v < c.size(); ++v) out[v] = t.value(hb[v]);
    return out;
}

std::vector<double> predict(const AigCircuit& c, const Mask& m, const ModelParams& params,
                            uint64_t seed) {
    m.validate(c);
    HiddenState h_init = gaussian_init(c, params.dim, seed);
    std::vector<double> dummy_grad(params.values.size(), 0.0);
    ad::Tape t(params.values.data(), dummy_grad.data(), params.values.size());
    std::vector<int> preds = build_pipeline(t, c, m, params, h_init);
    std::vector<double> out(c.size());
    for (int v = 0; v < c.size(); ++v) {
        if (m.values[v] == 1) out[v] = 1.0;
        else if (m.values[v] == -1) out[v] = 0.0;
        else out[v] = t.scalar(preds[v]);
    }
    return out;
}

double loss(const std::vector<double>& predictions, const DatasetRecord& record) {
    if (predictions.size() != record.mask.values.size() ||
        predictions.size() != record.theta.theta.size())
        throw std::invalid_argument("loss length mismatch");
    double sum = 0;
    int k = 0;
    for (size_t v = 0; v < predictions.size(); ++v) {
        if (record.mask.values[v] != 0) continue;
        sum += std::abs(predictions[v] - record.theta.theta[v]);
        ++k;
    }
    if (k == 0) throw std::invalid_argument("loss undefined: every node is masked");
    return sum / k;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

// loss of one record on a fresh tape; gradients accumulate into grad
double record_loss_grad(const DatasetRecord& rec, const ModelParams& p, uint64_t seed,
                        std::vector<double>* grad) {
    const AigCircuit& c = *rec.circuit;
    HiddenState h_init = gaussian_init(c, p.dim, seed);
    std::vector<double> local(grad ? p.values.size() : 0, 0.0);
    ad::Tape t(p.values.data(), grad ? grad->data() : local.data(), p.values.size());
    std::vector<int> preds = build_pipeline(t, c, rec.mask, p, h_init);
    std::vector<double> targets = rec.theta.theta;
    std::vector<uint8_t> include(c.size(), 0);
    for (int v = 0; v < c.size(); ++v) include[v] = rec.mask.values[v] == 0;
    int lv = t.mae_loss(preds, targets, include);
    if (grad) t.backward(lv);
    return t.scalar(lv);
}

double mean_pe(const std::vector<const DatasetRecord*>& recs, const ModelParams& p, uint64_t seed) {
    if (recs.empty()) return 0;
    double sum = 0;
    for (size_t i = 0; i < recs.size(); ++i)
        sum += record_loss_grad(*recs[i], p, mix_seed(seed, i), nullptr);
    return sum / recs.size();
}

}  // namespace

TrainResult train(const std::vector<DatasetRecord>& dataset, const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("epochs/batch must be positive");
    if (dataset.empty()) throw std::invalid_argument("empty dataset");

    ModelParams p = ModelParams::init(64, mix_seed(cfg.seed, 0xC0DE));
    size_t n = dataset.size();

    // deterministic split
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    SplitMix64 shuffle_gen(mix_seed(cfg.seed, 0x5B1F));
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_gen.next_below(i)]);
    size_t val_n = std::min(n - 1, static_cast<size_t>(std::ceil(cfg.val_fraction * n)));
    std::vector<const DatasetRecord*> val, tr;
    for (size_t i = 0; i < n; ++i)
        (i < val_n ? val : tr).push_back(&dataset[order[i]]);

    std::vector<double> m(p.values.size(), 0.0), v2(p.values.size(), 0.0);
    std::vector<double> grad(p.values.size(), 0.0);
    double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long step = 0;

    TrainResult out;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        // reshuffle training order each epoch
        SplitMix64 egen(mix_seed(cfg.seed, 0xE0 + epoch));
        std::vector<const DatasetRecord*> sched = tr;
        for (size_t i = sched.size(); i > 1; --i) std::swap(sched[i - 1], sched[egen.next_below(i)]);

        double train_sum = 0;
        size_t train_count = 0;
        int batch_id = 0;
        for (size_t start = 0; start < sched.size(); start += cfg.batch_size, ++batch_id) {
            size_t end = std::min(sched.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0;
            for (size_t i = start; i < end; ++i) {
                uint64_t hseed = mix_seed(cfg.seed, 0x48 + epoch, i);
                batch_loss += record_loss_grad(*sched[i], p, hseed, &grad);
            }
            size_t bsz = end - start;
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite loss in batch " + std::to_string(batch_id), batch_id);
            train_sum += batch_loss * bsz;
            train_count += bsz;

            ++step;
            double c1 = 1.0 - std::pow(b1, step);
            double c2 = 1.0 - std::pow(b2, step);
            for (size_t j = 0; j < p.values.size(); ++j) {
                double g = grad[j] / bsz + cfg.weight_decay * p.values[j];
                m[j] = b1 * m[j] + (1 - b1) * g;
                v2[j] = b2 * v2[j] + (1 - b2) * g * g;
                p.values[j] -= cfg.learning_rate * (m[j] / c1) / (std::sqrt(v2[j] / c2) + eps);
            }
        }

        EpochStats es;
        es.epoch = epoch;
        es.train_pe = train_count ? train_sum / train_count : 0;
        es.val_pe = mean_pe(val, p, mix_seed(cfg.seed, 0x7A1, epoch));
        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.curve.push_back(es);
    }
    out.params = std::move(p);
    return out;
}

// ---------------------------------------------------------------------------
// gradient check
// ---------------------------------------------------------------------------

GradCheckReport grad_check(const ModelParams& params, const AigCircuit& circuit, double eps,
                           int max_checks_per_group, uint64_t seed) {
    Mask m = Mask::po_condition(circuit);
    // fixed synthetic targets keep |pred - target| far from the L1 kink
    DatasetRecord rec;
    auto circ = std::make_shared<AigCircuit>(circuit);
    rec.circuit = circ;
    rec.mask = m;
    rec.theta.theta.resize(circuit.size());
    for (int v = 0; v < circuit.size(); ++v) rec.theta.theta[v] = (v % 2) ? 0.8 : 0.2;

    uint64_t hseed = mix_seed(seed, 0x6C);
    ModelParams work = params;

    std::vector<double> analytic(params.values.size(), 0.0);
    record_loss_grad(rec, work, hseed, &analytic);

    GradCheckReport rep;
    SplitMix64 pick(mix_seed(seed, 0x9D));
    for (const ParamGroup& g : params.groups()) {
        std::vector<int> idxs;
        if (max_checks_per_group <= 0 || g.size <= max_checks_per_group) {
            idxs.resize(g.size);
            for (int i = 0; i < g.size; ++i) idxs[i] = i;
        } else {
            for (int i = 0; i < max_checks_per_group; ++i)
                idxs.push_back(static_cast<int>(pick.next_below(g.size)));
        }
        for (int i : idxs) {
            int j = g.offset + i;
            double save = work.values[j];
            work.values[j] = save + eps;
            double lp = record_loss_grad(rec, work, hseed, nullptr);
            work.values[j] = save - eps;
            double lm = record_loss_grad(rec, work, hseed, nullptr);
            work.values[j] = save;
            double fd = (lp - lm) / (2 * eps);
            double ga = analytic[j];
            double dev = std::abs(ga - fd) / std::max({std::abs(ga), std::abs(fd), 1e-4});
            if (dev > rep.max_rel_deviation) {
                rep.max_rel_deviation = dev;
                rep.worst_group = g.name;
                rep.worst_index = i;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

uint64_t fnv1a_bytes(const unsigned char* p, size_t n) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr uint32_t kCkptMagic = 0x41475343;  // "AGSC"

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    uint32_t magic = kCkptMagic, version = 1, dim = params.dim;
    uint64_t count = params.values.size();
    out.write(reinterpret_cast<const char*>(&magic), 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(params.values.data()), count * 8);
    uint64_t sum = fnv1a_bytes(reinterpret_cast<const unsigned char*>(params.values.data()), count * 8);
    out.write(reinterpret_cast<const char*>(&sum), 8);
}

ModelParams load_checkpoint(const std::string& path, int expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    uint32_t magic = 0, version = 0, dim = 0;
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || magic != kCkptMagic) throw std::runtime_error("not a checkpoint file");
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    ModelParams p;
    p.dim = static_cast<int>(dim);
    if (expected_dim && p.dim != expected_dim)
        throw std::runtime_error("checkpoint dimension mismatch: file has " + std::to_string(p.dim) +
                                 ", expected " + std::to_string(expected_dim));
    if (count != static_cast<uint64_t>(p.layout().total))
        throw std::runtime_error("checkpoint parameter count inconsistent with dimension");
    p.values.resize(count);
    in.read(reinterpret_cast<char*>(p.values.data()), count * 8);
    uint64_t sum = 0;
    in.read(reinterpret_cast<char*>(&sum), 8);
    if (!in) throw std::runtime_error("truncated checkpoint file");
    if (sum != fnv1a_bytes(reinterpret_cast<const unsigned char*>(p.values.data()), count * 8))
        throw std::runtime_error("checkpoint checksum mismatch");
    return p;
}

}  // namespace aigsat
