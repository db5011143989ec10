#include "aigsat/ad.hpp"

#include <cmath>
#include <stdexcept>

namespace aigsat::ad {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tape::Tape(const double* params, double* param_grad, size_t num_params)
    : params_(params), param_grad_(param_grad), num_params_(num_params) {}

int Tape::push(Node n, std::vector<double> value) {
    nodes_.push_back(std::move(n));
    values_.push_back(std::move(value));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(std::vector<double> v) { return push(Node{Op::Const}, std::move(v)); }

int Tape::param_vector(int offset, int n) {
    if (offset < 0 || offset + n > static_cast<int>(num_params_)) throw std::out_of_range("param_vector");
    Node nd{Op::Param};
    nd.offset = offset;
    nd.rows = n;
    return push(std::move(nd), std::vector<double>(params_ + offset, params_ + offset + n));
}

int Tape::matvec(int offset, int rows, int cols, int x) {
    if (static_cast<int>(values_[x].size()) != cols) throw std::invalid_argument("matvec shape");
    if (offset + rows * cols > static_cast<int>(num_params_)) throw std::out_of_range("matvec");
    std::vector<double> y(rows, 0.0);
    const double* w = params_ + offset;
    const double* xv = values_[x].data();
    for (int r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        double acc = 0;
        for (int c = 0; c < cols; ++c) acc += row[c] * xv[c];
        y[r] = acc;
    }
    Node nd{Op::MatVec};
    nd.a = x;
    nd.offset = offset;
    nd.rows = rows;
    nd.cols = cols;
    return push(std::move(nd), std::move(y));
}

int Tape::dot_param(int offset, int n, int x) {
    if (static_cast<int>(values_[x].size()) != n) throw std::invalid_argument("dot shape");
    const double* w = params_ + offset;
    const double* xv = values_[x].data();
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += w[i] * xv[i];
    Node nd{Op::Dot};
    nd.a = x;
    nd.offset = offset;
    nd.rows = n;
    return push(std::move(nd), {acc});
}

int Tape::add(int a, int b) {
    const auto& va = values_[a];
    const auto& vb = values_[b];
    if (va.size() != vb.size()) throw std::invalid_argument("add shape");
    std::vector<double> y(va.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = va[i] + vb[i];
    Node nd{Op::Add};
    nd.a = a;
    nd.b = b;
    return push(std::move(nd), std::move(y));
}

int Tape::hadamard(int a, int b) {
    const auto& va = values_[a];
    const auto& vb = values_[b];
    if (va.size() != vb.size()) throw std::invalid_argument("hadamard shape");
    std::vector<double> y(va.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = va[i] * vb[i];
    Node nd{Op::Hadamard};
    nd.a = a;
    nd.b = b;
    return push(std::move(nd), std::move(y));
}

int Tape::one_minus(int a) {
    std::vector<double> y(values_[a].size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = 1.0 - values_[a][i];
    Node nd{Op::OneMinus};
    nd.a = a;
    return push(std::move(nd), std::move(y));
}

int Tape::sigmoid(int a) {
    std::vector<double> y(values_[a].size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = stable_sigmoid(values_[a][i]);
    Node nd{Op::Sigmoid};
    nd.a = a;
    return push(std::move(nd), std::move(y));
}

int Tape::tanh(int a) {
    std::vector<double> y(values_[a].size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(values_[a][i]);
    Node nd{Op::Tanh};
    nd.a = a;
    return push(std::move(nd), std::move(y));
}

int Tape::relu(int a) {
    std::vector<double> y(values_[a].size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = values_[a][i] > 0 ? values_[a][i] : 0.0;
    Node nd{Op::Relu};
    nd.a = a;
    return push(std::move(nd), std::move(y));
}

int Tape::concat_const(int a, const std::vector<double>& tail) {
    std::vector<double> y = values_[a];
    y.insert(y.end(), tail.begin(), tail.end());
    Node nd{Op::ConcatConst};
    nd.a = a;
    nd.rows = static_cast<int>(values_[a].size());
    return push(std::move(nd), std::move(y));
}

int Tape::softmax(const std::vector<int>& scalars) {
    std::vector<double> s(scalars.size());
    for (size_t i = 0; i < scalars.size(); ++i) s[i] = values_[scalars[i]][0];
    double mx = s[0];
    for (double v : s) mx = std::max(mx, v);
    double sum = 0;
    for (double& v : s) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : s) v /= sum;
    Node nd{Op::Softmax};
    nd.list = scalars;
    return push(std::move(nd), std::move(s));
}

int Tape::weighted_sum(int alpha, const std::vector<int>& hs) {
    const auto& a = values_[alpha];
    if (a.size() != hs.size()) throw std::invalid_argument("weighted_sum arity");
    size_t d = values_[hs[0]].size();
    std::vector<double> y(d, 0.0);
    for (size_t i = 0; i < hs.size(); ++i) {
        const auto& h = values_[hs[i]];
        for (size_t j = 0; j < d; ++j) y[j] += a[i] * h[j];
    }
    Node nd{Op::WeightedSum};
    nd.a = alpha;
    nd.list = hs;
    return push(std::move(nd), std::move(y));
}

int Tape::mae_loss(const std::vector<int>& preds, const std::vector<double>& targets,
                   const std::vector<uint8_t>& include) {
    if (preds.size() != targets.size() || preds.size() != include.size())
        throw std::invalid_argument("mae_loss arity");
    int k = 0;
    double sum = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (!include[i]) continue;
        sum += std::abs(values_[preds[i]][0] - targets[i]);
        ++k;
    }
    if (k == 0) throw std::invalid_argument("loss undefined: every node is masked");
    Node nd{Op::MaeLoss};
    nd.list = preds;
    nd.aux = targets;
    nd.auxflag = include;
    nd.rows = k;
    return push(std::move(nd), {sum / k});
}

void Tape::backward(int seed_var) {
    grads_.assign(values_.size(), {});
    auto grad_of = [&](int v) -> std::vector<double>& {
        if (grads_[v].empty()) grads_[v].assign(values_[v].size(), 0.0);
        return grads_[v];
    };
    grad_of(seed_var)[0] = 1.0;

    for (int v = static_cast<int>(nodes_.size()) - 1; v >= 0; --v) {
        if (grads_[v].empty()) continue;  // no influence on the seed
        const Node& n = nodes_[v];
        const std::vector<double>& g = grads_[v];
        const std::vector<double>& val = values_[v];
        switch (n.op) {
            case Op::Const: break;
            case Op::Param: {
                double* pg = param_grad_ + n.offset;
                for (int i = 0; i < n.rows; ++i) pg[i] += g[i];
                break;
            }
            case Op::MatVec: {
                const double* w = params_ + n.offset;
                double* wg = param_grad_ + n.offset;
                const std::vector<double>& x = values_[n.a];
                std::vector<double>& xg = grad_of(n.a);
                for (int r = 0; r < n.rows; ++r) {
                    double gr = g[r];
                    if (gr == 0) continue;
                    const double* row = w + r * n.cols;
                    double* wrow = wg + r * n.cols;
                    for (int c = 0; c < n.cols; ++c) {
                        wrow[c] += gr * x[c];
                        xg[c] += gr * row[c];
                    }
                }
                break;
            }
            case Op::Dot: {
                const double* w = params_ + n.offset;
                double* wg = param_grad_ + n.offset;
                const std::vector<double>& x = values_[n.a];
                std::vector<double>& xg = grad_of(n.a);
                double gs = g[0];
                for (int i = 0; i < n.rows; ++i) {
                    wg[i] += gs * x[i];
                    xg[i] += gs * w[i];
                }
                break;
            }
            case Op::Add: {
                std::vector<double>& ga = grad_of(n.a);
                std::vector<double>& gb = grad_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case Op::Hadamard: {
                std::vector<double>& ga = grad_of(n.a);
                std::vector<double>& gb = grad_of(n.b);
                const auto& va = values_[n.a];
                const auto& vb = values_[n.b];
                for (size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * vb[i];
                    gb[i] += g[i] * va[i];
                }
                break;
            }
            case Op::OneMinus: {
                std::vector<double>& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
                break;
            }
            case Op::Sigmoid: {
                std::vector<double>& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * val[i] * (1.0 - val[i]);
                break;
            }
            case Op::Tanh: {
                std::vector<double>& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - val[i] * val[i]);
                break;
            }
            case Op::Relu: {
                std::vector<double>& ga = grad_of(n.a);
                const auto& va = values_[n.a];
                for (size_t i = 0; i < g.size(); ++i)
                    if (va[i] > 0) ga[i] += g[i];
                break;
            }
            case Op::ConcatConst: {
                std::vector<double>& ga = grad_of(n.a);
                for (int i = 0; i < n.rows; ++i) ga[i] += g[i];
                break;
            }
            case Op::Softmax: {
                double dot = 0;
                for (size_t i = 0; i < g.size(); ++i) dot += g[i] * val[i];
                for (size_t i = 0; i < n.list.size(); ++i)
                    grad_of(n.list[i])[0] += val[i] * (g[i] - dot);
                break;
            }
            case Op::WeightedSum: {
                std::vector<double>& galpha = grad_of(n.a);
                const auto& alpha = values_[n.a];
                for (size_t i = 0; i < n.list.size(); ++i) {
                    const auto& h = values_[n.list[i]];
                    std::vector<double>& gh = grad_of(n.list[i]);
                    double acc = 0;
                    for (size_t j = 0; j < g.size(); ++j) {
                        acc += g[j] * h[j];
                        gh[j] += alpha[i] * g[j];
                    }
                    galpha[i] += acc;
                }
                break;
            }
            case Op::MaeLoss: {
                double gs = g[0] / n.rows;
                for (size_t i = 0; i < n.list.size(); ++i) {
                    if (!n.auxflag[i]) continue;
                    double diff = values_[n.list[i]][0] - n.aux[i];
                    double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
                    grad_of(n.list[i])[0] += gs * s;
                }
                break;
            }
        }
    }
}

}  // namespace aigsat::ad
