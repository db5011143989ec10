#pragma once

#include <cstdint>
#include <vector>

namespace aigsat::ad {

// Minimal eager reverse-mode tape over dense double vectors. Parameters live
// in one external flat array; their gradients accumulate into a parallel
// array. Built fresh for every evaluation (the graphs are dynamic).
class Tape {
public:
    Tape(const double* params, double* param_grad, size_t num_params);

    // leaves
    int constant(std::vector<double> v);
    int param_vector(int offset, int n);

    // y = W x, W row-major (rows x cols) at `offset` in the parameter array
    int matvec(int offset, int rows, int cols, int x);
    // scalar w.x with w at `offset` (n entries)
    int dot_param(int offset, int n, int x);

    int add(int a, int b);
    int hadamard(int a, int b);
    int one_minus(int a);
    int sigmoid(int a);
    int tanh(int a);
    int relu(int a);
    int concat_const(int a, const std::vector<double>& tail);

    // softmax over k size-1 vars -> size-k vector
    int softmax(const std::vector<int>& scalars);
    // sum_i alpha[i] * h_i
    int weighted_sum(int alpha, const std::vector<int>& hs);

    // mean |pred - target| over entries with include != 0; preds are size-1 vars
    int mae_loss(const std::vector<int>& preds, const std::vector<double>& targets,
                 const std::vector<uint8_t>& include);

    const std::vector<double>& value(int v) const { return values_[v]; }
    double scalar(int v) const { return values_[v][0]; }

    void backward(int seed_var);

private:
    enum class Op : uint8_t {
        Const, Param, MatVec, Dot, Add, Hadamard, OneMinus, Sigmoid, Tanh, Relu,
        ConcatConst, Softmax, WeightedSum, MaeLoss
    };
    struct Node {
        Op op;
        int a = -1, b = -1;
        int offset = -1, rows = 0, cols = 0;
        std::vector<int> list;
        std::vector<double> aux;      // targets for the loss
        std::vector<uint8_t> auxflag; // include flags
    };

    int push(Node n, std::vector<double> value);

    const double* params_;
    double* param_grad_;
    size_t num_params_;
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> grads_;
};

}  // namespace aigsat::ad
