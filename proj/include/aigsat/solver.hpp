#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aigsat/circuit.hpp"
#include "aigsat/model.hpp"
#include "aigsat/sim.hpp"

namespace aigsat {

enum class SolveStatus { Satisfied, Unknown };

struct SolveResult {
    SolveStatus status = SolveStatus::Unknown;
    Assignment assignment;      // valid when Satisfied
    int rounds_used = 0;        // sampled candidate assignments (<= I+1)
    int predictor_calls = 0;
};

// Maps (circuit, mask) to per-PI probability predictions. UnsatCondition is
// how oracle-backed predictors signal an unsatisfiable condition; model
// predictors always return numbers.
class Predictor {
public:
    struct Result {
        bool unsat_condition = false;
        std::vector<double> pi_theta;
    };
    virtual ~Predictor() = default;
    virtual Result predict_pis(const AigCircuit& c, const Mask& m) const = 0;
};

// exact enumeration oracle (I <= 26)
class OraclePredictor : public Predictor {
public:
    Result predict_pis(const AigCircuit& c, const Mask& m) const override;
};

class ModelPredictor : public Predictor {
public:
    ModelPredictor(ModelParams params, uint64_t seed) : params_(std::move(params)), seed_(seed) {}
    Result predict_pis(const AigCircuit& c, const Mask& m) const override;

private:
    ModelParams params_;
    uint64_t seed_;
};

// uniform noise; the control baseline for evaluation harnesses
class RandomPredictor : public Predictor {
public:
    explicit RandomPredictor(uint64_t seed) : seed_(seed) {}
    Result predict_pis(const AigCircuit& c, const Mask& m) const override;

private:
    uint64_t seed_;
};

// pre-assignment entries: -1 false, 0 undetermined, 1 true
using PreAssignment = std::vector<int8_t>;

struct IterativeResult {
    bool aborted = false;          // predictor signalled an unsatisfiable condition
    PreAssignment assignment;      // all entries decided when !aborted
    std::vector<int> order;        // PIs in decision order (pre-assigned ones excluded)
    int predictor_calls = 0;
};

// Auto-regressive decisions: repeatedly mask PO=1 plus everything already
// determined, query the predictor, fix the undetermined PI with the most
// confident prediction (|theta - 0.5| maximal, ties to the lowest index;
// theta >= 0.5 assigns 1).
IterativeResult iterative_solve(const AigCircuit& c, const Predictor& pred, const PreAssignment& pre);

// evaluate(c, a) and require PO == 1
bool verify(const AigCircuit& c, const Assignment& a);

// Initial iterative solve plus flipping-based backtracking: round r keeps
// the first r-1 decisions, flips the r-th and re-solves. At most I+1
// candidate assignments are sampled.
SolveResult solve_with_flipping(const AigCircuit& c, const Predictor& pred);

struct SuiteMetrics {
    int instances = 0;
    int solved = 0;
    double solved_fraction = 0;
    double mean_rounds = 0;       // over solved instances
    std::vector<int> rounds_histogram;  // index r-1: instances solved at round r
};

struct SuiteItem {
    std::string name;
    SolveResult result;
    double wall_ms = 0;
};

struct SuiteReport {
    SuiteMetrics metrics;
    std::vector<SuiteItem> items;
};

SuiteReport evaluate_suite(const std::vector<AigCircuit>& instances,
                           const std::vector<std::string>& names, const Predictor& pred);

// Appendix-style simplified sampling schemes, for comparison harnesses only.
enum class BaselineScheme {
    OneShot,          // single query, threshold each PI at 0.5
    MostUncertain,    // iterative, pick |theta-0.5| minimal
    MostCertainOnce,  // iterative most-confident without flipping
};

std::optional<Assignment> baseline_scheme(const AigCircuit& c, const Predictor& pred,
                                          BaselineScheme scheme);

std::string write_suite_jsonl(const SuiteReport& report);
std::string write_suite_csv(const SuiteMetrics& m);

}  // namespace aigsat
