#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aigsat/circuit.hpp"

namespace aigsat {

// Estimated probability of each node being logic '1'.
struct SimProfile {
    std::vector<double> theta;   // per node, in [0,1]
    uint64_t accepted = 0;       // patterns (or assignments) the estimate is based on

    bool operator==(const SimProfile&) const = default;
};

struct SimConfig {
    uint64_t num_patterns = 15000;
    uint64_t seed = 1;
    uint64_t min_accepted = 100;
};

// ---------------------------------------------------------------------------
// Bit-parallel simulation (64 patterns per word)
// ---------------------------------------------------------------------------

// pattern_words[i] is the input word of PI i; returns one word per node
std::vector<uint64_t> simulate_block(const AigCircuit& c, const std::vector<uint64_t>& pattern_words);

// unconditional estimate over cfg.num_patterns uniform random patterns
SimProfile estimate_probabilities(const AigCircuit& c, const SimConfig& cfg);

// Masked PIs are forced to their mask value; patterns violating a PO mask of
// 1 are rejected. nullopt when fewer than cfg.min_accepted patterns survive.
std::optional<SimProfile> conditional_estimate(const AigCircuit& c, const Mask& m, const SimConfig& cfg);

// Up to `count` accepted PI assignments drawn uniformly (reservoir) from the
// same pattern stream conditional_estimate uses.
std::vector<Assignment> sample_accepted_assignments(const AigCircuit& c, const Mask& m,
                                                    const SimConfig& cfg, size_t count);

// Exact conditional probabilities by full 2^I enumeration (I <= 26).
// nullopt when no assignment fulfills the condition.
std::optional<SimProfile> exact_profile(const AigCircuit& c, const Mask& m);

// ---------------------------------------------------------------------------
// Error study (simulation vs enumeration)
// ---------------------------------------------------------------------------

struct ErrorStudyRow {
    uint64_t num_patterns;
    double mean_abs_error;
};

std::vector<ErrorStudyRow> simulation_error_study(const std::vector<AigCircuit>& circuits,
                                                  const std::vector<uint64_t>& sample_counts,
                                                  uint64_t seed);

// ---------------------------------------------------------------------------
// Training records
// ---------------------------------------------------------------------------

struct DatasetRecord {
    std::shared_ptr<const AigCircuit> circuit;
    std::string circuit_ref;  // file reference for serialization (may be empty)
    Mask mask;
    SimProfile theta;
};

struct MaskPolicy {
    int extra_records_per_circuit = 3;  // besides the PO-only record
};

struct DatasetBuildResult {
    std::vector<DatasetRecord> records;
    uint64_t dropped = 0;  // records discarded for insufficient accepted patterns
};

// Per circuit: one record with only the PO masked to 1, plus
// policy.extra_records_per_circuit records with k ~ U{1..I-1} additional
// masked PIs copied from a randomly chosen accepted pattern. A circuit whose
// PO condition cannot be met contributes zero records and one drop.
DatasetBuildResult build_dataset(const std::vector<std::shared_ptr<const AigCircuit>>& circuits,
                                 const std::vector<std::string>& refs,
                                 const MaskPolicy& policy, const SimConfig& cfg);

// one record per line: ref TAB mask ints TAB theta (6 decimal places)
std::string write_dataset(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(const std::string& text,
                                        const std::function<std::shared_ptr<const AigCircuit>(const std::string&)>& load_circuit);

}  // namespace aigsat
