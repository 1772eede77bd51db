#pragma once

// Scenario configuration: a JSON document describing one run.
//
// {
//   "name": "optional run name",
//   "method": "flow" | "vlasov" | "perturbation" | "fock" | "ensemble" | "compare",
//   "seed": 1,
//   "problem": {"mass": 1, "external": {"type": "harmonic", "omega": 1},
//               "pair": {"type": "gaussian", "strength": 0.1, "width": 1}},
//   "grid": {"q": {"lower": -8, "upper": 8, "cells": 128, "periodic": false}, "p": {...}},
//   "initial": {"type": "gaussian", "sigma_q": 1, "sigma_p": 1, "q0": 0, "p0": 0},
//   "time": {"final": 1.0, "snapshots": [0.5, 1.0]},
//   "output": {"directory": "runs"},
//   "flow": {...}, "vlasov": {...}, "perturbation": {...}, "fock": {...},
//   "ensemble": {...}, "compare": {...}
// }
//
// The README lists every key with its default.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kvn/ensemble.hpp"
#include "kvn/flow.hpp"
#include "kvn/fock.hpp"
#include "kvn/initial_density.hpp"
#include "kvn/perturbation.hpp"
#include "kvn/phase_space.hpp"
#include "kvn/vlasov.hpp"

namespace kvn {

enum class Method { flow, vlasov, perturbation, fock, ensemble, compare };

std::string method_name(Method m);

struct FlowRunConfig {
    FlowSettings settings;
    std::vector<PhasePoint> points;
    /// Read starting points from this CSV (columns q,p) instead of `points`.
    std::string points_csv;
    /// Keep every k-th trajectory sample.
    std::size_t output_every = 1;
};

struct FockRunConfig {
    std::size_t particles = 2;
    std::size_t cap = default_fock_dimension_cap;
    PropagationMethod propagation = PropagationMethod::automatic;
    double dt_fd = 1e-4;
    bool write_operator = false;
};

struct EnsembleRunConfig {
    EnsembleSettings settings;
    /// Sample sizes for compare runs.
    std::vector<std::size_t> n_list{1000, 10000, 100000};
    std::size_t replicates = 1;
    std::size_t coarsen = 4;
};

enum class Comparison { perturbation_vlasov, ensemble_vlasov };

struct CompareRunConfig {
    Comparison kind = Comparison::perturbation_vlasov;
    std::vector<double> epsilons{0.2, 0.1, 0.05};
};

struct ScenarioConfig {
    std::string name;
    Method method = Method::vlasov;
    std::uint64_t seed = 1;
    ProblemSpec problem;
    PhaseGrid grid;
    InitialDensity initial;
    double final_time = 1.0;
    std::vector<double> snapshots;
    std::string output_directory = "kvn_runs";

    FlowRunConfig flow;
    VlasovSettings vlasov;
    PerturbationSettings perturbation;
    FockRunConfig fock;
    EnsembleRunConfig ensemble;
    CompareRunConfig compare;
};

struct ConfigIssue {
    /// Dotted path to the offending key, e.g. "grid.q.cells".
    std::string path;
    std::string message;
};

struct ParseResult {
    std::optional<ScenarioConfig> config;
    std::vector<ConfigIssue> errors;
    /// Unknown keys outside strict mode.
    std::vector<ConfigIssue> warnings;

    bool ok() const { return config.has_value(); }
};

/// Parses and validates. Collects every problem rather than stopping at the
/// first. In strict mode unknown keys are errors, otherwise warnings.
ParseResult parse_config(const std::string& text, bool strict = true);

/// Resolved configuration with every default filled in, as canonical JSON.
std::string to_json(const ScenarioConfig& config);

}  // namespace kvn
