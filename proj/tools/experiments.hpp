#pragma once

#include "config.hpp"

#include <string>
#include <utility>
#include <vector>

namespace phaselattice::cli {

struct Outcome {
    /// experiment, version, seed, config, results, assertions, pass.
    json summary;
    /// (suffix, contents) pairs written next to the summary, e.g. (".csv", table).
    std::vector<std::pair<std::string, std::string>> files;
    bool pass = true;
};

/// Runs one experiment. Invalid experiment sections throw ConfigError; library domain errors propagate.
Outcome run_experiment(const ExperimentConfig& config);

}  // namespace phaselattice::cli
