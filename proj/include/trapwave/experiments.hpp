#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "trapwave/config.hpp"

namespace trapwave {

inline constexpr const char* kVersion = "0.1.0";

//! Names accepted by the `experiment` key.
const std::vector<std::string>& experiment_names();

struct RunSummary {
    std::string experiment;
    //! Artifact file names written into the output directory (manifest last).
    std::vector<std::string> files;
    //! All acceptance checks recorded by the experiment passed.
    bool pass = true;
};

/*!
 * Run the experiment named by `config` and write its artifacts plus
 * manifest.json into out_dir (created when missing).
 *
 * Every key is resolved before any work starts, so an unknown key or a bad
 * value raises ConfigError without side effects. Domain errors propagate
 * with the experiment name prepended.
 */
RunSummary run_experiment(const Config& config, const std::string& out_dir);

/*!
 * Print the key scalars of an artifact directory and the pass/fail status
 * of its recorded checks. Throws MissingManifest when the directory has no
 * manifest. Returns true when every check passed.
 */
bool report(const std::string& dir, std::ostream& os);

}  // namespace trapwave
