#ifndef STAPCAL_CONFIG_IO_HPP
#define STAPCAL_CONFIG_IO_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "stapcal/harness.hpp"

namespace stapcal {

nlohmann::json radar_to_json(const RadarConfig& cfg);
RadarConfig radar_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

ExperimentSpec load_spec(const std::string& path);
void save_spec(const ExperimentSpec& spec, const std::string& path);

// Dotted-path override into a spec JSON document, e.g. "solver.beta=0.25".
// The path must already exist in the document; unknown paths are errors.
void apply_override(nlohmann::json& doc, const std::string& dotted_path,
                    const std::string& value);

// FNV-1a hash of the canonical (sorted-key) JSON dump; identifies a spec in
// run manifests.
std::string spec_hash(const ExperimentSpec& spec);

}  // namespace stapcal

#endif
