#pragma once

#include <string>

#include <json.hpp>

#include "gwm/energy.hpp"

namespace gwm::cli {

/// Every command is a pure function of its materialized config (defaults +
/// config file + flag overrides, unknown keys rejected) and the input files;
/// re-running reproduces outputs byte-for-byte. Each returns the manifest /
/// report document it wrote (or would write).
nlohmann::json cmd_gen(const nlohmann::json& config);
nlohmann::json cmd_segment(const nlohmann::json& config);
nlohmann::json cmd_merge(const nlohmann::json& config);
nlohmann::json cmd_eval(const nlohmann::json& config);
nlohmann::json cmd_viz(const nlohmann::json& config);

/// Materializes a command's config: starts from defaults, overlays the
/// optional config file document, then the flag overrides. Throws ConfigError
/// on unknown keys or bad values.
nlohmann::json materialize_config(const std::string& command, const nlohmann::json& file_config,
                                  const nlohmann::json& overrides);

/// Full CLI entry point; returns the process exit code (0 ok, 2 config
/// error, 3 I/O error, 4 numeric divergence).
int run(int argc, const char* const* argv);

/// Minimal JSON-Schema subset validator (type, properties, required,
/// additionalProperties, items, enum, minimum). Throws ConfigError with the
/// offending path on violation.
void validate_against_schema(const nlohmann::json& doc, const nlohmann::json& schema);

/// Soft-mask dump: "SMK1", int32 LE k, width, height, then float64 LE
/// probabilities, pixel-major with the K values of a pixel contiguous.
void write_soft_masks(const SoftMasks& masks, const std::string& path);
SoftMasks read_soft_masks(const std::string& path);

}  // namespace gwm::cli
