#ifndef COVPANEL_MANIFEST_HPP
#define COVPANEL_MANIFEST_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace covpanel {

inline constexpr const char* kToolVersion = "1.0.0";

/// FNV-1a 64-bit content hash, hex-encoded (manifest field `fnv1a64`).
std::string hash_file(const std::string& path);

/// Atomically writes `content` (write temp, then rename).
void write_file_atomic(const std::string& path, const std::string& content);

/// Reproducibility record for one CLI run: command, parameters, input
/// hashes, seed, and outputs. Deliberately no timestamps, so identical
/// inputs give byte-identical artifacts.
class RunManifest {
public:
    explicit RunManifest(std::string command);

    void add_input(const std::string& label, const std::string& path);
    void add_output(const std::string& path);
    void set_seed(std::uint64_t seed);
    void set_parameter(const std::string& key, const nlohmann::json& value);

    /// Writes manifest.json into `dir` and records it as an output.
    void write(const std::string& dir);

private:
    nlohmann::json doc_;
};

} // namespace covpanel

#endif
