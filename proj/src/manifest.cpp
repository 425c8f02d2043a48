#include "covpanel/manifest.hpp"

#include "covpanel/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace covpanel {

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail("WriteFailed", "cannot write " + tmp);
        out << content;
        if (!out) fail("WriteFailed", "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail("WriteFailed", "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

RunManifest::RunManifest(std::string command) {
    doc_["tool"] = "covpanel";
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    doc_["hash_algorithm"] = "fnv1a64";
    doc_["inputs"] = nlohmann::json::object();
    doc_["outputs"] = nlohmann::json::array();
    doc_["parameters"] = nlohmann::json::object();
}

void RunManifest::add_input(const std::string& label, const std::string& path) {
    doc_["inputs"][label] = {{"path", path}, {"hash", hash_file(path)}};
}

void RunManifest::add_output(const std::string& path) {
    doc_["outputs"].push_back(std::filesystem::path(path).filename().string());
}

void RunManifest::set_seed(std::uint64_t seed) { doc_["seed"] = seed; }

void RunManifest::set_parameter(const std::string& key, const nlohmann::json& value) {
    doc_["parameters"][key] = value;
}

void RunManifest::write(const std::string& dir) {
    add_output("manifest.json");
    write_file_atomic((std::filesystem::path(dir) / "manifest.json").string(), doc_.dump(2) + "\n");
}

} // namespace covpanel
