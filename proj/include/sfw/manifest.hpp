#ifndef SFW_MANIFEST_HPP
#define SFW_MANIFEST_HPP

// Run manifest: one JSON document per run echoing the configuration, stage timings, results and
// the SHA-256 of every output file. Needs OpenSSL's libcrypto.

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <openssl/evp.h>

#include "sfw/io.hpp"

namespace sfw {

inline constexpr const char* version_string = "1.0.0";

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for hashing");
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int                                len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string           out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Collects a run's record. Outputs are referenced by file name relative to the output directory.
class RunManifest {
public:
    RunManifest(std::string command, json config) {
        doc_["command"]       = std::move(command);
        doc_["config_echo"]   = std::move(config);
        doc_["stage_timings"] = json::object();
        doc_["outputs"]       = json::array();
        doc_["versions"]      = {{"sfw", version_string}, {"json", "nlohmann " + std::to_string(NLOHMANN_JSON_VERSION_MAJOR) +
                                                                       "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR)}};
    }

    json&       operator[](const std::string& key) { return doc_[key]; }
    const json& doc() const { return doc_; }

    /// Runs fn and records its wall time in seconds under `stage`.
    template<typename Fn>
    auto timed(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        struct Record {
            json&                                 timings;
            std::string                           name;
            std::chrono::steady_clock::time_point t0;
            ~Record() {
                timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        } rec{doc_["stage_timings"], stage, start};
        return fn();
    }

    void add_output(const std::filesystem::path& file) {
        doc_["outputs"].push_back({{"file", file.filename().string()}, {"sha256", sha256_file(file)}});
    }

    void write(const std::filesystem::path& path) const { detail::write_json(path, doc_); }

private:
    json doc_ = json::object();
};

} // namespace sfw

#endif // SFW_MANIFEST_HPP
