#include "hydrosense/manifest.hpp"

#include "hydrosense/textio.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <memory>
#include <stdexcept>

namespace hydrosense {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 0xF];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["config"] = config_path;
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["output_dir"] = output_dir;
    j["artifacts"] = json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}});
    j["wall_seconds"] = wall_seconds;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
    const json j = json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_path = j.at("config").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.output_dir = j.at("output_dir").get<std::string>();
    for (const auto& a : j.at("artifacts"))
        m.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>()});
    m.wall_seconds = j.at("wall_seconds").get<double>();
    return m;
}

RunManifest write_manifest(RunManifest m, const fs::path& out_dir, const std::vector<fs::path>& outputs) {
    m.output_dir = out_dir.string();
    m.artifacts.clear();
    for (const auto& p : outputs)
        m.artifacts.push_back({fs::relative(p, out_dir).generic_string(), sha256_file(p)});
    write_file_atomic(out_dir / kManifestName, m.to_json());
    if (!verify_manifest(out_dir))
        throw std::runtime_error(out_dir.string() + ": manifest hash verification failed");
    return m;
}

bool verify_manifest(const fs::path& dir) {
    try {
        const auto m = RunManifest::from_json(read_file(dir / kManifestName));
        for (const auto& a : m.artifacts)
            if (sha256_file(dir / a.path) != a.sha256) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace hydrosense
