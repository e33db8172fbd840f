#include <smjls/report.hpp>

#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace smjls {

std::string sha256_hex(const std::string& content) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int k = 0; k < len; ++k) os << std::setw(2) << static_cast<int>(digest[k]);
    return os.str();
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["inputs"] = nlohmann::json::object();
    for (const auto& [path, digest] : input_digests) j["inputs"][path] = {{"sha256", digest}};
    j["outcome"] = outcome;
    j["exit_code"] = exit_code;
    j["backend"] = backend;
    j["tolerances"] = tolerances;
    j["details"] = details;
    if (timings_ms) j["timings_ms"] = *timings_ms;
    return j;
}

}  // namespace smjls
