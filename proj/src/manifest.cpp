#include "rankalign/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "rankalign/error.hpp"
#include "rankalign/io.hpp"

namespace rankalign {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw IoError("read failed for " + path.string());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [role, p] : m.inputs) inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file(p)}});
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : m.outputs) outputs.push_back(p.string());

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");

  nlohmann::json doc = {
      {"command", m.command},
      {"tool_version", kToolVersion},
      {"config", nlohmann::json::parse(m.config_json.empty() ? "{}" : m.config_json)},
      {"inputs", std::move(inputs)},
      {"outputs", std::move(outputs)},
      {"wall_seconds", m.wall_seconds},
      {"finished_at", stamp.str()},
  };
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace rankalign
