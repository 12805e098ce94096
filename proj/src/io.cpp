#include "sas/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "json.hpp"

namespace sas {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) raise(ErrorCode::ParseError, "cannot open '" + path + "' for writing");
  for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    raise(ErrorCode::InvalidParams, "csv row arity does not match the header");
  for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string checksum_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

uint64_t plan_checksum(const std::vector<StepPlan>& plan) {
  uint64_t h = 1469598103934665603ull;
  auto add = [&](double v) { h = fnv1a64(&v, sizeof v, h); };
  for (const auto& sp : plan) {
    add(sp.pred.state_decay);
    add(sp.pred.noise_std);
    for (double w : sp.pred.model_weights) add(w);
    if (sp.has_corrector) {
      add(sp.corr.state_decay);
      add(sp.corr.noise_std);
      for (double w : sp.corr.model_weights) add(w);
    }
  }
  return h;
}

std::string make_output_dir(const std::string& outdir, const std::string& command) {
  std::string base = outdir;
  if (base.empty()) {
    const char* env = std::getenv("SAS_OUTDIR");
    base = env ? env : "runs";
  }
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  std::string dir = base + "/" + command + "-" + stamp;
  std::string candidate = dir;
  for (int n = 1; std::filesystem::exists(candidate); ++n)
    candidate = dir + "-" + std::to_string(n);
  std::filesystem::create_directories(candidate);
  return candidate;
}

void write_manifest(const std::string& dir, const std::string& command, const ConfigMap& config,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::json j;
  j["command"] = command;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config.items()) cfg[k] = v;
  j["config"] = cfg;
  j["outputs"] = outputs;
  for (const auto& [k, v] : extra) j[k] = v;
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) raise(ErrorCode::ParseError, "cannot write manifest in '" + dir + "'");
  out << j.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ParseError, "cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(ErrorCode::ParseError, std::string("bad manifest json: ") + e.what());
  }
  Manifest m;
  m.command = j.value("command", "");
  if (j.contains("config"))
    for (const auto& [k, v] : j["config"].items()) m.config.set(k, v.get<std::string>());
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sas
