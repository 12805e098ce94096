#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sas/config.hpp"
#include "sas/solver.hpp"

namespace sas {

// floats are printed with 17 significant digits so a replay is byte-faithful
std::string format_double(double v);

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }

private:
  std::ofstream out_;
  size_t columns_;
};

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t h = 1469598103934665603ull);
std::string checksum_hex(uint64_t h);
uint64_t plan_checksum(const std::vector<StepPlan>& plan);

// <outdir>/<command>-<timestamp>[-<n>]/ ; outdir falls back to $SAS_OUTDIR
// then "./runs"
std::string make_output_dir(const std::string& outdir, const std::string& command);

void write_manifest(const std::string& dir, const std::string& command, const ConfigMap& config,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::pair<std::string, std::string>>& extra = {});

struct Manifest {
  std::string command;
  ConfigMap config;
};
Manifest read_manifest(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace sas
