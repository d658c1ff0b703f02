#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "emz/gle.hpp"
#include "emz/kernel_model.hpp"
#include "emz/sim.hpp"

namespace emz {

inline constexpr const char* kVersion = "0.3.0";

// FNV-1a 64-bit digest as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// CSV with a "# manifest <hash>" first line, a header row, then rows.
void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::string manifest_hash;  // empty when the file has no manifest line

  const std::vector<double>& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// "t,value[,std_error]" files.
void write_sampled(const std::string& path, const std::string& manifest_hash,
                   const SampledFunction& f, const std::vector<double>& std_error = {});
SampledFunction read_sampled(const std::string& path, std::vector<double>* std_error = nullptr);

nlohmann::json to_json(const KernelModel& k);
KernelModel kernel_model_from_json(const nlohmann::json& j);
void save_kernel_model(const std::string& path, const KernelModel& k);
KernelModel load_kernel_model(const std::string& path);

nlohmann::json to_json(const KLModel& kl);
KLModel kl_model_from_json(const nlohmann::json& j);
void save_kl_model(const std::string& path, const KLModel& kl);
KLModel load_kl_model(const std::string& path);

// Binary: "EMZSTORE1\n", one JSON header line, then little-endian doubles in
// [path][observable][time] order. CSV: path,t,<observables...> rows.
void save_store(const std::string& path, const TrajectoryStore& store,
                const nlohmann::json& manifest);
TrajectoryStore load_store(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace emz
