#pragma once

// Shared command-line plumbing: config loading with path-aware schema errors,
// Hamiltonian / state parsing, deterministic 12-significant-digit table
// output, FNV-1a checksums, and the per-run manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "eigenprep/hamiltonian.hpp"
#include "eigenprep/register.hpp"

namespace eigenprep::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Malformed configuration; the message names the offending JSON path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A --check assertion missed; maps to exit code 4.
struct CheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic serialization.

// Shortest decimal form at 12 significant digits ("%.12g").
std::string format_sig(double value);

std::uint64_t fnv1a64(const std::string& bytes);
std::string checksum_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// Config access. `path` is the JSON-pointer-style location used in errors.

json load_config(const std::filesystem::path& file);

const json& require(const json& obj, const std::string& key, const std::string& path);
double require_number(const json& obj, const std::string& key, const std::string& path);
double require_positive(const json& obj, const std::string& key, const std::string& path);
int require_int(const json& obj, const std::string& key, const std::string& path);
std::string require_string(const json& obj, const std::string& key,
                           const std::string& path);
double optional_number(const json& obj, const std::string& key,
                       const std::string& path, double fallback);
int optional_int(const json& obj, const std::string& key, const std::string& path,
                 int fallback);
bool optional_bool(const json& obj, const std::string& key, const std::string& path,
                   bool fallback);
std::string optional_string(const json& obj, const std::string& key,
                            const std::string& path, const std::string& fallback);
std::vector<double> number_list(const json& value, const std::string& path);
std::vector<int> int_list(const json& value, const std::string& path);

// Energy / parameter grids: either an explicit array or {min, max, points}.
std::vector<double> parse_grid(const json& value, const std::string& path);

// Hamiltonian block: {"type": "heisenberg" | "single_qubit" | "pauli" |
// "random" | "two_spin_start" | "two_spin_target", ...}.
Matrix parse_hamiltonian(const json& spec, const std::string& path);

// Interpolation pair: {"type": "two_spin"} or {"h0": ..., "target": ...}.
struct PairSpec {
  Matrix h0;
  Matrix hT;
};
PairSpec parse_pair(const json& spec, const std::string& path);

// "initial_bits" in `obj` if present, else the ground state of `fallback_h`.
StateVector parse_initial(const json& obj, const std::string& path, int n_qubits,
                          const Matrix* fallback_h);

// ---------------------------------------------------------------------------
// Outputs.

struct FileRecord {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string checksum;
};

// Writes data files under one directory and records size + checksum of each.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  void write_text(const std::string& name, const std::string& content);
  void write_table(const std::string& name, const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows);
  const std::vector<FileRecord>& records() const { return records_; }

 private:
  std::filesystem::path dir_;
  std::vector<FileRecord> records_;
};

// Ordered name -> value map feeding summary.tsv and the --check assertions.
class MetricSet {
 public:
  void set(const std::string& name, double value);
  bool has(const std::string& name) const;
  double get(const std::string& name) const;
  const std::vector<std::pair<std::string, double>>& values() const { return values_; }

 private:
  std::vector<std::pair<std::string, double>> values_;
};

void write_summary(OutputWriter& out, const MetricSet& metrics);

// Evaluates the config's "check" block ({metric: {"min": x, "max": y}})
// against the recorded metrics; throws CheckError listing every miss.
void run_checks(const json& config, const MetricSet& metrics);

void write_manifest(OutputWriter& out, const json& config, const std::string& command,
                    std::uint64_t seed, double wall_seconds, bool complete);

}  // namespace eigenprep::cli
