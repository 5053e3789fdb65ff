#include "support.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eigenprep::cli {

std::string format_sig(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// ---------------------------------------------------------------------------
// Config access.

json load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  try {
    json parsed = json::parse(in);
    if (!parsed.is_object()) throw ConfigError("config root must be an object");
    return parsed;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + file.string() + ": " + e.what());
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("missing required field " + path + "/" + key);
  return obj.at(key);
}

double require_number(const json& obj, const std::string& key,
                      const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) throw ConfigError(path + "/" + key + " must be a number");
  return v.get<double>();
}

double require_positive(const json& obj, const std::string& key,
                        const std::string& path) {
  const double v = require_number(obj, key, path);
  if (!(v > 0.0)) throw ConfigError(path + "/" + key + " must be positive");
  return v;
}

int require_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw ConfigError(path + "/" + key + " must be an integer");
  return v.get<int>();
}

std::string require_string(const json& obj, const std::string& key,
                           const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw ConfigError(path + "/" + key + " must be a string");
  return v.get<std::string>();
}

double optional_number(const json& obj, const std::string& key,
                       const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  return require_number(obj, key, path);
}

int optional_int(const json& obj, const std::string& key, const std::string& path,
                 int fallback) {
  if (!obj.contains(key)) return fallback;
  return require_int(obj, key, path);
}

bool optional_bool(const json& obj, const std::string& key, const std::string& path,
                   bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "/" + key + " must be a boolean");
  return v.get<bool>();
}

std::string optional_string(const json& obj, const std::string& key,
                            const std::string& path, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  return require_string(obj, key, path);
}

std::vector<double> number_list(const json& value, const std::string& path) {
  if (!value.is_array()) throw ConfigError(path + " must be an array of numbers");
  std::vector<double> out;
  for (const json& v : value) {
    if (!v.is_number()) throw ConfigError(path + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> int_list(const json& value, const std::string& path) {
  if (!value.is_array()) throw ConfigError(path + " must be an array of integers");
  std::vector<int> out;
  for (const json& v : value) {
    if (!v.is_number_integer()) throw ConfigError(path + " must contain only integers");
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<double> parse_grid(const json& value, const std::string& path) {
  std::vector<double> grid;
  if (value.is_array()) {
    grid = number_list(value, path);
  } else if (value.is_object()) {
    const double lo = require_number(value, "min", path);
    const double hi = require_number(value, "max", path);
    const int points = require_int(value, "points", path);
    if (points < 1) throw ConfigError(path + "/points must be >= 1");
    if (points == 1) {
      grid.push_back(lo);
    } else {
      if (!(hi > lo)) throw ConfigError(path + "/max must exceed min");
      for (int i = 0; i < points; ++i)
        grid.push_back(lo + (hi - lo) * i / (points - 1));
    }
  } else {
    throw ConfigError(path + " must be an array or a {min, max, points} object");
  }
  if (grid.empty()) throw ConfigError(path + " is an empty grid");
  return grid;
}

Matrix parse_hamiltonian(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path + " must be an object");
  const std::string type = require_string(spec, "type", path);
  if (type == "heisenberg") {
    const int sites = require_int(spec, "sites", path);
    const double coupling = require_number(spec, "coupling", path);
    const double field = require_number(spec, "field", path);
    const bool periodic = optional_bool(spec, "periodic", path, true);
    return heisenberg_chain(sites, coupling, field, periodic);
  }
  if (type == "single_qubit") {
    return single_qubit(optional_number(spec, "ci", path, 0.0),
                        optional_number(spec, "cx", path, 0.0),
                        optional_number(spec, "cy", path, 0.0),
                        optional_number(spec, "cz", path, 0.0));
  }
  if (type == "pauli") {
    const int n = require_int(spec, "qubits", path);
    if (n < 1) throw ConfigError(path + "/qubits must be >= 1");
    const json& terms = require(spec, "terms", path);
    if (!terms.is_array()) throw ConfigError(path + "/terms must be an array");
    std::vector<PauliTerm> parsed;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tpath = path + "/terms[" + std::to_string(i) + "]";
      parsed.push_back({require_string(terms[i], "ops", tpath),
                        require_number(terms[i], "coeff", tpath)});
    }
    return from_pauli_terms(n, parsed);
  }
  if (type == "random") {
    const int n = require_int(spec, "qubits", path);
    if (n < 1) throw ConfigError(path + "/qubits must be >= 1");
    RngStream rng(static_cast<std::uint64_t>(require_int(spec, "seed", path)));
    return random_hermitian(n, rng);
  }
  if (type == "two_spin_start") return two_spin_pair().h0;
  if (type == "two_spin_target") return two_spin_pair().hT;
  throw ConfigError(path + "/type unknown: " + type);
}

PairSpec parse_pair(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path + " must be an object");
  if (spec.contains("type")) {
    const std::string type = require_string(spec, "type", path);
    if (type == "two_spin") {
      const TwoSpinPair pair = two_spin_pair();
      return {pair.h0, pair.hT};
    }
    throw ConfigError(path + "/type unknown: " + type);
  }
  PairSpec out;
  out.h0 = parse_hamiltonian(require(spec, "h0", path), path + "/h0");
  out.hT = parse_hamiltonian(require(spec, "target", path), path + "/target");
  if (out.h0.rows() != out.hT.rows())
    throw ConfigError(path + ": h0 and target dimensions differ");
  return out;
}

StateVector parse_initial(const json& obj, const std::string& path, int n_qubits,
                          const Matrix* fallback_h) {
  if (obj.contains("initial_bits")) {
    const std::string bits = require_string(obj, "initial_bits", path);
    if (static_cast<int>(bits.size()) != n_qubits)
      throw ConfigError(path + "/initial_bits must have length " +
                        std::to_string(n_qubits));
    return init_basis(n_qubits, bits);
  }
  if (fallback_h == nullptr)
    throw ConfigError(path + "/initial_bits is required");
  const EigenDecomposition ed = eig_hermitian(*fallback_h);
  StateVector ground;
  ground.n_qubits = n_qubits;
  ground.amps = ed.vectors.col(0);
  return ground;
}

// ---------------------------------------------------------------------------
// Outputs.

OutputWriter::OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void OutputWriter::write_text(const std::string& name, const std::string& content) {
  const std::filesystem::path file = dir_ / name;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + file.string());
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + file.string());
  records_.push_back({name, content.size(), checksum_hex(content)});
}

void OutputWriter::write_table(const std::string& name,
                               const std::vector<std::string>& columns,
                               const std::vector<std::vector<double>>& rows) {
  std::ostringstream body;
  for (std::size_t c = 0; c < columns.size(); ++c)
    body << (c ? "\t" : "") << columns[c];
  body << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      body << (c ? "\t" : "") << format_sig(row[c]);
    body << "\n";
  }
  write_text(name, body.str());
}

void MetricSet::set(const std::string& name, double value) {
  for (auto& kv : values_) {
    if (kv.first == name) {
      kv.second = value;
      return;
    }
  }
  values_.emplace_back(name, value);
}

bool MetricSet::has(const std::string& name) const {
  for (const auto& kv : values_)
    if (kv.first == name) return true;
  return false;
}

double MetricSet::get(const std::string& name) const {
  for (const auto& kv : values_)
    if (kv.first == name) return kv.second;
  throw std::runtime_error("unknown metric: " + name);
}

void write_summary(OutputWriter& out, const MetricSet& metrics) {
  std::ostringstream body;
  body << "metric\tvalue\n";
  for (const auto& [name, value] : metrics.values())
    body << name << "\t" << format_sig(value) << "\n";
  out.write_text("summary.tsv", body.str());
}

void run_checks(const json& config, const MetricSet& metrics) {
  if (!config.contains("check"))
    throw ConfigError("--check requested but the config has no /check block");
  const json& block = config.at("check");
  if (!block.is_object()) throw ConfigError("/check must be an object");
  std::vector<std::string> misses;
  for (const auto& [name, bounds] : block.items()) {
    if (!metrics.has(name))
      throw ConfigError("/check/" + name + " names no metric of this command");
    if (!bounds.is_object()) throw ConfigError("/check/" + name + " must be an object");
    const double value = metrics.get(name);
    if (bounds.contains("min")) {
      const double lo = require_number(bounds, "min", "/check/" + name);
      if (!(value >= lo))
        misses.push_back(name + " = " + format_sig(value) + " < min " + format_sig(lo));
    }
    if (bounds.contains("max")) {
      const double hi = require_number(bounds, "max", "/check/" + name);
      if (!(value <= hi))
        misses.push_back(name + " = " + format_sig(value) + " > max " + format_sig(hi));
    }
  }
  if (!misses.empty()) {
    std::string msg = "check failed:";
    for (const std::string& m : misses) msg += "\n  " + m;
    throw CheckError(msg);
  }
}

void write_manifest(OutputWriter& out, const json& config, const std::string& command,
                    std::uint64_t seed, double wall_seconds, bool complete) {
  json manifest;
  manifest["command"] = command;
  manifest["tool_version"] = kToolVersion;
  manifest["config_checksum"] = checksum_hex(config.dump());
  manifest["seed"] = seed;
  manifest["rng"] = RngStream::algorithm_id();
  manifest["wall_seconds"] = wall_seconds;
  manifest["complete"] = complete;
  json outputs = json::array();
  for (const FileRecord& r : out.records()) {
    json entry;
    entry["file"] = r.name;
    entry["bytes"] = r.bytes;
    entry["checksum"] = r.checksum;
    outputs.push_back(entry);
  }
  manifest["outputs"] = outputs;
  const std::filesystem::path file = out.dir() / "manifest.json";
  std::ofstream stream(file, std::ios::binary);
  if (!stream) throw std::runtime_error("cannot write manifest: " + file.string());
  stream << manifest.dump(2) << "\n";
}

}  // namespace eigenprep::cli
