#include "curio/config.hpp"

#include <fstream>

#include "json.hpp"

#include "curio/errors.hpp"
#include "text_util.hpp"

namespace curio {
namespace {

[[noreturn]] void config_error(const std::filesystem::path& path, int line_no,
                               const std::string& message) {
  raise(Errc::invalid_config, path.string() + ":" + std::to_string(line_no) + ": " + message);
}

double parse_double(const std::filesystem::path& path, int line_no, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    config_error(path, line_no, "value for '" + key + "' is not a number: '" + value + "'");
  }
}

int parse_int(const std::filesystem::path& path, int line_no, const std::string& key,
              const std::string& value) {
  try {
    std::size_t used = 0;
    const int parsed = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    config_error(path, line_no, "value for '" + key + "' is not an integer: '" + value + "'");
  }
}

bool parse_bool(const std::filesystem::path& path, int line_no, const std::string& key,
                const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  config_error(path, line_no, "value for '" + key + "' must be true or false, got '" + value + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (k < 1) raise(Errc::invalid_config, "k must be >= 1");
  if (!(lambda > 0.0)) raise(Errc::invalid_config, "lambda must be > 0");
  if (max_units < 1) raise(Errc::invalid_config, "max_units must be >= 1");
  gate.validate();
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open config file: " + path.string());

  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']' || trimmed.size() < 3) {
        config_error(path, line_no, "malformed section header '" + trimmed + "'");
      }
      section = trimmed.substr(1, trimmed.size() - 2);
      if (section != "scoring" && section != "gate" && section != "retrieval" &&
          section != "paths") {
        config_error(path, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      config_error(path, line_no, "expected key = value, got '" + trimmed + "'");
    }
    const std::string key = detail::trim(trimmed.substr(0, eq));
    const std::string value = detail::trim(trimmed.substr(eq + 1));
    if (section.empty()) {
      config_error(path, line_no, "key '" + key + "' appears before any [section]");
    }

    if (section == "scoring") {
      if (key == "k") {
        k = parse_int(path, line_no, key, value);
      } else if (key == "lambda") {
        lambda = parse_double(path, line_no, key, value);
      } else if (key == "logprob_base10") {
        logprob_base10 = parse_bool(path, line_no, key, value);
      } else {
        config_error(path, line_no, "unknown key '" + key + "' in [scoring]");
      }
    } else if (section == "gate") {
      if (key == "tau") {
        gate.tau = parse_double(path, line_no, key, value);
      } else if (key == "decay_base") {
        gate.decay_base = parse_double(path, line_no, key, value);
      } else if (key == "difficulty_weight") {
        gate.difficulty_weight = parse_double(path, line_no, key, value);
      } else if (key == "reset_on_trigger") {
        gate.reset_on_trigger = parse_bool(path, line_no, key, value);
      } else {
        config_error(path, line_no, "unknown key '" + key + "' in [gate]");
      }
    } else if (section == "retrieval") {
      if (key == "max_units") {
        max_units = parse_int(path, line_no, key, value);
      } else {
        config_error(path, line_no, "unknown key '" + key + "' in [retrieval]");
      }
    } else {  // paths
      if (key == "store_root") {
        store_root = value;
      } else if (key == "corpus_docs") {
        corpus_docs = value;
      } else if (key == "corpus_git") {
        corpus_git = value;
      } else if (key == "corpus_traj") {
        corpus_traj = value;
      } else {
        config_error(path, line_no, "unknown key '" + key + "' in [paths]");
      }
    }
  }
  validate();
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig config;
  config.apply_file(path);
  return config;
}

std::string run_config_to_json(const RunConfig& config, int indent) {
  nlohmann::ordered_json doc;
  doc["k"] = config.k;
  doc["lambda"] = config.lambda;
  doc["logprob_base10"] = config.logprob_base10;
  nlohmann::ordered_json gate;
  gate["tau"] = config.gate.tau;
  gate["decay_base"] = config.gate.decay_base;
  gate["difficulty_weight"] = config.gate.difficulty_weight;
  gate["reset_on_trigger"] = config.gate.reset_on_trigger;
  doc["gate"] = std::move(gate);
  doc["max_units"] = config.max_units;
  nlohmann::ordered_json paths;
  paths["store_root"] = config.store_root.string();
  paths["corpus_docs"] = config.corpus_docs.string();
  paths["corpus_git"] = config.corpus_git.string();
  paths["corpus_traj"] = config.corpus_traj.string();
  doc["paths"] = std::move(paths);
  return doc.dump(indent);
}

}  // namespace curio
