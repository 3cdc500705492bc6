#include "curio/logprob_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "curio/errors.hpp"

namespace curio {
namespace {

using Json = nlohmann::ordered_json;

StepRecord record_from_json(const Json& doc, const std::string& where, bool base10) {
  if (!doc.is_object()) raise(Errc::malformed_dump, where + ": step record must be an object");
  if (!doc.contains("step") || !doc.at("step").is_number_integer()) {
    raise(Errc::malformed_dump, where + ": missing integer 'step'");
  }
  if (!doc.contains("entries") || !doc.at("entries").is_array()) {
    raise(Errc::malformed_dump, where + ": missing 'entries' array");
  }
  StepRecord record;
  record.step = doc.at("step").get<int>();
  for (const auto& item : doc.at("entries")) {
    if (!item.is_object() || !item.contains("token") || !item.at("token").is_string() ||
        !item.contains("logprob") || !item.at("logprob").is_number()) {
      raise(Errc::malformed_dump, where + ": entry needs string 'token' and numeric 'logprob'");
    }
    TokenEntry entry;
    entry.token = item.at("token").get<std::string>();
    entry.logprob = item.at("logprob").get<double>();
    if (base10) entry.logprob *= std::log(10.0);
    record.entries.push_back(std::move(entry));
  }
  return record;
}

std::vector<StepRecord> records_from_array(const Json& list, const std::string& where,
                                           bool base10) {
  if (!list.is_array()) raise(Errc::malformed_dump, where + ": expected an array of step records");
  std::vector<StepRecord> records;
  records.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    records.push_back(
        record_from_json(list[i], where + "[" + std::to_string(i) + "]", base10));
  }
  return records;
}

}  // namespace

std::vector<StepRecord> load_logprob_jsonl(const std::filesystem::path& path, bool base10) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open logprob dump: " + path.string());
  std::vector<StepRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line) {
      if (c != ' ' && c != '\t' && c != '\r') {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const Json doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded()) raise(Errc::malformed_dump, where + ": invalid JSON");
    records.push_back(record_from_json(doc, where, base10));
  }
  if (records.empty()) raise(Errc::malformed_dump, path.string() + ": dump holds no step records");
  return records;
}

DumpPair load_logprob_pair(const std::filesystem::path& path, bool base10) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open logprob dump: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const Json doc = Json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_dump, path.string() + ": expected a JSON object");
  }
  if (!doc.contains("prior") || !doc.contains("posterior")) {
    raise(Errc::malformed_dump, path.string() + ": needs 'prior' and 'posterior' arrays");
  }
  DumpPair pair;
  pair.prior = records_from_array(doc.at("prior"), path.string() + ": prior", base10);
  pair.posterior = records_from_array(doc.at("posterior"), path.string() + ": posterior", base10);
  return pair;
}

std::vector<StepDistribution> build_steps(const std::vector<StepRecord>& records, int k) {
  std::vector<StepDistribution> steps;
  steps.reserve(records.size());
  for (const auto& record : records) {
    steps.push_back(step_from_logprobs(record.entries, k, record.step));
  }
  return steps;
}

}  // namespace curio
