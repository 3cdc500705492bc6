#include "curio/gate.hpp"

#include <mutex>
#include <cmath>
#include <utility>

#include "json.hpp"

#include "curio/errors.hpp"

namespace curio {
namespace {

using Json = nlohmann::ordered_json;

Json history_entry_to_json(const HistoryEntry& entry) {
  Json doc;
  doc["kind"] = entry.kind == HistoryEntry::Kind::record ? "record" : "trigger";
  doc["step"] = entry.step_ordinal;
  doc["js_star"] = entry.js_star_bits;
  doc["weight"] = entry.weight;
  doc["u_after"] = entry.u_after;
  return doc;
}

HistoryEntry history_entry_from_json(const Json& doc) {
  HistoryEntry entry;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "record") {
    entry.kind = HistoryEntry::Kind::record;
  } else if (kind == "trigger") {
    entry.kind = HistoryEntry::Kind::trigger;
  } else {
    raise(Errc::invalid_argument, "unknown history entry kind '" + kind + "'");
  }
  entry.step_ordinal = doc.at("step").get<int>();
  entry.js_star_bits = doc.at("js_star").get<double>();
  entry.weight = doc.at("weight").get<double>();
  entry.u_after = doc.at("u_after").get<double>();
  return entry;
}

Json accumulator_to_json_doc(const AppAccumulator& acc) {
  Json doc;
  doc["app_id"] = acc.app_id;
  doc["u"] = acc.u_value;
  doc["steps"] = acc.steps_recorded;
  doc["triggers"] = acc.trigger_count;
  doc["decay_factor"] = acc.decay_factor;
  auto history = Json::array();
  for (const auto& entry : acc.history) history.push_back(history_entry_to_json(entry));
  doc["history"] = std::move(history);
  return doc;
}

AppAccumulator accumulator_from_json_doc(const Json& doc) {
  AppAccumulator acc;
  acc.app_id = doc.at("app_id").get<std::string>();
  acc.u_value = doc.at("u").get<double>();
  acc.steps_recorded = doc.at("steps").get<int>();
  acc.trigger_count = doc.at("triggers").get<int>();
  acc.decay_factor = doc.value("decay_factor", 1.0);
  if (doc.contains("history")) {
    for (const auto& item : doc.at("history")) {
      acc.history.push_back(history_entry_from_json(item));
    }
  }
  return acc;
}

Json parse_json(const std::string& text, const char* what) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    raise(Errc::invalid_argument, std::string("invalid JSON in ") + what);
  }
  return doc;
}

}  // namespace

void GateConfig::validate() const {
  if (!(tau > 0.0)) raise(Errc::invalid_config, "tau must be > 0");
  if (!(decay_base > 0.0 && decay_base <= 1.0)) {
    raise(Errc::invalid_config, "decay_base must be in (0, 1]");
  }
  if (!(difficulty_weight > 0.0)) raise(Errc::invalid_config, "difficulty_weight must be > 0");
}

AppAccumulator make_accumulator(std::string app_id) {
  AppAccumulator acc;
  acc.app_id = std::move(app_id);
  return acc;
}

AppAccumulator record(AppAccumulator acc, double js_star_bits, const GateConfig& config) {
  config.validate();
  if (!(js_star_bits >= 0.0)) {  // also rejects NaN
    raise(Errc::negative_gain, "js_star must be >= 0 for app '" + acc.app_id + "'");
  }
  const double weight = config.difficulty_weight * acc.decay_factor;
  acc.u_value += weight * js_star_bits;
  acc.decay_factor *= config.decay_base;
  acc.steps_recorded += 1;
  HistoryEntry entry;
  entry.kind = HistoryEntry::Kind::record;
  entry.step_ordinal = acc.steps_recorded;
  entry.js_star_bits = js_star_bits;
  entry.weight = weight;
  entry.u_after = acc.u_value;
  acc.history.push_back(entry);
  return acc;
}

bool should_trigger(const AppAccumulator& acc, const GateConfig& config) {
  config.validate();
  return acc.u_value > config.tau;
}

AppAccumulator mark_triggered(AppAccumulator acc, const GateConfig& config) {
  if (!should_trigger(acc, config)) {
    raise(Errc::trigger_without_threshold,
          "gate for app '" + acc.app_id + "' has not fired (U <= tau)");
  }
  acc.trigger_count += 1;
  if (config.reset_on_trigger) {
    acc.u_value = 0.0;
    acc.decay_factor = 1.0;
  }
  HistoryEntry entry;
  entry.kind = HistoryEntry::Kind::trigger;
  entry.step_ordinal = acc.steps_recorded;
  entry.u_after = acc.u_value;
  acc.history.push_back(entry);
  return acc;
}

AccumulatorStore::AccumulatorStore(const AccumulatorStore& other) {
  std::shared_lock lock(other.mutex_);
  accumulators_ = other.accumulators_;
}

AccumulatorStore& AccumulatorStore::operator=(const AccumulatorStore& other) {
  if (this == &other) return *this;
  auto copy = other.snapshot();
  std::unique_lock lock(mutex_);
  accumulators_ = std::move(copy);
  return *this;
}

AppAccumulator AccumulatorStore::get(const std::string& app_id) const {
  std::shared_lock lock(mutex_);
  auto it = accumulators_.find(app_id);
  if (it != accumulators_.end()) return it->second;
  return make_accumulator(app_id);
}

void AccumulatorStore::put(AppAccumulator acc) {
  std::unique_lock lock(mutex_);
  accumulators_[acc.app_id] = std::move(acc);
}

std::vector<std::string> AccumulatorStore::app_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  ids.reserve(accumulators_.size());
  for (const auto& [id, acc] : accumulators_) {
    (void)acc;
    ids.push_back(id);
  }
  return ids;
}

std::map<std::string, AppAccumulator> AccumulatorStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return accumulators_;
}

std::string accumulator_to_json(const AppAccumulator& acc, int indent) {
  return accumulator_to_json_doc(acc).dump(indent);
}

AppAccumulator accumulator_from_json(const std::string& text) {
  return accumulator_from_json_doc(parse_json(text, "accumulator state"));
}

std::string accumulators_to_json(const std::map<std::string, AppAccumulator>& accs, int indent) {
  Json doc;
  auto apps = Json::array();
  for (const auto& [id, acc] : accs) {
    (void)id;
    apps.push_back(accumulator_to_json_doc(acc));
  }
  doc["apps"] = std::move(apps);
  return doc.dump(indent);
}

std::map<std::string, AppAccumulator> accumulators_from_json(const std::string& text) {
  const Json doc = parse_json(text, "accumulator state");
  std::map<std::string, AppAccumulator> accs;
  if (doc.contains("apps")) {
    for (const auto& item : doc.at("apps")) {
      AppAccumulator acc = accumulator_from_json_doc(item);
      accs[acc.app_id] = std::move(acc);
    }
  } else {
    AppAccumulator acc = accumulator_from_json_doc(doc);
    accs[acc.app_id] = std::move(acc);
  }
  return accs;
}

}  // namespace curio
