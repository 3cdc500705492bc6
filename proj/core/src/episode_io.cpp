#include "curio/episode_io.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "curio/errors.hpp"

namespace curio {
namespace {

using Json = nlohmann::ordered_json;

Json state_to_json(const UiState& state) {
  Json doc;
  doc["state_id"] = state.state_id;
  doc["app_id"] = state.app_id;
  doc["a11y_text"] = state.a11y_text;
  if (state.screenshot_ref) doc["screenshot_ref"] = *state.screenshot_ref;
  return doc;
}

UiState state_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) raise(Errc::malformed_dump, where + ": state must be an object");
  UiState state;
  try {
    state.state_id = doc.at("state_id").get<std::string>();
    state.app_id = doc.at("app_id").get<std::string>();
    state.a11y_text = doc.at("a11y_text").get<std::string>();
  } catch (const Json::exception&) {
    raise(Errc::malformed_dump, where + ": state needs state_id, app_id and a11y_text strings");
  }
  if (doc.contains("screenshot_ref") && doc.at("screenshot_ref").is_string()) {
    state.screenshot_ref = doc.at("screenshot_ref").get<std::string>();
  }
  state.validate();
  return state;
}

Json action_to_json(const Action& action) {
  Json doc;
  doc["kind"] = action_kind_name(action.kind);
  switch (action.kind) {
    case ActionKind::tap_by_index:
      doc["index"] = std::get<int>(action.payload);
      break;
    case ActionKind::tap_by_text:
      doc["target"] = std::get<std::string>(action.payload);
      break;
    case ActionKind::input_text:
      doc["text"] = std::get<std::string>(action.payload);
      break;
    case ActionKind::swipe:
      doc["direction"] = direction_name(std::get<Direction>(action.payload));
      break;
  }
  return doc;
}

Action action_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    raise(Errc::malformed_dump, where + ": action needs a string 'kind'");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  try {
    if (kind == "tap_by_index") return Action::tap_by_index(doc.at("index").get<int>());
    if (kind == "tap_by_text") return Action::tap_by_text(doc.at("target").get<std::string>());
    if (kind == "input_text") return Action::input_text(doc.at("text").get<std::string>());
    if (kind == "swipe") {
      const std::string direction = doc.at("direction").get<std::string>();
      if (direction == "up") return Action::swipe(Direction::up);
      if (direction == "down") return Action::swipe(Direction::down);
      if (direction == "left") return Action::swipe(Direction::left);
      if (direction == "right") return Action::swipe(Direction::right);
      raise(Errc::malformed_dump, where + ": unknown swipe direction '" + direction + "'");
    }
  } catch (const Json::exception&) {
    raise(Errc::malformed_dump, where + ": action payload does not match kind '" + kind + "'");
  }
  raise(Errc::malformed_dump, where + ": unknown action kind '" + kind + "'");
}

Json step_records_to_json(const std::vector<StepRecord>& records) {
  auto list = Json::array();
  for (const auto& record : records) {
    Json doc;
    doc["step"] = record.step;
    auto entries = Json::array();
    for (const auto& entry : record.entries) {
      Json item;
      item["token"] = entry.token;
      item["logprob"] = entry.logprob;
      entries.push_back(std::move(item));
    }
    doc["entries"] = std::move(entries);
    list.push_back(std::move(doc));
  }
  return list;
}

std::vector<StepDistribution> steps_from_json(const Json& list, const std::string& where, int k,
                                              bool base10) {
  if (!list.is_array() || list.empty()) {
    raise(Errc::malformed_dump, where + ": expected a non-empty array of step records");
  }
  std::vector<StepDistribution> steps;
  steps.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& doc = list[i];
    const std::string record_where = where + "[" + std::to_string(i) + "]";
    if (!doc.is_object() || !doc.contains("step") || !doc.at("step").is_number_integer() ||
        !doc.contains("entries") || !doc.at("entries").is_array()) {
      raise(Errc::malformed_dump, record_where + ": invalid step record");
    }
    std::vector<TokenEntry> entries;
    for (const auto& item : doc.at("entries")) {
      if (!item.is_object() || !item.contains("token") || !item.at("token").is_string() ||
          !item.contains("logprob") || !item.at("logprob").is_number()) {
        raise(Errc::malformed_dump,
              record_where + ": entry needs string 'token' and numeric 'logprob'");
      }
      TokenEntry entry;
      entry.token = item.at("token").get<std::string>();
      entry.logprob = item.at("logprob").get<double>();
      if (base10) entry.logprob *= std::log(10.0);
      entries.push_back(std::move(entry));
    }
    steps.push_back(step_from_logprobs(entries, k, doc.at("step").get<int>()));
  }
  return steps;
}

Json gate_config_to_json(const GateConfig& config) {
  Json doc;
  doc["tau"] = config.tau;
  doc["decay_base"] = config.decay_base;
  doc["difficulty_weight"] = config.difficulty_weight;
  doc["reset_on_trigger"] = config.reset_on_trigger;
  return doc;
}

}  // namespace

EpisodeLoadResult load_episode_log(const std::filesystem::path& path, int k, bool base10) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open episode log: " + path.string());

  EpisodeLoadResult result;
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
    try {
      const Json doc = Json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.is_object()) {
        raise(Errc::malformed_dump, where + ": invalid JSON transition record");
      }
      if (!doc.contains("state") || !doc.contains("action") || !doc.contains("next_state") ||
          !doc.contains("prior") || !doc.contains("posterior")) {
        raise(Errc::malformed_dump,
              where + ": transition needs state, action, next_state, prior, posterior");
      }
      TransitionRecord transition;
      transition.state = state_from_json(doc.at("state"), where);
      transition.action = action_from_json(doc.at("action"), where);
      transition.next_state = state_from_json(doc.at("next_state"), where);
      transition.prior_steps = steps_from_json(doc.at("prior"), where + ": prior", k, base10);
      transition.posterior_steps =
          steps_from_json(doc.at("posterior"), where + ": posterior", k, base10);
      result.transitions.push_back(std::move(transition));
    } catch (const Error& e) {
      // Append-only logs may end (or be damaged) mid-record; keep what
      // replays cleanly and report the cut.
      result.truncated = true;
      result.truncated_line = line_no;
      result.truncation_message = e.what();
      break;
    }
  }
  return result;
}

std::string transition_to_log_line(const UiState& state, const Action& action,
                                   const UiState& next_state,
                                   const std::vector<StepRecord>& prior,
                                   const std::vector<StepRecord>& posterior) {
  Json doc;
  doc["state"] = state_to_json(state);
  doc["action"] = action_to_json(action);
  doc["next_state"] = state_to_json(next_state);
  doc["prior"] = step_records_to_json(prior);
  doc["posterior"] = step_records_to_json(posterior);
  return doc.dump();
}

std::string episode_report_to_json(const EpisodeReport& report, int indent) {
  Json doc;
  doc["gate"] = gate_config_to_json(report.gate_config);
  doc["lambda"] = report.lambda;
  auto transitions = Json::array();
  for (const auto& transition : report.transitions) {
    Json item;
    item["step"] = transition.step;
    item["app_id"] = transition.app_id;
    item["report"] = Json::parse(report_to_json(transition.report));
    transitions.push_back(std::move(item));
  }
  doc["transitions"] = std::move(transitions);
  Json traces;
  for (const auto& [app, trace] : report.u_traces) {
    auto list = Json::array();
    for (const auto& point : trace) {
      Json item;
      item["step"] = point.step;
      item["u"] = point.u_after;
      list.push_back(std::move(item));
    }
    traces[app] = std::move(list);
  }
  doc["u_traces"] = std::move(traces);
  auto events = Json::array();
  for (const auto& event : report.gate_events) {
    Json item;
    item["step"] = event.step;
    item["app_id"] = event.app_id;
    item["u_at_fire"] = event.u_at_fire;
    events.push_back(std::move(item));
  }
  doc["gate_events"] = std::move(events);
  auto injected = Json::array();
  for (const auto& injection : report.cards_injected) {
    Json item;
    item["step"] = injection.step;
    item["app_id"] = injection.app_id;
    item["version"] = injection.version;
    injected.push_back(std::move(item));
  }
  doc["cards_injected"] = std::move(injected);
  Json final_u;
  for (const auto& [app, acc] : report.final_accumulators) {
    final_u[app] = acc.u_value;
  }
  doc["final_u"] = std::move(final_u);
  doc["status"] = report.partial ? "partial" : "clean";
  if (report.partial) {
    doc["failed_step"] = report.failed_step.value_or(0);
    doc["failure"] = report.failure_message;
  }
  return doc.dump(indent);
}

}  // namespace curio
