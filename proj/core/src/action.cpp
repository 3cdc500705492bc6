#include "curio/action.hpp"

#include "curio/errors.hpp"

namespace curio {

const char* action_kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::tap_by_index: return "tap_by_index";
    case ActionKind::tap_by_text: return "tap_by_text";
    case ActionKind::input_text: return "input_text";
    case ActionKind::swipe: return "swipe";
  }
  return "tap_by_index";
}

const char* direction_name(Direction direction) {
  switch (direction) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "up";
}

Action Action::tap_by_index(int index) {
  Action action;
  action.kind = ActionKind::tap_by_index;
  action.payload = index;
  action.validate();
  return action;
}

Action Action::tap_by_text(std::string target) {
  Action action;
  action.kind = ActionKind::tap_by_text;
  action.payload = std::move(target);
  return action;
}

Action Action::input_text(std::string text) {
  Action action;
  action.kind = ActionKind::input_text;
  action.payload = std::move(text);
  return action;
}

Action Action::swipe(Direction direction) {
  Action action;
  action.kind = ActionKind::swipe;
  action.payload = direction;
  return action;
}

void Action::validate() const {
  switch (kind) {
    case ActionKind::tap_by_index: {
      const int* index = std::get_if<int>(&payload);
      if (index == nullptr) {
        raise(Errc::invalid_argument, "tap_by_index requires an integer payload");
      }
      if (*index < 0) {
        raise(Errc::invalid_argument,
              "tap_by_index requires a non-negative index, got " + std::to_string(*index));
      }
      return;
    }
    case ActionKind::tap_by_text:
      if (!std::holds_alternative<std::string>(payload)) {
        raise(Errc::invalid_argument, "tap_by_text requires a text payload");
      }
      return;
    case ActionKind::input_text:
      if (!std::holds_alternative<std::string>(payload)) {
        raise(Errc::invalid_argument, "input_text requires a text payload");
      }
      return;
    case ActionKind::swipe:
      if (!std::holds_alternative<Direction>(payload)) {
        raise(Errc::invalid_argument, "swipe requires a direction payload");
      }
      return;
  }
  raise(Errc::invalid_argument, "unknown action kind");
}

std::string Action::payload_text() const {
  if (const int* index = std::get_if<int>(&payload)) return std::to_string(*index);
  if (const std::string* text = std::get_if<std::string>(&payload)) return *text;
  return direction_name(std::get<Direction>(payload));
}

}  // namespace curio
