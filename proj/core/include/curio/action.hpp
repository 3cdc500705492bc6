#pragma once

#include <string>
#include <variant>

namespace curio {

enum class Direction { up, down, left, right };

enum class ActionKind { tap_by_index, tap_by_text, input_text, swipe };

const char* action_kind_name(ActionKind kind);
const char* direction_name(Direction direction);

// One UI action. The payload variant is disambiguated by kind: an element
// index for tap_by_index, target text for tap_by_text, typed text for
// input_text, a direction for swipe.
struct Action {
  ActionKind kind = ActionKind::tap_by_index;
  std::variant<int, std::string, Direction> payload = 0;

  static Action tap_by_index(int index);
  static Action tap_by_text(std::string target);
  static Action input_text(std::string text);
  static Action swipe(Direction direction);

  // Throws InvalidArgument when the payload type does not match the kind or
  // a tap index is negative.
  void validate() const;

  // Payload rendered as text, e.g. for hashing or trajectory summaries.
  std::string payload_text() const;

  bool operator==(const Action&) const = default;
};

}  // namespace curio
