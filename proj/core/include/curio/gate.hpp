#pragma once

#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

namespace curio {

// Gate policy. tau is the trigger threshold (strictly exceeded to fire);
// +infinity is the documented sentinel for "gate disabled". decay_base
// discounts older gains, difficulty_weight scales every gain, and
// reset_on_trigger clears accumulated uncertainty once a trigger is marked.
struct GateConfig {
  double tau = 1.0;
  double decay_base = 0.95;
  double difficulty_weight = 1.0;
  bool reset_on_trigger = true;

  void validate() const;
};

// One audit line in an accumulator history: either a recorded gain with the
// weight it received, or a trigger marker.
struct HistoryEntry {
  enum class Kind { record, trigger };
  Kind kind = Kind::record;
  int step_ordinal = 0;       // records counted from 1 per app
  double js_star_bits = 0.0;  // zero for trigger markers
  double weight = 0.0;        // zero for trigger markers
  double u_after = 0.0;

  bool operator==(const HistoryEntry&) const = default;
};

// Discounted cumulative uncertainty for one app:
// u_value = sum over records since the last reset of weight * js_star, with
// weight = difficulty_weight * decay_base^(records since that reset).
// decay_factor carries the next record's decay term explicitly so repeated
// multiplication (not pow) keeps replays bit-deterministic.
struct AppAccumulator {
  std::string app_id;
  double u_value = 0.0;
  int steps_recorded = 0;
  int trigger_count = 0;
  double decay_factor = 1.0;
  std::vector<HistoryEntry> history;

  bool operator==(const AppAccumulator&) const = default;
};

AppAccumulator make_accumulator(std::string app_id);

// Folds one gain into the accumulator. The gain must be non-negative.
AppAccumulator record(AppAccumulator acc, double js_star_bits, const GateConfig& config);

// True when accumulated uncertainty strictly exceeds tau.
bool should_trigger(const AppAccumulator& acc, const GateConfig& config);

// Marks a retrieval trigger: increments trigger_count, appends a history
// marker, and (under reset_on_trigger) clears u_value and restarts the decay
// clock. Calling it while the gate has not fired is an error.
AppAccumulator mark_triggered(AppAccumulator acc, const GateConfig& config);

// Accumulators keyed by app_id. Reads may run concurrently; writes are
// serialized, which subsumes the per-app single-writer requirement.
class AccumulatorStore {
 public:
  AccumulatorStore() = default;
  AccumulatorStore(const AccumulatorStore& other);
  AccumulatorStore& operator=(const AccumulatorStore& other);

  // Returns the stored accumulator, or a fresh one for unknown apps.
  AppAccumulator get(const std::string& app_id) const;
  void put(AppAccumulator acc);
  std::vector<std::string> app_ids() const;
  std::map<std::string, AppAccumulator> snapshot() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, AppAccumulator> accumulators_;
};

// JSON round trip for accumulator state:
// {"app_id", "u", "steps", "triggers", "decay_factor", "history": [...]}.
// A multi-app file is {"apps": [ ...one object per app... ]}.
std::string accumulator_to_json(const AppAccumulator& acc, int indent = -1);
AppAccumulator accumulator_from_json(const std::string& text);
std::string accumulators_to_json(const std::map<std::string, AppAccumulator>& accs,
                                 int indent = -1);
std::map<std::string, AppAccumulator> accumulators_from_json(const std::string& text);

}  // namespace curio
