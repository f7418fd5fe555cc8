#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sgq {

enum class GatePolicy { first_above, best_of_session, best_in_window };

std::string to_string(GatePolicy p);
GatePolicy gate_policy_from_string(const std::string& s);

struct GateConfig {
    double sigma = 0.0;
    GatePolicy policy = GatePolicy::first_above;
    int window = 1;  // best_in_window only
};

struct TimelineRow {
    std::string frame_id;
    double q = 0.0;
    double s = 0.0;
    bool accepted = false;  // q >= sigma
};

struct SessionTimeline {
    std::string session_id;
    std::vector<TimelineRow> rows;  // temporal order
    std::optional<std::size_t> selected;  // index into rows
};

// Replays precomputed frame scores through the gate. The gate consumes only
// q; s is carried for reporting. Ties select the earliest frame.
SessionTimeline gate_session(const std::string& session_id, const std::vector<std::string>& frame_ids,
                             const std::vector<double>& q, const std::vector<double>& s, const GateConfig& cfg);

}  // namespace sgq
