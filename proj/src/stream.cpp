#include "sgq/stream.hpp"

#include <algorithm>
#include <stdexcept>

#include "sgq/common.hpp"

namespace sgq {

std::string to_string(GatePolicy p) {
    switch (p) {
        case GatePolicy::first_above: return "first_above";
        case GatePolicy::best_of_session: return "best_of_session";
        case GatePolicy::best_in_window: return "best_in_window";
    }
    return "?";
}

GatePolicy gate_policy_from_string(const std::string& s) {
    if (s == "first_above") return GatePolicy::first_above;
    if (s == "best_of_session") return GatePolicy::best_of_session;
    if (s == "best_in_window") return GatePolicy::best_in_window;
    throw ConfigError("unknown gate policy: " + s);
}

SessionTimeline gate_session(const std::string& session_id, const std::vector<std::string>& frame_ids,
                             const std::vector<double>& q, const std::vector<double>& s, const GateConfig& cfg) {
    if (q.empty()) throw std::invalid_argument("gate_session: empty session");
    if (frame_ids.size() != q.size() || s.size() != q.size())
        throw std::invalid_argument("gate_session: per-frame vectors disagree");
    if (cfg.policy == GatePolicy::best_in_window && cfg.window < 1)
        throw std::invalid_argument("gate_session: window must be >= 1");

    SessionTimeline tl;
    tl.session_id = session_id;
    tl.rows.reserve(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) tl.rows.push_back({frame_ids[i], q[i], s[i], q[i] >= cfg.sigma});

    auto argmax_in = [&](std::size_t lo, std::size_t hi) {  // earliest maximum in [lo, hi)
        std::size_t best = lo;
        for (std::size_t i = lo + 1; i < hi; ++i)
            if (q[i] > q[best]) best = i;
        return best;
    };

    switch (cfg.policy) {
        case GatePolicy::first_above:
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (q[i] >= cfg.sigma) {
                    tl.selected = i;
                    break;
                }
            }
            break;
        case GatePolicy::best_of_session: {
            std::size_t best = argmax_in(0, q.size());
            if (q[best] >= cfg.sigma) tl.selected = best;
            break;
        }
        case GatePolicy::best_in_window: {
            std::size_t w = static_cast<std::size_t>(cfg.window);
            for (std::size_t start = 0; start < q.size(); ++start) {
                std::size_t end = std::min(start + w, q.size());
                std::size_t best = argmax_in(start, end);
                if (q[best] >= cfg.sigma) {
                    tl.selected = best;  // earliest window holding any accept wins
                    break;
                }
            }
            break;
        }
    }
    return tl;
}

}  // namespace sgq
