#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace memtutor {

// Calendar of a simulated study: a fixed number of days, fixed session start
// times within each day, and an even step gap between presentations inside a
// session.
struct SessionSchedule {
    int days = 15;
    int items_per_session = 10;
    std::vector<std::int64_t> session_offsets = {9 * 3600, 21 * 3600};  // seconds into the day
    std::int64_t step_gap = 30;                                         // seconds
    std::int64_t base_time = 0;

    int sessions_per_day() const { return static_cast<int>(session_offsets.size()); }
    int total_sessions() const { return days * sessions_per_day(); }
    int total_steps() const { return total_sessions() * items_per_session; }

    std::int64_t session_time(int session) const {
        const int per_day = sessions_per_day();
        return base_time + static_cast<std::int64_t>(session / per_day) * 86400 +
               session_offsets[session % per_day];
    }

    // Time of presentation `step` (0-based) within `session`.
    std::int64_t step_time(int session, int step) const {
        return session_time(session) + static_cast<std::int64_t>(step) * step_gap;
    }

    void validate() const {
        if (days <= 0) throw std::invalid_argument("SessionSchedule: days must be positive");
        if (items_per_session <= 0)
            throw std::invalid_argument("SessionSchedule: items_per_session must be positive");
        if (step_gap <= 0) throw std::invalid_argument("SessionSchedule: step_gap must be positive");
        if (session_offsets.empty())
            throw std::invalid_argument("SessionSchedule: needs at least one session per day");
        for (size_t i = 0; i + 1 < session_offsets.size(); ++i)
            if (session_offsets[i] >= session_offsets[i + 1])
                throw std::invalid_argument("SessionSchedule: session offsets must be ascending");
        if (session_offsets.front() < 0 || session_offsets.back() >= 86400)
            throw std::invalid_argument("SessionSchedule: session offsets must lie within a day");
        // Sessions must not overlap: the last step of one session must come
        // strictly before the start of the next.
        const std::int64_t span = static_cast<std::int64_t>(items_per_session - 1) * step_gap;
        const int total = total_sessions();
        for (int s = 0; s + 1 < total; ++s)
            if (session_time(s) + span >= session_time(s + 1))
                throw std::invalid_argument("SessionSchedule: sessions overlap");
    }
};

}  // namespace memtutor
