#pragma once

#include "hypro/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hypro {

using TypeId = std::size_t;

struct Event {
    double time{0.0};
    TypeId type{0};

    friend bool operator==(const Event&, const Event&) = default;
};

// Receives non-fatal diagnostics (timestamp perturbation and the like).
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

// Offset applied per duplicate when ties are broken at ingestion.
inline constexpr double kTieEpsilon = 1e-9;

/// Breaks timestamp ties in a time-sorted event list: the j-th repeat of a
/// timestamp is moved to time + j * kTieEpsilon. Returns the number of moved events.
/// Throws OrderingError if the list decreases anywhere or a shifted event would
/// collide with its successor.
inline std::size_t perturb_duplicate_times(std::vector<Event>& events) {
    std::size_t moved = 0;
    std::size_t run = 0;
    double run_time = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i > 0 && events[i].time < run_time) {
            std::ostringstream os;
            os << "event " << i << " at t=" << events[i].time << " precedes t=" << run_time;
            throw OrderingError(os.str());
        }
        if (i > 0 && events[i].time == run_time) {
            ++run;
            events[i].time = run_time + static_cast<double>(run) * kTieEpsilon;
            ++moved;
        } else {
            run = 0;
            run_time = events[i].time;
        }
        if (i > 0 && events[i].time <= events[i - 1].time) {
            throw OrderingError("tie perturbation collided with a neighbouring event at index " +
                                std::to_string(i));
        }
    }
    if (moved > 0) {
        warn("perturbed " + std::to_string(moved) + " duplicate timestamp(s) by multiples of 1e-9");
    }
    return moved;
}

/// Strictly time-ordered events on the closed window [t_start, t_end].
class EventSequence {
public:
    EventSequence() = default;

    EventSequence(std::vector<Event> events, double t_start, double t_end)
        : events_(std::move(events)), t_start_(t_start), t_end_(t_end) {
        validate();
    }

    [[nodiscard]] const std::vector<Event>& events() const noexcept { return events_; }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] double t_start() const noexcept { return t_start_; }
    [[nodiscard]] double t_end() const noexcept { return t_end_; }
    [[nodiscard]] const Event& operator[](std::size_t i) const { return events_[i]; }
    [[nodiscard]] auto begin() const noexcept { return events_.begin(); }
    [[nodiscard]] auto end() const noexcept { return events_.end(); }

    [[nodiscard]] double last_time() const noexcept {
        return events_.empty() ? t_start_ : events_.back().time;
    }

    [[nodiscard]] std::vector<std::size_t> type_counts(std::size_t num_types) const {
        std::vector<std::size_t> counts(num_types, 0);
        for (const auto& e : events_) {
            if (e.type < num_types) ++counts[e.type];
        }
        return counts;
    }

    friend bool operator==(const EventSequence&, const EventSequence&) = default;

private:
    void validate() const {
        if (!std::isfinite(t_start_) || !std::isfinite(t_end_) || t_start_ > t_end_) {
            std::ostringstream os;
            os << "invalid window [" << t_start_ << ", " << t_end_ << "]";
            throw RangeError(os.str());
        }
        for (std::size_t i = 0; i < events_.size(); ++i) {
            const double t = events_[i].time;
            if (!std::isfinite(t) || t < 0.0) {
                throw RangeError("event " + std::to_string(i) + " has non-finite or negative time");
            }
            if (t < t_start_ || t > t_end_) {
                std::ostringstream os;
                os << "event " << i << " at t=" << t << " outside [" << t_start_ << ", " << t_end_ << "]";
                throw RangeError(os.str());
            }
            if (i > 0 && t <= events_[i - 1].time) {
                std::ostringstream os;
                os << "events not strictly increasing at index " << i << " (t=" << t << ")";
                throw OrderingError(os.str());
            }
        }
    }

    std::vector<Event> events_;
    double t_start_{0.0};
    double t_end_{0.0};
};

/// Events of `seq` with lo < time <= hi, re-windowed to [lo, hi].
[[nodiscard]] inline EventSequence slice(const EventSequence& seq, double lo, double hi) {
    std::vector<Event> out;
    for (const auto& e : seq) {
        if (e.time > lo && e.time <= hi) out.push_back(e);
    }
    return EventSequence(std::move(out), lo, hi);
}

/// Prefix followed by a continuation that starts where the prefix ends.
[[nodiscard]] inline EventSequence concatenate(const EventSequence& prefix, const EventSequence& continuation) {
    std::vector<Event> events = prefix.events();
    events.insert(events.end(), continuation.begin(), continuation.end());
    return EventSequence(std::move(events), prefix.t_start(), std::max(prefix.t_end(), continuation.t_end()));
}

struct HorizonSplit {
    EventSequence prefix;  // over [t_start, T]
    EventSequence truth;   // over (T, T']
    double T{0.0};
    double T_prime{0.0};

    [[nodiscard]] double horizon() const noexcept { return T_prime - T; }
};

struct Dataset {
    std::vector<std::string> ids;
    std::vector<EventSequence> sequences;
    std::size_t num_types{1};
    std::string time_unit{"1"};

    [[nodiscard]] std::size_t size() const noexcept { return sequences.size(); }
    [[nodiscard]] bool empty() const noexcept { return sequences.empty(); }

    void validate() const {
        if (num_types == 0) throw SchemaError("dataset must declare at least one event type");
        if (!ids.empty() && ids.size() != sequences.size()) {
            throw SchemaError("dataset ids and sequences differ in length");
        }
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            for (const auto& e : sequences[s]) {
                if (e.type >= num_types) {
                    throw SchemaError("sequence " + std::to_string(s) + " has type " + std::to_string(e.type) +
                                      " >= K=" + std::to_string(num_types));
                }
            }
        }
    }

    [[nodiscard]] std::string id(std::size_t i) const {
        return i < ids.size() ? ids[i] : std::to_string(i);
    }
};

[[nodiscard]] inline HorizonSplit split_at_horizon(const EventSequence& seq, double T, double T_prime) {
    if (!(T >= seq.t_start()) || !(T < seq.t_end())) {
        std::ostringstream os;
        os << "T=" << T << " outside [" << seq.t_start() << ", " << seq.t_end() << ")";
        throw RangeError(os.str());
    }
    if (!(T_prime > T) || !(T_prime <= seq.t_end())) {
        std::ostringstream os;
        os << "T_prime=" << T_prime << " outside (" << T << ", " << seq.t_end() << "]";
        throw RangeError(os.str());
    }
    std::vector<Event> head;
    std::vector<Event> tail;
    for (const auto& e : seq) {
        if (e.time <= T) {
            head.push_back(e);
        } else if (e.time <= T_prime) {
            tail.push_back(e);
        }
    }
    return HorizonSplit{EventSequence(std::move(head), seq.t_start(), T),
                        EventSequence(std::move(tail), T, T_prime), T, T_prime};
}

/// Places T at the event that leaves exactly `budget` events after it; T' = t_end.
[[nodiscard]] inline HorizonSplit split_by_token_budget(const EventSequence& seq, std::size_t budget) {
    if (seq.size() <= budget) {
        throw LengthError("sequence has " + std::to_string(seq.size()) + " events, need more than " +
                          std::to_string(budget));
    }
    const double T = seq[seq.size() - budget - 1].time;
    return split_at_horizon(seq, T, seq.t_end());
}

} // namespace hypro
