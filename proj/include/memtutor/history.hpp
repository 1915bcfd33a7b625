#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "memtutor/csv.hpp"

namespace memtutor {

// One (learner, item, time, outcome) tuple; the atom of learning history.
struct InteractionRecord {
    int learner = 0;
    int item = 0;
    std::int64_t timestamp = 0;
    int outcome = 0;

    void validate() const {
        if (outcome != 0 && outcome != 1)
            throw std::invalid_argument("InteractionRecord: outcome must be 0 or 1");
        if (timestamp < 0)
            throw std::invalid_argument("InteractionRecord: timestamp must be non-negative");
    }
};

using History = std::vector<InteractionRecord>;

// CSV: header "learner_id,item_id,timestamp,outcome".
inline History load_history_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "learner_id,item_id,timestamp,outcome")
        throw std::runtime_error("history CSV needs a learner_id,item_id,timestamp,outcome header: " + path);
    History h;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cols = split_csv_line(lines[i]);
        if (cols.size() != 4) throw std::runtime_error("bad history row: " + lines[i]);
        InteractionRecord rec;
        rec.learner = static_cast<int>(parse_int(cols[0]));
        rec.item = static_cast<int>(parse_int(cols[1]));
        rec.timestamp = parse_int(cols[2]);
        rec.outcome = static_cast<int>(parse_int(cols[3]));
        rec.validate();
        h.push_back(rec);
    }
    return h;
}

inline void save_history_csv(const History& h, const std::string& path) {
    std::string out = "learner_id,item_id,timestamp,outcome\n";
    for (const auto& rec : h) {
        out += std::to_string(rec.learner) + "," + std::to_string(rec.item) + "," +
               std::to_string(rec.timestamp) + "," + std::to_string(rec.outcome) + "\n";
    }
    write_file(path, out);
}

}  // namespace memtutor
