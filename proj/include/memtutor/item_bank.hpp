#pragma once

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "memtutor/csv.hpp"

namespace memtutor {

// Item pool with its item -> knowledge-component mapping. Every item carries
// at least one skill; one skill may tag several items.
struct ItemBank {
    int items = 0;
    int skills = 0;
    std::vector<std::vector<int>> kc_map;

    void validate() const {
        if (items < 1 || skills < 1)
            throw std::invalid_argument("ItemBank: need at least one item and one skill");
        if (static_cast<int>(kc_map.size()) != items)
            throw std::invalid_argument("ItemBank: kc_map size does not match item count");
        for (const auto& kcs : kc_map) {
            if (kcs.empty())
                throw std::invalid_argument("ItemBank: every item needs at least one skill");
            for (int k : kcs)
                if (k < 0 || k >= skills)
                    throw std::invalid_argument("ItemBank: skill id out of range");
        }
    }

    // j -> {j mod K}; the default bank shape.
    static ItemBank uniform_mod(int items, int skills) {
        ItemBank bank;
        bank.items = items;
        bank.skills = skills;
        bank.kc_map.resize(items);
        for (int j = 0; j < items; ++j) bank.kc_map[j] = {j % skills};
        bank.validate();
        return bank;
    }

    // CSV: header "item_id,skill_ids", skill ids ';'-separated.
    static ItemBank load_csv(const std::string& path) {
        const auto lines = read_lines(path);
        if (lines.empty() || split_csv_line(lines[0])[0] != "item_id")
            throw std::runtime_error("item bank CSV needs an item_id,skill_ids header: " + path);
        ItemBank bank;
        int max_skill = -1;
        for (size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto cols = split_csv_line(lines[i]);
            if (cols.size() != 2) throw std::runtime_error("bad item bank row: " + lines[i]);
            const int id = static_cast<int>(parse_int(cols[0]));
            if (id != static_cast<int>(bank.kc_map.size()))
                throw std::runtime_error("item ids must be dense and ascending from 0");
            std::vector<int> kcs;
            std::stringstream ss(cols[1]);
            std::string tok;
            while (std::getline(ss, tok, ';')) {
                const int k = static_cast<int>(parse_int(tok));
                kcs.push_back(k);
                max_skill = std::max(max_skill, k);
            }
            bank.kc_map.push_back(std::move(kcs));
        }
        bank.items = static_cast<int>(bank.kc_map.size());
        bank.skills = max_skill + 1;
        bank.validate();
        return bank;
    }

    void save_csv(const std::string& path) const {
        std::string out = "item_id,skill_ids\n";
        for (int j = 0; j < items; ++j) {
            out += std::to_string(j) + ",";
            for (size_t i = 0; i < kc_map[j].size(); ++i) {
                if (i) out += ";";
                out += std::to_string(kc_map[j][i]);
            }
            out += "\n";
        }
        write_file(path, out);
    }
};

// Ascending lookback horizons in seconds; the final window is infinite and
// therefore counts the whole history.
struct TimeWindows {
    std::vector<double> tau;

    int count() const { return static_cast<int>(tau.size()); }

    void validate() const {
        if (tau.empty()) throw std::invalid_argument("TimeWindows: need at least one window");
        for (size_t w = 0; w + 1 < tau.size(); ++w)
            if (!(tau[w] < tau[w + 1]))
                throw std::invalid_argument("TimeWindows: durations must be strictly ascending");
        if (tau.back() != std::numeric_limits<double>::infinity())
            throw std::invalid_argument("TimeWindows: last window must be infinite");
    }

    // 1 hour, 1 day, 1 week, 30 days, infinity.
    static TimeWindows standard() {
        TimeWindows w;
        w.tau = {3600.0, 86400.0, 604800.0, 2592000.0,
                 std::numeric_limits<double>::infinity()};
        return w;
    }
};

}  // namespace memtutor
