#pragma once

#include <map>
#include <string>
#include <vector>

#include "memtutor/experiment.hpp"

namespace memtutor {

// Flat key-value configuration. The file format is INI-flavored: `key =
// value` lines, optional `[section]` headers that prefix the keys that
// follow, `#`/`;` comments. All keys end up dotted (`ppo.clip`).
class ConfigMap {
public:
    static ConfigMap parse_text(const std::string& text) {
        ConfigMap cfg;
        std::string section;
        int line_no = 0;
        size_t at = 0;
        while (at <= text.size()) {
            const size_t end = text.find('\n', at);
            std::string line = text.substr(at, end == std::string::npos ? end : end - at);
            at = end == std::string::npos ? text.size() + 1 : end + 1;
            ++line_no;
            line = trim(line);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": unterminated section");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": expected key=value");
            std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": empty key");
            if (!section.empty()) key = section + "." + key;
            cfg.kv_[key] = value;
        }
        return cfg;
    }

    static ConfigMap load(const std::string& path) { return parse_text(read_file(path)); }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    // Parses a repeatable "key=value" override.
    void set_override(const std::string& assignment) {
        const size_t eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("override must be key=value: " + assignment);
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        if (it->second == "inf") return std::numeric_limits<double>::infinity();
        return parse_double(it->second);
    }

    int get_int(const std::string& key, int def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : static_cast<int>(parse_int(it->second));
    }

    std::int64_t get_int64(const std::string& key, std::int64_t def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : parse_int(it->second);
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> def) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<double> out;
        for (const auto& tok : split_csv_line(it->second))
            out.push_back(tok == "inf" ? std::numeric_limits<double>::infinity()
                                       : parse_double(trim(tok)));
        return out;
    }

    std::vector<std::int64_t> get_int64_list(const std::string& key,
                                             std::vector<std::int64_t> def) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<std::int64_t> out;
        for (const auto& tok : split_csv_line(it->second)) out.push_back(parse_int(trim(tok)));
        return out;
    }

    // Sorted key=value text; the run-directory hash is derived from it, so
    // identical effective configs land in identical directories.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
        return out;
    }

    std::uint64_t hash() const { return fnv1a64(canonical()); }

    const std::map<std::string, std::string>& entries() const { return kv_; }

    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
        while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
        return s.substr(b, e - b);
    }

private:
    std::map<std::string, std::string> kv_;
};

namespace config_detail {

inline FamilyPrior read_family(const ConfigMap& c, const std::string& prefix, FamilyPrior def) {
    return {c.get_double(prefix + ".mu", def.mu), c.get_double(prefix + ".sigma", def.sigma)};
}

inline GeneratorConfig read_generator(const ConfigMap& c, const std::string& prefix,
                                      const GeneratorConfig& def) {
    GeneratorConfig g;
    g.alpha = read_family(c, prefix + ".alpha", def.alpha);
    g.delta = read_family(c, prefix + ".delta", def.delta);
    g.beta = read_family(c, prefix + ".beta", def.beta);
    g.theta = read_family(c, prefix + ".theta", def.theta);
    g.phi = read_family(c, prefix + ".phi", def.phi);
    return g;
}

inline SessionSchedule read_schedule(const ConfigMap& c) {
    SessionSchedule s;
    s.days = c.get_int("schedule.days", 15);
    s.items_per_session = c.get_int("schedule.items_per_session", 10);
    s.session_offsets = c.get_int64_list("schedule.session_offsets", {9 * 3600, 21 * 3600});
    s.step_gap = c.get_int64("schedule.step_gap", 30);
    s.base_time = c.get_int64("schedule.base_time", 0);
    return s;
}

}  // namespace config_detail

// Priors used when no calibrated priors file is given: the generator
// distributions themselves, which is exactly what a perfectly calibrated
// pretraining would recover in expectation.
inline PriorDistributions priors_from_generator(const GeneratorConfig& gen) {
    PriorDistributions p;
    for (ParamFamily f : kAllFamilies) p.of(f) = gen.of(f);
    return p;
}

inline ExperimentConfig materialize_config(const ConfigMap& c) {
    ExperimentConfig cfg;
    if (c.has("bank.file")) {
        cfg.bank = ItemBank::load_csv(c.get_string("bank.file", ""));
    } else {
        cfg.bank = ItemBank::uniform_mod(c.get_int("items", 30), c.get_int("skills", 10));
    }
    if (c.has("windows")) {
        cfg.windows.tau = c.get_double_list("windows", {});
    } else {
        cfg.windows = TimeWindows::standard();
    }
    cfg.sensory.h = c.get_double("sensory.h", 0.3);
    cfg.sensory.f = c.get_double("sensory.f", 0.7);
    cfg.sensory.dt_unit = c.get_double("sensory.dt_unit", 86400.0);
    cfg.schedule = config_detail::read_schedule(c);

    const GeneratorConfig gen = config_detail::read_generator(c, "generator", GeneratorConfig{});
    cfg.student_gen = config_detail::read_generator(c, "student", gen);

    cfg.loss.lambda = c.get_double("loss.lambda", 0.5);
    for (ParamFamily f : kAllFamilies)
        cfg.loss.c[static_cast<int>(f)] =
            c.get_double(std::string("loss.c.") + family_name(f), 1.0);
    cfg.fit_epochs = c.get_int("fit.epochs", 10);
    cfg.fit_lr = c.get_double("fit.lr", 1e-2);

    cfg.tutor = c.get_string("tutor", "random");
    cfg.leitner_boxes = c.get_int("leitner.boxes", 5);
    cfg.leitner_intervals = c.get_int64_list("leitner.intervals", {1, 2, 4, 8, 16});
    cfg.threshold_value = c.get_double("threshold.value", 0.9);

    cfg.rl.rollout.horizon = c.get_int("ppo.horizon", 4000);
    cfg.rl.rollout.workers = c.get_int("ppo.workers", 20);
    cfg.rl.rollout.chunk = c.get_int("ppo.chunk", 10);
    cfg.rl.rollout.gamma = c.get_double("ppo.gamma", 0.85);
    cfg.rl.rollout.gae_lambda = c.get_double("ppo.gae_lambda", 0.95);
    cfg.rl.ppo.clip = c.get_double("ppo.clip", 0.2);
    cfg.rl.ppo.vf_coef = c.get_double("ppo.vf_coef", 0.5);
    cfg.rl.ppo.ent_coef = c.get_double("ppo.ent_coef", 0.01);
    cfg.rl.ppo.epochs = c.get_int("ppo.epochs", 10);
    cfg.rl.ppo.minibatch = c.get_int("ppo.minibatch", 200);
    cfg.rl.ppo.lr = c.get_double("ppo.lr", 1e-4);
    cfg.rl.iters_per_session = c.get_int("ppo.iters_per_session", 3);
    cfg.rl.hidden = c.get_int("net.hidden", 512);

    if (c.has("priors.file")) {
        cfg.priors = PriorDistributions::load(c.get_string("priors.file", ""));
    } else {
        cfg.priors = priors_from_generator(gen);
    }
    if (c.has("params.file")) {
        cfg.initial_params = load_param_set(c.get_string("params.file", ""));
    } else {
        cfg.initial_params =
            cfg.priors.mean_params(cfg.bank.items, cfg.bank.skills, cfg.windows.count());
    }
    return cfg;
}

inline PretrainConfig materialize_pretrain(const ConfigMap& c) {
    PretrainConfig p;
    p.population = c.get_int("pretrain.population", 40);
    p.schedule = config_detail::read_schedule(c);
    p.fit_epochs = c.get_int("pretrain.epochs", 150);
    p.fit_lr = c.get_double("pretrain.lr", 0.05);
    return p;
}

}  // namespace memtutor
