#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "memtutor/csv.hpp"
#include "memtutor/params.hpp"

namespace memtutor {

struct FamilyPrior {
    double mu = 0.0;
    double sigma = 1.0;
};

// Normal prior per parameter family, estimated during pretraining.
struct PriorDistributions {
    std::array<FamilyPrior, kFamilyCount> families;

    const FamilyPrior& of(ParamFamily f) const { return families[static_cast<int>(f)]; }
    FamilyPrior& of(ParamFamily f) { return families[static_cast<int>(f)]; }

    void validate() const {
        for (const auto& fp : families)
            if (!(fp.sigma > 0.0))
                throw std::invalid_argument("PriorDistributions: sigma must be positive");
    }

    // One line per family: family,mu,sigma.
    void save(const std::string& path) const {
        std::string out;
        for (ParamFamily f : kAllFamilies) {
            const auto& fp = of(f);
            out += std::string(family_name(f)) + "," + format_g17(fp.mu) + "," +
                   format_g17(fp.sigma) + "\n";
        }
        write_file(path, out);
    }

    static PriorDistributions load(const std::string& path) {
        const auto lines = read_lines(path);
        PriorDistributions p;
        int seen = 0;
        for (const auto& line : lines) {
            if (line.empty()) continue;
            const auto cols = split_csv_line(line);
            if (cols.size() != 3) throw std::runtime_error("bad priors line: " + line);
            bool matched = false;
            for (ParamFamily f : kAllFamilies) {
                if (cols[0] == family_name(f)) {
                    p.of(f).mu = parse_double(cols[1]);
                    p.of(f).sigma = parse_double(cols[2]);
                    matched = true;
                    ++seen;
                }
            }
            if (!matched) throw std::runtime_error("unknown parameter family: " + cols[0]);
        }
        if (seen != kFamilyCount)
            throw std::runtime_error("priors file must define all five families: " + path);
        p.validate();
        return p;
    }

    // Parameter set sitting at the family means.
    ParamSet mean_params(int items, int skills, int windows) const {
        ParamSet p(items, skills, windows);
        p.alpha = of(ParamFamily::alpha).mu;
        p.delta.setConstant(of(ParamFamily::delta).mu);
        p.beta.setConstant(of(ParamFamily::beta).mu);
        p.theta.setConstant(of(ParamFamily::theta).mu);
        p.phi.setConstant(of(ParamFamily::phi).mu);
        return p;
    }
};

}  // namespace memtutor
