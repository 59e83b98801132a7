#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nemhom::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail; // deterministic, no timings
};

struct Outcome {
    std::vector<CriterionResult> criteria;
    std::string report; // canonical text, byte-stable for a fixed seed
    bool all_pass = false;
};

// Runs the full verification suite (criteria 1-11 computed twice for the
// determinism criterion 12). progress, when given, receives human-oriented
// log lines including timings; the report string never contains timings.
Outcome run(std::uint64_t seed, std::ostream* progress = nullptr);

} // namespace nemhom::acceptance
