#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nemhom/colloid.hpp"
#include "nemhom/grid.hpp"
#include "nemhom/homogenize.hpp"

namespace nemhom {

// Run configuration: one JSON file with a versioned schema field. All
// physical parameters are dimensionless. Validation raises errors (or
// collects warnings) whose messages name the violated assumption tag.
struct RunConfig {
    std::uint64_t seed = 42;
    int threads = 0; // 0 = library default
    std::string output_dir = "out";

    Vec3 box_lo = Vec3::Zero();
    Vec3 box_hi = Vec3::Ones();
    int grid_n[3] = {17, 17, 17};

    ElasticParams elastic{1.0, 0.0, 0.0};
    BulkParams bulk{1.0, 0.0, 1.0};
    BoundaryData boundary = BoundaryData::constant(QTensor{});
    std::vector<SpeciesSpec> species;

    struct DesignTarget {
        SymMatrix p;
        double w = 1.0;
        double a = 0.0;
        double a_prime = 1.0;
    };
    std::optional<DesignTarget> design;

    SweepOptions sweep;
    bool has_sweep = false;

    SolveOptions solver;
    std::string init = "harmonic"; // or "constant"
    int hom_order = 16;
    bool drop_constant = false;

    std::vector<std::string> warnings;

    GridSpec make_grid() const {
        return GridSpec(box_lo, box_hi, grid_n[0], grid_n[1], grid_n[2]);
    }
    HomEvaluator make_evaluator() const {
        return HomEvaluator(species, hom_order, drop_constant);
    }
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

// Named custom surface densities usable from config files ("minus_q4" is the
// quartic density unbounded below; "plus_q4" its bounded counterpart).
SurfaceDensity::CustomFns custom_density_by_name(const std::string& name);

// Species list of a design, serialized in the run-config species format so a
// designed system feeds directly into the solver and colloid machinery.
std::string design_species_json(const DesignSpec& design, double density = 1.0);
std::string design_report_text(const DesignSpec& design);
std::string design_report_csv(const DesignSpec& design);

} // namespace nemhom
