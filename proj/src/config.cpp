#include "nemhom/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nemhom {

using nlohmann::json;

namespace {

Vec3 parse_vec3(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("config: expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

SymMatrix parse_sym(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("config: expected a 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("config: design target P must be symmetric");
    return SymMatrix::from_matrix(m);
}

Shape parse_shape(const json& j) {
    Shape s;
    if (j.contains("patches")) {
        // User shape given as patch primitives; no point-membership test, so
        // it cannot be placed on a lattice, only homogenised.
        s.name = j.value("name", "custom");
        for (const json& pj : j["patches"]) {
            const std::string type = pj.at("type").get<std::string>();
            if (type == "sphere") {
                const double radius = pj.value("radius", 1.0);
                const auto th = pj.value("theta", std::vector<double>{0.0, M_PI});
                const auto ph = pj.value("phi", std::vector<double>{0.0, 2.0 * M_PI});
                Patch p;
                p.u0 = th.at(0);
                p.u1 = th.at(1);
                p.v0 = ph.at(0);
                p.v1 = ph.at(1);
                p.label = "sphere";
                p.eval = [radius](double theta, double phi) {
                    const Vec3 n(std::sin(theta) * std::cos(phi),
                                 std::sin(theta) * std::sin(phi), std::cos(theta));
                    return SurfaceSample{radius * n, n, radius * radius * std::sin(theta)};
                };
                s.patches.push_back(p);
            } else if (type == "disc") {
                const double radius = pj.value("radius", 1.0);
                const Vec3 a = parse_vec3(pj.at("span_a"));
                const Vec3 b = parse_vec3(pj.at("span_b"));
                const Vec3 nrm = parse_vec3(pj.at("normal")).normalized();
                const auto psi = pj.value("psi", std::vector<double>{0.0, 2.0 * M_PI});
                Patch p;
                p.u0 = 0.0;
                p.u1 = radius;
                p.v0 = psi.at(0);
                p.v1 = psi.at(1);
                p.label = "disc";
                p.eval = [a, b, nrm](double r, double angle) {
                    const Vec3 pos = r * (std::cos(angle) * a + std::sin(angle) * b);
                    return SurfaceSample{pos, nrm, r};
                };
                s.patches.push_back(p);
            } else {
                throw std::invalid_argument("config: unknown patch type '" + type + "'");
            }
        }
        s.area = quad_surface(s, [](const Vec3&, const Vec3&) { return 1.0; },
                              kDefaultQuadOrder);
        s.moment = moment_matrix(s, kDefaultQuadOrder);
        s.circumradius = 0.0;
        return s;
    }
    s = shape_by_name(j.at("name").get<std::string>());
    const double scale = j.value("scale", 1.0);
    Mat3 rot = Mat3::Identity();
    if (j.contains("rotate_axis")) {
        const Vec3 axis = parse_vec3(j["rotate_axis"]).normalized();
        const double angle = j.value("rotate_angle", 0.0);
        rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    }
    if (scale != 1.0 || !rot.isIdentity(0.0))
        s = transform(s, rot, scale, Vec3::Zero());
    return s;
}

RotationField parse_rotation(const json& j) {
    const std::string kind = j.value("kind", "identity");
    if (kind == "identity") return RotationField::identity();
    if (kind == "constant") {
        const Vec3 axis = parse_vec3(j.at("axis")).normalized();
        const double angle = j.at("angle").get<double>();
        // Validated in RotationField::constant (assumption (H4)).
        return RotationField::constant(Eigen::AngleAxisd(angle, axis).toRotationMatrix());
    }
    if (kind == "twist")
        return RotationField::twist(parse_vec3(j.at("axis")),
                                    parse_vec3(j.at("direction")),
                                    j.at("rate").get<double>());
    throw std::invalid_argument("config: unknown rotation kind '" + kind + "'");
}

DensityField parse_density(const json& j) {
    DensityField d;
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") {
        d.base = j.value("value", 1.0);
    } else if (kind == "boxes") {
        d.base = j.value("base", 0.0);
        for (const json& bj : j.at("boxes")) {
            DensityField::Box b;
            b.lo = parse_vec3(bj.at("lo"));
            b.hi = parse_vec3(bj.at("hi"));
            b.value = bj.at("value").get<double>();
            d.boxes.push_back(b);
        }
    } else {
        throw std::invalid_argument("config: unknown density kind '" + kind + "'");
    }
    if (d.base < 0.0 || d.max_value() < 0.0)
        throw std::invalid_argument(
            "assumption (H3) violated: species density must be non-negative");
    return d;
}

SurfaceDensity parse_surface(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "rapini_papoular")
        return SurfaceDensity::rapini_papoular(j.at("strength").get<double>());
    if (kind == "spherical_quadratic")
        return SurfaceDensity::spherical_quadratic(j.at("coefficient").get<double>());
    if (kind == "custom")
        return SurfaceDensity::custom_density(
            custom_density_by_name(j.at("name").get<std::string>()));
    throw std::invalid_argument("config: unknown surface density kind '" + kind + "'");
}

} // namespace

SurfaceDensity::CustomFns custom_density_by_name(const std::string& name) {
    SurfaceDensity::CustomFns fns;
    fns.name = name;
    if (name == "minus_q4") {
        // -|Q|^4: quartic growth, unbounded below, even in nu.
        fns.value = [](const QTensor& q, const Vec3&) {
            const double t = q.norm2();
            return -t * t;
        };
        fns.grad = [](const QTensor& q, const Vec3&) { return -4.0 * q.norm2() * q; };
        fns.bounded_below = false;
        fns.even_in_normal = true;
        return fns;
    }
    if (name == "plus_q4") {
        fns.value = [](const QTensor& q, const Vec3&) {
            const double t = q.norm2();
            return t * t;
        };
        fns.grad = [](const QTensor& q, const Vec3&) { return 4.0 * q.norm2() * q; };
        fns.bounded_below = true;
        fns.even_in_normal = true;
        return fns;
    }
    if (name == "odd_linear") {
        // tr(Q nu nu^T) with a sign that is odd in nu through a fixed vector;
        // used to exercise the inward-normal convention.
        fns.value = [](const QTensor& q, const Vec3& nu) {
            const Vec3 e = Vec3(1.0, 0.5, 0.25).normalized();
            return nu.dot(q.matrix() * e);
        };
        fns.grad = [](const QTensor&, const Vec3& nu) {
            const Vec3 e = Vec3(1.0, 0.5, 0.25).normalized();
            return deviatoric(Mat3(0.5 * (nu * e.transpose() + e * nu.transpose())));
        };
        fns.bounded_below = true; // linear in Q but bounded below is false strictly
        fns.even_in_normal = false;
        return fns;
    }
    throw std::invalid_argument("config: unknown custom surface density '" + name + "'");
}

RunConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text);
    const std::string schema = j.value("schema", "");
    if (schema != "nemhom/1")
        throw std::invalid_argument("config: schema field must be \"nemhom/1\"");

    RunConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t(42));
    cfg.threads = j.value("threads", 0);
    cfg.output_dir = j.value("output_dir", "out");

    if (j.contains("container")) {
        cfg.box_lo = parse_vec3(j["container"].at("lo"));
        cfg.box_hi = parse_vec3(j["container"].at("hi"));
        for (int d = 0; d < 3; ++d)
            if (!(cfg.box_hi[d] > cfg.box_lo[d]))
                throw std::invalid_argument("config: container box is empty");
    }
    if (j.contains("grid")) {
        const json& n = j["grid"].at("n");
        for (int d = 0; d < 3; ++d) {
            cfg.grid_n[d] = n[d].get<int>();
            if (cfg.grid_n[d] < 4)
                throw std::invalid_argument("config: grid resolution must be >= 4 per axis");
        }
    }

    if (j.contains("elastic")) {
        const json& e = j["elastic"];
        try {
            cfg.elastic = ElasticParams(e.at("L1").get<double>(), e.at("L2").get<double>(),
                                        e.at("L3").get<double>());
        } catch (const std::invalid_argument& err) {
            throw std::invalid_argument(
                std::string("assumption (H6) violated (elastic coercivity): ") +
                err.what());
        }
    }
    if (j.contains("bulk")) {
        const json& b = j["bulk"];
        try {
            cfg.bulk = BulkParams(b.at("a").get<double>(), b.at("b").get<double>(),
                                  b.at("c").get<double>());
        } catch (const std::invalid_argument& err) {
            throw std::invalid_argument(
                std::string("assumption (H7) violated (bulk growth): ") + err.what());
        }
    }

    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        const std::string kind = b.value("kind", "constant");
        if (kind == "constant") {
            QTensor q;
            if (b.contains("coefficients")) {
                const json& c = b["coefficients"];
                for (int m = 0; m < 5; ++m) q.c[m] = c[m].get<double>();
            }
            cfg.boundary = BoundaryData::constant(q);
        } else if (kind == "uniaxial") {
            cfg.boundary = BoundaryData::uniaxial(
                b.at("s").get<double>(), parse_vec3(b.at("director")),
                b.contains("wave_vector") ? parse_vec3(b["wave_vector"]) : Vec3::Zero());
        } else {
            throw std::invalid_argument("config: unknown boundary kind '" + kind + "'");
        }
    }

    if (j.contains("species")) {
        for (const json& sj : j["species"]) {
            SpeciesSpec sp;
            sp.shape = parse_shape(sj.at("shape"));
            if (sj.contains("rotation")) sp.rotation = parse_rotation(sj["rotation"]);
            if (sj.contains("density")) sp.density = parse_density(sj["density"]);
            sp.surface = parse_surface(sj.at("surface"));
            cfg.species.push_back(std::move(sp));
        }
    }

    if (j.contains("design")) {
        RunConfig::DesignTarget t;
        t.p = parse_sym(j["design"].at("P"));
        t.w = j["design"].value("W", 1.0);
        t.a = j["design"].value("a", 0.0);
        t.a_prime = j["design"].value("a_prime", 1.0);
        cfg.design = t;
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        cfg.has_sweep = true;
        cfg.sweep.eps_list = s.at("eps").get<std::vector<double>>();
        cfg.sweep.alpha = s.value("alpha", 1.2);
        cfg.sweep.gamma = s.value("gamma", 0.0);
        cfg.sweep.surface_order = s.value("surface_order", 12);
        cfg.sweep.flat_norm_tests = s.value("flat_norm_tests", 33);
        cfg.sweep.grid_n_override = s.value("grid_n", 0);
        cfg.sweep.max_grid_n = s.value("max_grid_n", 96);
        cfg.sweep.seed = cfg.seed;

        if (!(cfg.sweep.alpha > 1.0 && cfg.sweep.alpha < 1.5)) {
            std::ostringstream msg;
            msg << "assumption (H1) violated: the dilute regime requires 1 < alpha < 3/2, "
                   "got alpha="
                << cfg.sweep.alpha;
            throw std::invalid_argument(msg.str());
        }
        if (cfg.sweep.gamma < 0.0)
            throw std::invalid_argument("config: gamma must be >= 0");
        if (cfg.sweep.gamma >= 0.25)
            cfg.warnings.push_back(
                "assumption (K1) violated: 0 < gamma < 1/4 expected; exploratory run");
        if (cfg.sweep.gamma > 0.0) {
            for (const SpeciesSpec& sp : cfg.species)
                if (!sp.surface.bounded_below())
                    throw std::invalid_argument(
                        "assumption (K2) violated: strong-anchoring mode (gamma > 0) "
                        "requires surface densities bounded below (f_s >= 0)");
        }
    }

    if (j.contains("solver")) {
        const json& s = j["solver"];
        const std::string method = s.value("method", "lbfgs");
        if (method == "lbfgs")
            cfg.solver.method = SolveOptions::Method::LBFGS;
        else if (method == "gd")
            cfg.solver.method = SolveOptions::Method::GradientDescent;
        else
            throw std::invalid_argument("config: unknown solver method '" + method + "'");
        cfg.solver.max_iterations = s.value("max_iterations", long(100000));
        cfg.solver.grad_tol = s.value("grad_tol", 1e-8);
        cfg.solver.lbfgs_memory = s.value("lbfgs_memory", 8);
        cfg.init = s.value("init", "harmonic");
        if (cfg.init != "harmonic" && cfg.init != "constant")
            throw std::invalid_argument("config: solver init must be harmonic|constant");
    }
    cfg.hom_order = j.value("hom_order", 16);
    cfg.drop_constant = j.value("drop_constant", false);
    cfg.sweep.solver = cfg.solver;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string design_species_json(const DesignSpec& design, double density) {
    json out = json::array();
    int seen_in_assembly = 0, last_assembly = 0;
    for (const DesignSpec::Component& c : design.components) {
        json sj;
        // Components are catalogue wedges, possibly scaled; encode by name.
        const int k = c.parent_assembly;
        seen_in_assembly = (k == last_assembly) ? seen_in_assembly + 1 : 0;
        last_assembly = k;
        const bool scaled = k <= 3;
        const bool minus = scaled && seen_in_assembly == 1; // second of a +- pair
        int ai, aj;
        if (k == 1 || k == 6) {
            ai = 2; aj = 3;
        } else if (k == 2 || k == 5) {
            ai = 1; aj = 3;
        } else {
            ai = 1; aj = 2;
        }
        std::string name = "wedge";
        name += (minus ? "-" : "+");
        name += std::to_string(ai) + std::to_string(aj);
        sj["shape"]["name"] = name;
        if (scaled) sj["shape"]["scale"] = 1.0 / std::sqrt(2.0);
        sj["rotation"]["kind"] = "identity";
        sj["density"]["kind"] = "constant";
        sj["density"]["value"] = density;
        sj["surface"]["kind"] = "rapini_papoular";
        sj["surface"]["strength"] = design.w * c.intensity;
        out.push_back(sj);
    }
    json sphere;
    sphere["shape"]["name"] = "ball";
    sphere["rotation"]["kind"] = "identity";
    sphere["density"]["kind"] = "constant";
    sphere["density"]["value"] = density;
    sphere["surface"]["kind"] = "spherical_quadratic";
    sphere["surface"]["coefficient"] = design.spherical_coefficient;
    out.push_back(sphere);
    return out.dump(2);
}

std::string design_report_text(const DesignSpec& design) {
    std::ostringstream s;
    s.precision(12);
    s << "design report\n";
    s << "  target W: " << design.w << "\n  target a: " << design.a
      << "\n  target a': " << design.a_prime << "\n";
    s << "  basis coefficients a_k:";
    for (double a : design.basis_coefficients) s << ' ' << a;
    s << "\n  alpha_P (sum_k i_k sigma_k): " << design.alpha_p << "\n";
    s << "  component intensities i_j:";
    for (const auto& c : design.components)
        s << " [assembly " << c.parent_assembly << "] " << c.intensity;
    s << "\n  spherical coefficient (calibrated): " << design.spherical_coefficient
      << "\n";
    s << "  measured tr(Q^2) response of wedge part: " << design.tr_q2_response << "\n";
    s << "  measured constant offset f_hom(0): " << design.constant_offset
      << " (reported, never subtracted silently)\n";
    return s.str();
}

std::string design_report_csv(const DesignSpec& design) {
    std::ostringstream s;
    s.precision(17);
    s << "quantity,index,value\n";
    for (int k = 0; k < 6; ++k)
        s << "a_k," << k + 1 << ',' << design.basis_coefficients[k] << '\n';
    int j = 0;
    for (const auto& c : design.components)
        s << "intensity," << ++j << ',' << c.intensity << '\n';
    s << "alpha_P,," << design.alpha_p << '\n';
    s << "spherical_coefficient,," << design.spherical_coefficient << '\n';
    s << "constant_offset,," << design.constant_offset << '\n';
    s << "tr_q2_response,," << design.tr_q2_response << '\n';
    return s.str();
}

} // namespace nemhom
