#include "ksv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <locale>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "ksv/criticality.hpp"
#include "ksv/dynamics.hpp"
#include "ksv/energy.hpp"
#include "ksv/field.hpp"
#include "ksv/field_io.hpp"
#include "ksv/minimizer.hpp"
#include "ksv/radial.hpp"

namespace ksv {

namespace pt = boost::property_tree;
using Json = nlohmann::ordered_json;

ConfigError::ConfigError(const std::string& field, std::size_t line, const std::string& what)
    : Error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
            (field.empty() ? std::string() : "[" + field + "] ") + what),
      field_(field),
      line_(line) {}

std::vector<double> SweepConfig::points() const {
    if (!values.empty()) return values;
    std::vector<double> out;
    if (count == 1) out.push_back(from);
    for (std::size_t k = 0; count > 1 && k < count; ++k)
        out.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(count - 1));
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"run", {"command", "seed"}},
        {"spec", {"n", "A", "beta", "v"}},
        {"grid", {"L", "N"}},
        {"solver",
         {"tol_fp", "max_iterations", "theta0", "theta_floor", "init", "t_end", "trace_samples", "blow_up_factor",
          "radial_points", "s_min", "s_max"}},
        {"sweep", {"axis", "values", "from", "to", "count"}},
        {"output", {"dir", "dump_fields"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// "section.key" -> 1-based line of its definition.
std::map<std::string, std::size_t> locate_keys(const std::string& text) {
    std::map<std::string, std::size_t> where;
    std::istringstream in(text);
    std::string section;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            where.emplace(section, line_no);
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos) where.emplace(section + "." + trim(t.substr(0, eq)), line_no);
    }
    return where;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::map<std::string, std::size_t> lines) : tree_(tree), lines_(std::move(lines)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        const auto it = lines_.find(path);
        throw ConfigError(path, it == lines_.end() ? 0 : it->second, what);
    }

    std::optional<std::string> raw(const std::string& path) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    std::string text(const std::string& path, const std::string& fallback) const {
        return raw(path).value_or(fallback);
    }

    // Accepts plain decimals and multiples of pi: "pi", "4pi", "4*pi", "-0.5*pi".
    double real_token(const std::string& path, const std::string& token) const {
        std::string t = trim(token);
        double factor = 1.0;
        if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
            factor = std::numbers::pi;
            t = trim(t.substr(0, t.size() - 2));
            if (!t.empty() && t.back() == '*') t = trim(t.substr(0, t.size() - 1));
            if (t.empty() || t == "+") return factor;
            if (t == "-") return -factor;
        }
        std::istringstream in(t);
        in.imbue(std::locale::classic());
        double v = 0.0;
        if (t.empty() || !(in >> v) || !(in >> std::ws).eof()) fail(path, "expected a real number, got '" + token + "'");
        if (!std::isfinite(v)) fail(path, "value must be finite");
        return v * factor;
    }

    double real(const std::string& path, double fallback) const {
        const auto r = raw(path);
        return r ? real_token(path, *r) : fallback;
    }

    std::vector<double> reals(const std::string& path) const {
        std::vector<double> out;
        const auto r = raw(path);
        if (!r || r->empty()) return out;
        std::istringstream in(*r);
        for (std::string token; std::getline(in, token, ',');) out.push_back(real_token(path, token));
        return out;
    }

    std::uint64_t unsigned_integer(const std::string& path, std::uint64_t fallback) const {
        const auto r = raw(path);
        if (!r) return fallback;
        if (r->empty() || r->find_first_not_of("0123456789") != std::string::npos)
            fail(path, "expected a nonnegative integer, got '" + *r + "'");
        try {
            return std::stoull(*r);
        } catch (const std::exception&) {
            fail(path, "integer out of range: '" + *r + "'");
        }
    }

    bool boolean(const std::string& path, bool fallback) const {
        const auto r = raw(path);
        if (!r) return fallback;
        if (*r == "true" || *r == "yes" || *r == "1") return true;
        if (*r == "false" || *r == "no" || *r == "0") return false;
        fail(path, "expected true or false, got '" + *r + "'");
    }

private:
    const pt::ptree& tree_;
    std::map<std::string, std::size_t> lines_;
};

void check_known_keys(const pt::ptree& tree, const Reader& reader) {
    for (const auto& [section, body] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) reader.fail(section, "unknown section");
        if (!body.data().empty()) reader.fail(section, "top-level keys are not allowed");
        for (const auto& [key, value] : body) {
            (void)value;
            if (!it->second.contains(key)) reader.fail(section + "." + key, "unknown key");
        }
    }
}

const std::set<std::string> kCommands{"classify", "minimize", "radial", "evolve", "inequality", "sweep"};

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    pt::ptree tree;
    try {
        std::istringstream parse_in(text);
        pt::ini_parser::read_ini(parse_in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", e.line(), e.message());
    }
    const Reader r(tree, locate_keys(text));
    check_known_keys(tree, r);

    ExperimentConfig c;
    c.command = r.text("run.command", "");
    if (!kCommands.contains(c.command))
        r.fail("run.command", "expected one of classify, minimize, radial, evolve, inequality, sweep; got '" +
                                  c.command + "'");
    c.seed = r.unsigned_integer("run.seed", 0);

    // spec
    const auto n = r.unsigned_integer("spec.n", 0);
    if (n < 1 || n > kMaxClassifySpecies) r.fail("spec.n", "species count must be between 1 and 20");
    c.spec.n = static_cast<std::size_t>(n);
    c.spec.coupling = r.reals("spec.A");
    if (c.spec.coupling.size() != n * n)
        r.fail("spec.A", "expected " + std::to_string(n * n) + " comma-separated entries (row-major), got " +
                             std::to_string(c.spec.coupling.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = c.spec.coupling[i * n + j];
            if (a < 0.0) r.fail("spec.A", "entries must be nonnegative");
            if (a != c.spec.coupling[j * n + i])
                r.fail("spec.A", "matrix is not symmetric: a_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                     " != a_" + std::to_string(j + 1) + std::to_string(i + 1));
        }
    c.spec.beta = r.reals("spec.beta");
    if (c.spec.beta.size() != n) r.fail("spec.beta", "expected " + std::to_string(n) + " masses");
    for (double b : c.spec.beta)
        if (!(b > 0.0)) r.fail("spec.beta", "masses must be positive");
    const auto v = r.reals("spec.v");
    if (v.empty()) {
        c.spec.centers.assign(n, Point{0.0, 0.0});
    } else {
        if (v.size() != 2 * n) r.fail("spec.v", "expected " + std::to_string(2 * n) + " coordinates (x1, y1, x2, ...)");
        for (std::size_t i = 0; i < n; ++i) c.spec.centers.push_back({v[2 * i], v[2 * i + 1]});
    }

    // grid
    c.grid.half_width = r.real("grid.L", c.grid.half_width);
    if (!(c.grid.half_width > 0.0)) r.fail("grid.L", "half width must be positive");
    c.grid.cells_per_side = r.unsigned_integer("grid.N", c.grid.cells_per_side);
    if (c.grid.cells_per_side < 2 || c.grid.cells_per_side % 2 != 0)
        r.fail("grid.N", "cells per side must be even and at least 2");

    // solver
    auto positive = [&](const std::string& key, double fallback) {
        const double x = r.real(key, fallback);
        if (!(x > 0.0)) r.fail(key, "must be positive");
        return x;
    };
    SolverConfig& s = c.solver;
    s.tol_fp = positive("solver.tol_fp", s.tol_fp);
    const auto iters = r.unsigned_integer("solver.max_iterations", static_cast<std::uint64_t>(s.max_iterations));
    if (iters > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) r.fail("solver.max_iterations", "too large");
    s.max_iterations = static_cast<int>(iters);
    s.theta0 = positive("solver.theta0", s.theta0);
    if (s.theta0 > 1.0) r.fail("solver.theta0", "must not exceed 1");
    s.theta_floor = positive("solver.theta_floor", s.theta_floor);
    s.init = r.text("solver.init", s.init);
    if (s.init != "gaussian" && s.init != "random" && s.init != "disk")
        r.fail("solver.init", "expected gaussian, random or disk");
    s.t_end = r.real("solver.t_end", s.t_end);
    if (!(s.t_end >= 0.0)) r.fail("solver.t_end", "must be nonnegative");
    s.trace_samples = r.unsigned_integer("solver.trace_samples", s.trace_samples);
    if (s.trace_samples < 1) r.fail("solver.trace_samples", "must be at least 1");
    s.blow_up_factor = positive("solver.blow_up_factor", s.blow_up_factor);
    s.radial_points = r.unsigned_integer("solver.radial_points", s.radial_points);
    if (s.radial_points < 16) r.fail("solver.radial_points", "must be at least 16");
    s.s_min = r.real("solver.s_min", s.s_min);
    s.s_max = r.real("solver.s_max", s.s_max);
    if (!(s.s_min < s.s_max)) r.fail("solver.s_max", "s_max must exceed s_min");

    // sweep
    c.sweep.axis = r.text("sweep.axis", "");
    c.sweep.values = r.reals("sweep.values");
    c.sweep.from = r.real("sweep.from", c.sweep.from);
    c.sweep.to = r.real("sweep.to", c.sweep.to);
    c.sweep.count = r.unsigned_integer("sweep.count", c.sweep.count);
    if (!c.sweep.axis.empty() && c.sweep.axis != "mass" && c.sweep.axis != "separation" &&
        c.sweep.axis != "approach")
        r.fail("sweep.axis", "expected mass, separation or approach");
    if (c.command == "sweep") {
        if (c.sweep.axis.empty()) r.fail("sweep.axis", "a sweep needs an axis");
        if (c.sweep.points().empty()) r.fail("sweep.values", "a sweep needs values or from/to/count");
        if (c.sweep.axis == "separation" && n != 2) r.fail("sweep.axis", "separation sweeps need n = 2");
        for (double p : c.sweep.points()) {
            if (c.sweep.axis == "mass" && !(p > 0.0)) r.fail("sweep.values", "mass scales must be positive");
            if (c.sweep.axis == "separation" && !(p >= 0.0)) r.fail("sweep.values", "separations must be nonnegative");
            if (c.sweep.axis == "approach" && (p < 1.0 || p != std::floor(p)))
                r.fail("sweep.values", "approach steps m must be positive integers");
        }
    }

    // output
    c.output.dir = r.text("output.dir", c.output.dir);
    if (c.output.dir.empty()) r.fail("output.dir", "must not be empty");
    c.output.dump_fields = r.boolean("output.dump_fields", c.output.dump_fields);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
    return parse_config(in);
}

namespace {

std::string num(double v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::setprecision(17) << v;
    return s.str();
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? ", " : "") + num(xs[k]);
    return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[run]\ncommand = " << c.command << "\nseed = " << c.seed << "\n\n";
    std::vector<double> v;
    for (const Point& p : c.spec.centers) {
        v.push_back(p.x);
        v.push_back(p.y);
    }
    o << "[spec]\nn = " << c.spec.n << "\nA = " << join(c.spec.coupling) << "\nbeta = " << join(c.spec.beta)
      << "\nv = " << join(v) << "\n\n";
    o << "[grid]\nL = " << num(c.grid.half_width) << "\nN = " << c.grid.cells_per_side << "\n\n";
    const SolverConfig& s = c.solver;
    o << "[solver]\ntol_fp = " << num(s.tol_fp) << "\nmax_iterations = " << s.max_iterations
      << "\ntheta0 = " << num(s.theta0) << "\ntheta_floor = " << num(s.theta_floor) << "\ninit = " << s.init
      << "\nt_end = " << num(s.t_end) << "\ntrace_samples = " << s.trace_samples
      << "\nblow_up_factor = " << num(s.blow_up_factor) << "\nradial_points = " << s.radial_points
      << "\ns_min = " << num(s.s_min) << "\ns_max = " << num(s.s_max) << "\n\n";
    o << "[sweep]\n";
    if (!c.sweep.axis.empty()) o << "axis = " << c.sweep.axis << "\n";
    if (!c.sweep.values.empty()) o << "values = " << join(c.sweep.values) << "\n";
    o << "from = " << num(c.sweep.from) << "\nto = " << num(c.sweep.to) << "\ncount = " << c.sweep.count << "\n\n";
    o << "[output]\ndir = " << c.output.dir << "\ndump_fields = " << (c.output.dump_fields ? "true" : "false") << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Running

namespace {

InteractionSpec build_spec(const SpecConfig& s) { return InteractionSpec(s.coupling, s.beta, s.centers); }

Grid2D build_grid(const GridConfig& g) { return Grid2D(g.half_width, g.cells_per_side); }

// Per-species mixture of three Gaussian bumps near v_i; deterministic for a given seed.
DensityField random_mixture(const InteractionSpec& spec, const Grid2D& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    std::uniform_real_distribution<double> width(0.6, 1.4);
    std::uniform_real_distribution<double> weight(0.2, 1.0);
    struct Bump {
        Point c;
        double s;
        double w;
    };
    std::vector<std::vector<Bump>> bumps(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i)
        for (int k = 0; k < 3; ++k) {
            const double dx = offset(rng);
            const double dy = offset(rng);
            const double s = width(rng);
            bumps[i].push_back({spec.centers()[i] + Point{dx, dy}, s, weight(rng)});
        }
    std::vector<double> beta(spec.beta().begin(), spec.beta().end());
    return DensityField::sampled(grid, beta, [&](std::size_t i, Point x) {
        double v = 0.0;
        for (const Bump& b : bumps[i]) v += b.w * std::exp(-norm2(x - b.c) / (2.0 * b.s * b.s)) / (b.s * b.s);
        return v;
    });
}

DensityField initial_field(const ExperimentConfig& c, const InteractionSpec& spec, const Grid2D& grid) {
    if (c.solver.init == "random") return random_mixture(spec, grid, c.seed);
    if (c.solver.init == "disk") {
        std::vector<double> beta(spec.beta().begin(), spec.beta().end());
        return DensityField::sampled(grid, beta, [&](std::size_t i, Point x) {
            return norm2(x - spec.centers()[i]) <= 1.0 ? 1.0 : 0.0;
        });
    }
    return gaussian_tuple(spec, grid);
}

MinimizeOptions minimize_options(const SolverConfig& s) {
    MinimizeOptions o;
    o.tol_fp = s.tol_fp;
    o.max_iterations = s.max_iterations;
    o.theta0 = s.theta0;
    o.theta_floor = s.theta_floor;
    return o;
}

Json point_json(Point p) { return Json::array({p.x, p.y}); }

Json subset_json(SubsetMask mask) {
    Json out = Json::array();
    for (std::size_t i = 0; i < 32; ++i)
        if (mask & (SubsetMask{1} << i)) out.push_back(i + 1);
    return out;
}

Json energy_json(const EnergyBreakdown& e) {
    return Json{{"total", e.total},
                {"entropy_terms", e.entropy_terms},
                {"interaction_term", e.interaction_term},
                {"confinement_terms", e.confinement_terms},
                {"alpha", e.alpha}};
}

Json null_if_infinite(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

class Csv {
public:
    Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        out_.imbue(std::locale::classic());
        out_ << std::setprecision(17);
        for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
        out_ << "\n";
    }
    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cells, first = false), ...);
        out_ << "\n";
    }
    Csv& cell(double v, bool first = false) {
        out_ << (first ? "" : ",") << v;
        return *this;
    }
    Csv& cell(const std::string& v, bool first = false) {
        out_ << (first ? "" : ",") << v;
        return *this;
    }
    void end() { out_ << "\n"; }

private:
    std::ofstream out_;
};

std::vector<std::string> trace_header(const std::string& first, std::size_t n) {
    std::vector<std::string> h{first, "F_v", "entropy_total"};
    for (std::size_t i = 0; i < n; ++i) h.push_back("second_moment_" + std::to_string(i + 1));
    h.push_back("residual");
    h.push_back("max_density");
    return h;
}

void write_minimize_trace(const std::filesystem::path& path, const MinimizeReport& report, std::size_t n) {
    auto header = trace_header("iter", n);
    header.push_back("theta");
    Csv csv(path, header);
    for (const auto& d : report.diagnostics) {
        csv.cell(static_cast<double>(d.iteration), true).cell(d.energy).cell(d.entropy);
        for (double m : d.second_moments) csv.cell(m);
        csv.cell(d.residual).cell(d.max_density).cell(d.theta).end();
    }
}

Json minimize_json(const MinimizeReport& report, const InteractionSpec& spec, const Grid2D& grid,
                   double initial_energy) {
    const auto thresholds = concentration_thresholds(spec, grid);
    Json second_moments = Json::array();
    double max_density = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        second_moments.push_back(second_moment(report.final_field, i, report.final_field.centroid(i)));
        max_density = std::max(max_density, report.final_field.max_density(i));
    }
    return Json{{"verdict", std::string(to_string(report.verdict))},
                {"iterations", report.iterations},
                {"initial_energy", initial_energy},
                {"final_energy", energy_json(report.final_energy)},
                {"final_residual", report.final_residual},
                {"second_moments", second_moments},
                {"max_density", max_density},
                {"thresholds", {{"second_moment", thresholds.second_moment}, {"max_density", thresholds.max_density}}}};
}

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::Minimizer: return kExitOk;
        case Verdict::Concentration: return kExitSignal;
        case Verdict::BudgetExhausted: return kExitConvergence;
    }
    return kExitConvergence;
}

struct Context {
    const ExperimentConfig& config;
    std::filesystem::path dir;
    Json& result;

    void dump(const DensityField& field, const std::string& stem) const {
        if (!config.output.dump_fields) return;
        const auto files = write_field_dump(field, dir / "fields", stem);
        Json& list = result["field_dumps"];
        for (const auto& f : files) list.push_back(std::filesystem::relative(f, dir).generic_string());
    }
};

int run_classify(const Context& ctx, const InteractionSpec& spec) {
    const auto verdict = classify(spec);
    Json table = Json::array();
    Csv csv(ctx.dir / "lambda.csv", {"subset", "lambda"});
    for (const auto& [mask, value] : verdict.lambda_table) {
        table.push_back({{"subset", subset_json(mask)}, {"lambda", value}});
        std::string name;
        for (const auto& i : subset_json(mask)) name += (name.empty() ? "" : " ") + std::to_string(i.get<int>());
        csv.row(name, value);
    }
    Json witnesses = Json::array();
    for (auto w : verdict.witnesses) witnesses.push_back(subset_json(w));
    const auto var = drift_variance(spec.centers());
    const auto wmin = weighted_drift_min(spec);
    ctx.result["result"] = Json{{"class", std::string(to_string(verdict.kind))},
                                {"lambda_table", table},
                                {"witnesses", witnesses},
                                {"saturation_tolerance", saturation_tolerance(spec)},
                                {"critical_mass_scale", null_if_infinite(critical_mass_scale(spec))},
                                {"drift_variance", {{"value", var.value}, {"minimizer", point_json(var.minimizer)}}},
                                {"weighted_drift_min", {{"value", wmin.value}, {"minimizer", point_json(wmin.minimizer)}}}};
    return kExitOk;
}

int run_minimize(const Context& ctx, const InteractionSpec& spec, const Grid2D& grid) {
    const DensityField init = initial_field(ctx.config, spec, grid);
    ctx.dump(init, "initial");
    const double f_init = free_energy(spec, init).total;
    const auto report = minimize(spec, init, minimize_options(ctx.config.solver));
    write_minimize_trace(ctx.dir / "trace.csv", report, spec.size());
    ctx.dump(report.final_field, "final");
    ctx.result["result"] = minimize_json(report, spec, grid, f_init);
    return verdict_exit(report.verdict);
}

int run_radial(const Context& ctx, const InteractionSpec& spec) {
    RadialOptions opt;
    opt.points = ctx.config.solver.radial_points;
    opt.s_min = ctx.config.solver.s_min;
    opt.s_max = ctx.config.solver.s_max;
    const RadialProfile prof = solve_radial(spec, opt);
    const std::size_t n = spec.size();
    std::vector<std::string> header{"s", "r"};
    for (std::size_t i = 0; i < n; ++i) header.push_back("w_" + std::to_string(i + 1));
    for (std::size_t i = 0; i < n; ++i) header.push_back("density_" + std::to_string(i + 1));
    Csv csv(ctx.dir / "radial.csv", header);
    for (std::size_t k = 0; k < prof.points; ++k) {
        const double s = prof.s(k);
        const double r = std::exp(s);
        csv.cell(s, true).cell(r);
        for (std::size_t i = 0; i < n; ++i) csv.cell(prof.mass(i)[k]);
        for (std::size_t i = 0; i < n; ++i) csv.cell(prof.mass_slope(i)[k] / (2.0 * std::numbers::pi * r * r));
        csv.end();
    }
    const auto balance = mass_balance(prof, spec);
    Json captured = Json::array();
    for (std::size_t i = 0; i < n; ++i) captured.push_back(prof.mass(i).back());
    ctx.result["result"] = Json{{"newton_iterations", prof.newton_iterations},
                                {"log_center_density", prof.log_center_density},
                                {"terminal_mass", captured},
                                {"ode_residual", ode_residual(prof, spec)},
                                {"mass_balance", {{"lhs", balance.lhs}, {"rhs", balance.rhs}}},
                                {"asymptotics", asymptotics_check(prof, spec)}};
    return kExitOk;
}

int run_evolve(const Context& ctx, const InteractionSpec& spec, const Grid2D& grid) {
    const DensityField init = initial_field(ctx.config, spec, grid);
    ctx.dump(init, "initial");
    const std::size_t n = spec.size();
    auto header = trace_header("time", n);
    header.push_back("dissipation");
    Csv csv(ctx.dir / "trace.csv", header);
    EvolveOptions opt;
    opt.trace_samples = ctx.config.solver.trace_samples;
    opt.blow_up_factor = ctx.config.solver.blow_up_factor;
    opt.on_sample = [&](const DensityField& f, const DissipationSample& s) {
        double ent = 0.0;
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ent += entropy(f, i);
            peak = std::max(peak, f.max_density(i));
        }
        csv.cell(s.time, true).cell(s.energy).cell(ent);
        for (std::size_t i = 0; i < n; ++i) csv.cell(second_moment(f, i, f.centroid(i)));
        double res = std::numeric_limits<double>::quiet_NaN();
        try {
            res = residual(spec, f);
        } catch (const ConcentrationSignal&) {
        }
        csv.cell(res).cell(peak).cell(s.dissipation).end();
    };
    const auto out = evolve(spec, init, ctx.config.solver.t_end, opt);
    ctx.dump(out.state.field, "final");
    const auto& trace = out.state.dissipation_trace;
    double worst_increase = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k)
        worst_increase = std::max(worst_increase, trace[k].energy - trace[k - 1].energy);
    ctx.result["result"] = Json{{"outcome", out.outcome == EvolveOutcome::Completed ? "completed" : "blow-up"},
                                {"steps", out.steps},
                                {"final_time", out.state.time},
                                {"last_dt", out.state.dt},
                                {"initial_energy", trace.front().energy},
                                {"final_energy", trace.back().energy},
                                {"largest_energy_increase", worst_increase},
                                {"max_density", out.max_density}};
    if (out.outcome == EvolveOutcome::BlowUp) return kExitSignal;
    ctx.result["result"]["initial_residual"] = residual(spec, init);
    ctx.result["result"]["final_residual"] = residual(spec, out.state.field);
    return kExitOk;
}

int run_inequality(const Context& ctx, const InteractionSpec& spec, const Grid2D& grid) {
    const auto opt = minimize_options(ctx.config.solver);
    const InteractionSpec centered = spec.centered();
    const DensityField init_v = initial_field(ctx.config, spec, grid);
    const DensityField init_0 = initial_field(ctx.config, centered, grid);
    const auto rep_v = minimize(spec, init_v, opt);
    const auto rep_0 = minimize(centered, init_0, opt);
    write_minimize_trace(ctx.dir / "trace.csv", rep_v, spec.size());
    write_minimize_trace(ctx.dir / "trace_f0.csv", rep_0, spec.size());
    ctx.dump(rep_v.final_field, "final_v");
    ctx.dump(rep_0.final_field, "final_0");
    const auto wmin = weighted_drift_min(spec);
    ctx.result["result"] = Json{{"F_v", minimize_json(rep_v, spec, grid, free_energy(spec, init_v).total)},
                                {"F_0", minimize_json(rep_0, centered, grid, free_energy(centered, init_0).total)},
                                {"weighted_drift_min", wmin.value},
                                {"upper_bound", rep_0.final_energy.total + wmin.value},
                                {"gap", inequality_gap(spec, rep_v.final_energy.total, rep_0.final_energy.total)}};
    return kExitOk;
}

int run_sweep(const Context& ctx, const InteractionSpec& base, const Grid2D& grid) {
    const auto& sw = ctx.config.sweep;
    const std::size_t n = base.size();
    std::vector<std::string> header{"index", "parameter", "class", "verdict"};
    for (auto h : trace_header("iterations", n)) header.push_back(h);
    Csv csv(ctx.dir / "sweep.csv", header);
    Json points = Json::array();
    std::size_t index = 0;
    for (double p : sw.points()) {
        std::vector<double> beta(base.beta().begin(), base.beta().end());
        std::vector<Point> centers(base.centers().begin(), base.centers().end());
        if (sw.axis == "mass") {
            for (double& b : beta) b *= p;
        } else if (sw.axis == "approach") {
            for (double& b : beta) b *= 1.0 - std::ldexp(1.0, -static_cast<int>(p));
        } else {
            centers = {{-0.5 * p, 0.0}, {0.5 * p, 0.0}};
        }
        const InteractionSpec spec(std::vector<double>(base.coupling().begin(), base.coupling().end()), beta, centers);
        const auto kind = classify(spec).kind;
        Json entry{{"index", index}, {"parameter", p}, {"class", std::string(to_string(kind))}};
        csv.cell(static_cast<double>(index), true).cell(p).cell(std::string(to_string(kind)));
        if (kind == CriticalityClass::SubCritical || kind == CriticalityClass::Critical) {
            const DensityField init = initial_field(ctx.config, spec, grid);
            std::string verdict;
            try {
                const auto rep = minimize(spec, init, minimize_options(ctx.config.solver));
                const auto& d = rep.diagnostics.back();
                verdict = std::string(to_string(rep.verdict));
                csv.cell(verdict).cell(static_cast<double>(rep.iterations)).cell(rep.final_energy.total).cell(d.entropy);
                for (double m : d.second_moments) csv.cell(m);
                csv.cell(rep.final_residual).cell(d.max_density).end();
                entry["minimize"] = minimize_json(rep, spec, grid, free_energy(spec, init).total);
                ctx.dump(rep.final_field, "point" + std::to_string(index));
            } catch (const ConcentrationSignal& e) {
                // Exponent overflow ends the run before any diagnostics are recorded.
                verdict = "concentration";
                entry["minimize"] = Json{{"verdict", verdict}, {"message", e.what()}};
                csv.cell(verdict).cell(0.0);
                for (std::size_t k = 0; k < n + 4; ++k) csv.cell(std::numeric_limits<double>::quiet_NaN());
                csv.end();
            }
        } else {
            csv.cell(std::string("skipped")).cell(0.0);
            for (std::size_t k = 0; k < n + 4; ++k) csv.cell(std::numeric_limits<double>::quiet_NaN());
            csv.end();
        }
        points.push_back(std::move(entry));
        ++index;
    }
    ctx.result["result"] = Json{{"axis", sw.axis}, {"points", points}};
    return kExitOk;
}

}  // namespace

RunOutcome run(const ExperimentConfig& config) {
    RunOutcome outcome;
    const std::filesystem::path dir(config.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return {kExitConfig, "config-error", "cannot create output directory " + dir.string(), {}};

    Json doc;
    doc["command"] = config.command;
    doc["seed"] = config.seed;
    Json centers = Json::array();
    for (const Point& p : config.spec.centers) centers.push_back(point_json(p));
    doc["spec"] = Json{{"n", config.spec.n}, {"A", config.spec.coupling}, {"beta", config.spec.beta}, {"v", centers}};
    doc["grid"] = Json{{"L", config.grid.half_width},
                       {"N", config.grid.cells_per_side},
                       {"h", 2.0 * config.grid.half_width / static_cast<double>(config.grid.cells_per_side)}};
    doc["status"] = Json::object();
    doc["result"] = Json::object();

    const Context ctx{config, dir, doc};
    try {
        const InteractionSpec spec = build_spec(config.spec);
        const Grid2D grid = build_grid(config.grid);
        int code = kExitOk;
        if (config.command == "classify") code = run_classify(ctx, spec);
        else if (config.command == "minimize") code = run_minimize(ctx, spec, grid);
        else if (config.command == "radial") code = run_radial(ctx, spec);
        else if (config.command == "evolve") code = run_evolve(ctx, spec, grid);
        else if (config.command == "inequality") code = run_inequality(ctx, spec, grid);
        else if (config.command == "sweep") code = run_sweep(ctx, spec, grid);
        else throw ConfigError("run.command", 0, "unknown command '" + config.command + "'");
        outcome.exit_code = code;
        outcome.classification = code == kExitOk ? "ok" : code == kExitSignal ? "concentration" : "convergence-failure";
        if (config.command == "evolve" && code == kExitSignal) outcome.classification = "blow-up";
    } catch (const ConfigError& e) {
        outcome = {kExitConfig, "config-error", e.what(), {}};
    } catch (const DomainError& e) {
        outcome = {kExitConfig, "domain-error", e.what(), {}};
    } catch (const ConvergenceError& e) {
        outcome = {kExitConvergence, "convergence-failure", e.what(), {}};
        doc["result"]["best_residual"] = e.best_residual();
    } catch (const ConcentrationSignal& e) {
        outcome = {kExitSignal, "concentration", e.what(), {}};
    } catch (const std::exception& e) {
        outcome = {kExitConvergence, "runtime-error", e.what(), {}};
    }

    doc["status"] = Json{{"exit_code", outcome.exit_code}, {"classification", outcome.classification}};
    if (!outcome.message.empty()) doc["status"]["message"] = outcome.message;
    outcome.result_path = dir / "result.json";
    std::ofstream out(outcome.result_path);
    out << doc.dump(2) << "\n";
    if (!out) {
        outcome.exit_code = kExitConfig;
        outcome.classification = "config-error";
        outcome.message = "cannot write " + outcome.result_path.string();
    }
    return outcome;
}

}  // namespace ksv
