#include "trapwave/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "trapwave/billiards.hpp"
#include "trapwave/morawetz.hpp"
#include "trapwave/profiles.hpp"

namespace trapwave {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180;

json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

//! Collects files and checks while an experiment runs.
class Artifacts {
  public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& payload)
    {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << payload;
        files_.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void check(const std::string& name, bool pass, const std::string& detail)
    {
        checks_.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        pass_ = pass_ && pass;
    }

    const json& checks() const { return checks_; }
    const std::vector<std::string>& files() const { return files_; }
    bool pass() const { return pass_; }

  private:
    fs::path dir_;
    std::vector<std::string> files_;
    json checks_ = json::array();
    bool pass_ = true;
};

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

bool strictly_decreasing(const std::vector<double>& xs)
{
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] < xs[i - 1])) return false;
    return true;
}

//! Default focal offset: half the distance between the body centres.
double default_c1(const Scene& scene)
{
    if (scene.size() != 2) return 1;
    return 0.5 * (scene.bodies()[1].center() - scene.bodies()[0].center()).norm();
}

Scene require_pair(const Config& c)
{
    Scene s = c.scene();
    if (s.size() != 2) c.fail("body2", "this experiment needs two obstacles (body1 and body2)");
    return s;
}

//! Grid keys shared by the solver experiments.
GridSpec grid_spec(const Config& c, const std::string& h_key = "h")
{
    GridSpec g;
    g.h = c.number_in(h_key, 0.1, 1e-4, 10);
    const double L = c.number_in("L", 6, 1e-3, 1e4);
    g.half_width = c.vec3("half_width", Vec3::Constant(L));
    g.center = c.vec3("grid_center", Vec3::Zero());
    if (!(g.half_width.minCoeff() > 0)) c.fail("half_width", "all components must be positive");
    return g;
}

GaussianProfile profile(const Config& c)
{
    GaussianProfile p;
    p.sigma = c.number_in("sigma", 0.5, 1e-6, 1e6);
    p.a0 = c.number("a0", 1);
    p.a1 = c.number("a1", 0);
    return p;
}

Nonlinearity nonlinearity(const Config& c, const std::string& fallback)
{
    return c.choice("nonlinearity", fallback, {"linear", "quintic"}) == "linear" ? Nonlinearity::linear
                                                                                  : Nonlinearity::quintic;
}

// Every experiment resolves its keys first and returns the work as a closure.
using Job = std::function<json(Artifacts&)>;

Job plan_trace(const Config& c)
{
    const Scene scene = c.scene();
    const Vec3 origin = c.vec3("origin");
    const Vec3 dir = c.vec3("direction");
    if (!(dir.norm() > 0)) c.fail("direction", "must be non-zero");
    const double horizon = c.number_in("horizon", 100, 0, 1e9);
    const double R = c.number_in("escape_radius", 10, 0, 1e9);
    TraceOptions opts;
    opts.stop_on_grazing = c.flag("stop_on_grazing", true);
    opts.max_bounces = static_cast<std::size_t>(c.integer("max_bounces", 1'000'000, 1, 1'000'000'000));
    return [=](Artifacts& a) {
        const Trajectory traj = trace(scene, Ray(origin, dir.normalized()), horizon, R, opts);
        std::ostringstream csv;
        write_trajectory_csv(csv, traj);
        a.write("trajectory.csv", csv.str());
        json j = {{"terminal", to_string(traj.terminal)},
                  {"bounces", traj.bounces()},
                  {"total_time", traj.total_time()},
                  {"escape_time", std::isfinite(traj.escape_time) ? json(traj.escape_time) : json(nullptr)},
                  {"story", traj.story}};
        return j;
    };
}

Job plan_trap_report(const Config& c)
{
    const Scene scene = c.scene();
    const Vec3 mid = scene.trapped() ? Vec3(0.5 * (scene.trapped()->p + scene.trapped()->q)) : Vec3::Zero();
    const Vec3 x0 = c.vec3("x0", mid);
    const double R = c.number_in("escape_radius", 10, 0, 1e9);
    const std::vector<double> horizons = c.list("horizons", {10, 40, 160});
    const auto samples = static_cast<std::size_t>(c.integer("samples", 100000, 1, 1'000'000'000));
    const double final_bound = c.number_in("final_fraction_bound", 1e-3, 0, 1);
    const double axis_tol = c.number_in("axis_tolerance_deg", 5, 0, 180);
    const std::uint64_t seed = c.seed(1);
    for (double T : horizons)
        if (!(T > 0)) c.fail("horizons", "horizons must be positive");
    return [=](Artifacts& a) {
        const auto reports = trapping_report(scene, x0, R, horizons, samples, seed);
        const Vec3 axis = scene.trapped() ? Vec3((scene.trapped()->q - scene.trapped()->p).normalized()) : Vec3::UnitX();
        json per = json::array();
        std::vector<double> fractions;
        double worst_axis = 0;
        // Survivors of the longest horizon that still has any must hug the trapped axis.
        const TrappingReport* axis_report = &reports.front();
        for (const auto& r : reports)
            if (!r.clusters.empty()) axis_report = &r;
        for (const auto& r : reports) {
            json clusters = json::array();
            for (const auto& cl : r.clusters) {
                const double off = std::min(angle_between(cl.center, axis), angle_between(cl.center, Vec3(-axis))) / kDeg;
                if (&r == axis_report) worst_axis = std::max(worst_axis, off);
                clusters.push_back({{"center", to_json(cl.center)},
                                    {"count", cl.count},
                                    {"spread_deg", cl.spread / kDeg},
                                    {"axis_angle_deg", off}});
            }
            per.push_back({{"horizon", r.horizon},
                           {"trapped", r.trapped},
                           {"trapped_fraction", r.trapped_fraction},
                           {"ci_low", r.ci_low},
                           {"ci_high", r.ci_high},
                           {"clusters", clusters}});
            fractions.push_back(r.trapped_fraction);
        }
        bool monotone = true;
        for (std::size_t i = 1; i < fractions.size(); ++i) monotone = monotone && fractions[i] <= fractions[i - 1];
        a.check("trapped fraction non-increasing", monotone, "");
        a.check("final trapped fraction", fractions.back() <= final_bound,
                fmt(fractions.back()) + " <= " + fmt(final_bound));
        if (scene.size() == 2)
            a.check("survivors near trapped axis", worst_axis <= axis_tol,
                    "T = " + fmt(axis_report->horizon) + ": " + fmt(worst_axis) + " deg <= " + fmt(axis_tol));
        json j = {{"x0", to_json(x0)}, {"escape_radius", R}, {"samples", samples}, {"seed", seed}, {"horizons", per}};
        a.write_json("trapping_report.json", j);
        return json{{"trapped_fraction_final", fractions.back()}};
    };
}

Job plan_reconcentrate(const Config& c)
{
    const Scene scene = c.scene();
    const Vec3 x = c.vec3("x");
    const Vec3 x0 = c.vec3("x0");
    const double t = c.number_in("t", 5, 0, 1e6);
    const std::vector<double> eps = c.list("eps", {0.1, 0.01});
    ProbeOptions opts;
    opts.angular_resolution = c.number_in("angular_resolution", 0.05, 1e-4, 1);
    opts.azimuths = static_cast<int>(c.integer("azimuths", 16, 4, 1024));
    const double factor = c.number_in("shrink_factor", 5, 0, 1e9);
    for (double e : eps)
        if (!(e > 0)) c.fail("eps", "radii must be positive");
    return [=](Artifacts& a) {
        json per = json::array();
        std::vector<double> measures;
        for (double e : eps) {
            const ProbeResult r = reconcentration_probe(scene, x, x0, t, e, opts);
            json caps = json::array();
            for (const auto& cap : r.caps)
                caps.push_back({{"center", to_json(cap.center)}, {"radius", cap.radius}, {"measure", cap.measure}, {"miss", cap.miss}});
            per.push_back({{"eps", e}, {"total_measure", r.total_measure}, {"caps", caps}});
            measures.push_back(r.total_measure);
        }
        for (std::size_t i = 1; i < eps.size(); ++i) {
            if (std::abs(eps[i - 1] / eps[i] - 10) > 1e-9) continue;
            const bool ok = measures[i - 1] == 0 ? measures[i] == 0 : measures[i] * factor <= measures[i - 1];
            a.check("cap measure shrinks at eps " + fmt(eps[i]), ok, fmt(measures[i - 1]) + " -> " + fmt(measures[i]));
        }
        a.write_json("probe.json", {{"x", to_json(x)}, {"x0", to_json(x0)}, {"t", t}, {"probes", per}});
        return json{{"total_measure_last", measures.back()}};
    };
}

Job plan_certify_weight(const Config& c)
{
    const Scene scene = require_pair(c);
    const double c1 = c.number_in("c1", default_c1(scene), 0, 1e9);
    const auto samples = static_cast<std::size_t>(c.integer("samples", 100000, 16, 1'000'000'000));
    const std::uint64_t seed = c.seed(1);
    return [=](Artifacts& a) {
        const WeightCertificate cert = boundary_certificate(scene, weight_for(scene, c1), samples);
        a.check("boundary flux sign", cert.pass, "min_flux " + fmt(cert.min_flux) + " >= -" + fmt(kCertificateTolerance));
        a.write_json("certificate.json", {{"c1", cert.c1},
                                          {"samples", cert.samples},
                                          {"min_flux", cert.min_flux},
                                          {"argmin", to_json(cert.argmin)},
                                          {"argmin_obstacle", cert.argmin_obstacle},
                                          {"status", cert.pass ? "pass" : "fail"},
                                          {"seed", seed}});
        return json{{"min_flux", cert.min_flux}, {"c1", c1}};
    };
}

Job plan_minimal_c1(const Config& c)
{
    const Scene scene = require_pair(c);
    const double tol = c.number_in("tol", 1e-3, 1e-12, 1e3);
    const auto samples = static_cast<std::size_t>(c.integer("samples", 20000, 16, 1'000'000'000));
    return [=](Artifacts& a) {
        const MinimalC1 m = minimal_c1(scene, tol, samples);
        json probes = json::array();
        for (const auto& [c1, pass] : m.probes) probes.push_back({{"c1", c1}, {"pass", pass}});
        a.check("pass status monotone on probes", m.monotone, "");
        a.write_json("minimal_c1.json", {{"c1", m.c1},
                                         {"tolerance", m.tolerance},
                                         {"monotone", m.monotone},
                                         {"evaluations", m.evaluations},
                                         {"half_gap", 0.5 * scene.gap()},
                                         {"probes", probes}});
        return json{{"minimal_c1", m.c1}};
    };
}

Job plan_m_alpha(const Config& c)
{
    const Scene scene = require_pair(c);
    const double c1 = c.number_in("c1", default_c1(scene), 0, 1e9);
    const double A = c.number_in("A", 3, 0, 1e9);
    const std::vector<double> alphas = c.list("alphas", {0.1, 0.01, 0.001});
    const auto samples = static_cast<std::size_t>(c.integer("samples", 1000000, 1, 1'000'000'000));
    const int grid = static_cast<int>(c.integer("coercivity_grid", 24, 0, 1000));
    const double final_ratio = c.number_in("final_ratio_bound", 0.1, 0, 1);
    const std::uint64_t seed = c.seed(1);
    for (double al : alphas)
        if (!(al > 0 && al < 1)) c.fail("alphas", "alpha must lie in (0, 1)");
    return [=](Artifacts& a) {
        const MorawetzWeight w = weight_for(scene, c1);
        json rows = json::array();
        std::vector<double> values;
        for (double al : alphas) {
            const VolumeEstimate v = m_alpha(scene, w, A, al, samples, seed);
            json row = {{"alpha", al}, {"volume", v.value}, {"stderr", v.stderr_}};
            if (grid > 0) {
                const CoercivitySweep sw = coercivity_sweep(scene, w, A, al, grid);
                row["min_eigenvalue"] = sw.min_eigenvalue;
                row["min_eigenvalue_over_alpha"] = sw.min_eigenvalue / al;
            }
            rows.push_back(row);
            values.push_back(v.value);
        }
        a.check("m(alpha) strictly decreasing", strictly_decreasing(values), "");
        a.check("final m(alpha) below bound", values.back() < final_ratio * values.front(),
                fmt(values.back()) + " < " + fmt(final_ratio) + " * " + fmt(values.front()));
        a.write_json("m_alpha.json", {{"c1", c1}, {"A", A}, {"samples", samples}, {"seed", seed}, {"rows", rows}});
        return json{{"m_alpha_last", values.back()}};
    };
}

struct SolveSetup {
    Scene scene;
    GridSpec spec;
    GaussianProfile base;
    ScaleCore core;
    Nonlinearity nl = Nonlinearity::quintic;
    double cfl = 0.5;
    double duration = 0;
    int every = 5;
    double local_radius = 1;
    std::optional<double> c1;
};

SolveSetup solve_setup(const Config& c, const std::string& nl_default)
{
    SolveSetup s;
    s.scene = c.scene();
    s.spec = grid_spec(c);
    s.base = profile(c);
    s.core.lambda = c.number_in("lambda", 1, 1e-9, 1e9);
    s.core.x = c.vec3("profile_center", Vec3(0, 0, 0));
    s.core.t = c.number("profile_time", 0);
    s.nl = nonlinearity(c, nl_default);
    s.cfl = c.number_in("cfl", 0.5, 1e-6, kMaxCfl);
    s.duration = c.number_in("duration", 1, 0, 1e6);
    s.every = static_cast<int>(c.integer("every", 5, 1, 1'000'000));
    s.local_radius = c.number_in("local_radius", std::max(1.0, s.scene.bounding_radius()), 1e-9, 1e9);
    if (c.has("c1")) s.c1 = c.number_in("c1", 0, 0, 1e9);
    return s;
}

struct SolveRun {
    DiagnosticsSeries series;
    std::size_t steps = 0;
    double dt = 0;
    double removed = 0;
};

SolveRun run_solve(const SolveSetup& s, const GridSpec& spec)
{
    auto grid = std::make_shared<const ExteriorGrid>(s.scene, spec);
    ProfileData data = make_profile_data(s.base, s.core, grid, s.nl);
    DiagnosticsOptions opts;
    opts.every = s.every;
    opts.local_radius = s.local_radius;
    if (s.c1) opts.weight = weight_for(s.scene, *s.c1);
    DiagnosticsRecorder rec(grid, opts);
    SolveRun out;
    out.removed = data.removed_fraction;
    const double dt_max = stable_dt(*grid, s.cfl);
    out.steps = static_cast<std::size_t>(std::ceil(s.duration / dt_max));
    out.dt = out.steps ? s.duration / static_cast<double>(out.steps) : 0;
    if (out.steps) evolve(data.field, out.dt, out.steps, &rec);
    else rec.record(data.field);
    out.series = rec.series();
    return out;
}

Job plan_solve(const Config& c)
{
    const SolveSetup s = solve_setup(c, "quintic");
    const double drift_bound = c.number_in("drift_bound", 0.01, 0, 1e9);
    return [=](Artifacts& a) {
        const SolveRun r = run_solve(s, s.spec);
        std::ostringstream csv;
        r.series.write_csv(csv);
        a.write("diagnostics.csv", csv.str());
        const auto& recs = r.series.records;
        const double e0 = recs.front().energy.total;
        double drift = 0, max_flux = 0, max_l6 = 0, max_local = 0;
        for (const auto& rec : recs) {
            drift = std::max(drift, e0 > 0 ? std::abs(rec.energy.total - e0) / e0 : 0.0);
            max_flux = std::max(max_flux, rec.flux);
            max_l6 = std::max(max_l6, rec.l6);
            max_local = std::max(max_local, rec.local_energy);
        }
        json j = {{"steps", r.steps},
                  {"dt", r.dt},
                  {"records", recs.size()},
                  {"energy_initial", e0},
                  {"energy_final", recs.back().energy.total},
                  {"energy_drift", drift},
                  {"max_flux", max_flux},
                  {"max_l6", max_l6},
                  {"max_local_energy", max_local},
                  {"flux_avg_final", recs.back().flux_avg},
                  {"strichartz_acc", recs.back().strichartz_acc},
                  {"collar_removed_fraction", r.removed}};
        if (s.c1 && recs.size() >= 2) {
            const MorawetzResidual m = morawetz_residual(r.series, recs.front().t, recs.back().t);
            j["morawetz_mismatch"] = m.mismatch;
        }
        a.check("energy drift", drift < drift_bound, fmt(drift) + " < " + fmt(drift_bound));
        a.write_json("solve.json", j);
        return j;
    };
}

Job plan_morawetz_check(const Config& c)
{
    SolveSetup s = solve_setup(c, "quintic");
    if (!s.c1) c.fail("c1", "required key missing");
    const auto levels = static_cast<int>(c.integer("levels", 2, 2, 4));
    const double tol = c.number_in("mismatch_bound", 0.05, 0, 1);
    const double ratio_bound = c.number_in("ratio_bound", 0.6, 0, 1e9);
    return [=](Artifacts& a) {
        json runs = json::array();
        std::vector<double> mismatch;
        GridSpec spec = s.spec;
        for (int l = 0; l < levels; ++l) {
            const SolveRun r = run_solve(s, spec);
            const auto& recs = r.series.records;
            const MorawetzResidual m = morawetz_residual(r.series, recs.front().t, recs.back().t);
            runs.push_back({{"h", spec.h}, {"steps", r.steps}, {"lhs", m.lhs}, {"rhs", m.rhs}, {"mismatch", m.mismatch}});
            mismatch.push_back(m.mismatch);
            spec.h /= 2;
        }
        a.check("mismatch at coarsest h", mismatch.front() < tol, fmt(mismatch.front()) + " < " + fmt(tol));
        for (std::size_t i = 1; i < mismatch.size(); ++i) {
            const double ratio = mismatch[i] / mismatch[i - 1];
            a.check("refinement ratio " + std::to_string(i), ratio <= ratio_bound, fmt(ratio) + " <= " + fmt(ratio_bound));
        }
        a.write_json("morawetz_check.json", {{"c1", *s.c1}, {"runs", runs}});
        return json{{"mismatch", mismatch}};
    };
}

Job plan_compare_free(const Config& c)
{
    const Scene scene = c.scene();
    const GridSpec spec = grid_spec(c);
    const GaussianProfile base = profile(c);
    const std::string sequence = c.choice("sequence", "translation", {"translation", "dilation"});
    std::vector<ScaleCore> cores;
    std::vector<double> horizons;
    if (sequence == "translation") {
        const Vec3 dir = c.vec3("direction", Vec3(1, 0, 0));
        if (!(dir.norm() > 0)) c.fail("direction", "must be non-zero");
        const double lambda = c.number_in("lambda", 1, 1e-9, 1e9);
        const std::vector<double> dist = c.list("distances", {6, 12, 24});
        const double margin = c.number_in("horizon_margin", 2, 0, 1e9);
        int n = 0;
        for (double d : dist) {
            cores.push_back({n++, lambda, 0, d * dir.normalized()});
            horizons.push_back(d + scene.bounding_radius() + lambda * base.support_radius() + margin);
        }
    } else {
        const Vec3 center = c.vec3("profile_center", Vec3::Zero());
        const std::vector<double> lambdas = c.list("lambdas", {2, 4, 8});
        const double horizon = c.number_in("horizon", 4, 0, 1e9);
        int n = 0;
        for (double l : lambdas) {
            if (!(l > 0)) c.fail("lambdas", "scales must be positive");
            cores.push_back({n++, l, 0, center});
            horizons.push_back(horizon);
        }
    }
    CompareOptions opts;
    opts.cfl = c.number_in("cfl", 0.5, 1e-6, kMaxCfl);
    opts.every = static_cast<int>(c.integer("every", 5, 1, 1'000'000));
    opts.reference = c.choice("reference", "grid", {"grid", "analytic"}) == "grid" ? FreeReference::grid : FreeReference::analytic;
    const double final_ratio = c.number_in("final_ratio_bound", 0.25, 0, 1e9);
    return [=](Artifacts& a) {
        std::string csv = "n,lambda,x,y,z,horizon,gap,time_of_sup,removed_fraction,start_time\n";
        std::vector<double> gaps;
        json rows = json::array();
        for (std::size_t i = 0; i < cores.size(); ++i) {
            CompareOptions o = opts;
            o.horizon = horizons[i];
            const FreeGap g = compare_to_free(scene, spec, base, {cores[i]}, o).front();
            char buf[512];
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.core.n, g.core.lambda,
                          g.core.x[0], g.core.x[1], g.core.x[2], horizons[i], g.gap, g.time_of_sup, g.removed_fraction,
                          g.start_time);
            csv += buf;
            gaps.push_back(g.gap);
            rows.push_back({{"n", g.core.n}, {"lambda", g.core.lambda}, {"x", to_json(g.core.x)}, {"gap", g.gap}});
        }
        a.write("compare_free.csv", csv);
        a.check("gap strictly decreasing", strictly_decreasing(gaps), "");
        a.check("final gap below bound", gaps.back() < final_ratio * gaps.front(),
                fmt(gaps.back()) + " < " + fmt(final_ratio) + " * " + fmt(gaps.front()));
        a.write_json("compare_free.json", {{"sequence", sequence}, {"rows", rows}});
        return json{{"gaps", gaps}};
    };
}

Job plan_nonconcentration(const Config& c)
{
    const Scene scene = c.scene();
    const GridSpec spec = grid_spec(c);
    const GaussianProfile base = profile(c);
    const Vec3 center = c.vec3("profile_center");
    const std::vector<double> lambdas = c.list("lambdas", {0.5, 0.25});
    std::vector<double> Cs = c.list("C", {4});
    const double horizon = c.number_in("horizon", 2, 0, 1e9);
    const double cfl = c.number_in("cfl", 0.5, 1e-6, kMaxCfl);
    const int every = static_cast<int>(c.integer("every", 1, 1, 1'000'000));
    if (Cs.size() == 1) Cs.assign(lambdas.size(), Cs[0]);
    if (Cs.size() != lambdas.size()) c.fail("C", "give one value or one per scale");
    return [=](Artifacts& a) {
        json rows = json::array();
        std::vector<double> sups;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const ScaleCore core{static_cast<int>(i), lambdas[i], 0, center};
            const NonconcentrationResult r = nonconcentration_scan(scene, spec, base, core, Cs[i], horizon, cfl, every);
            rows.push_back({{"lambda", lambdas[i]}, {"C", Cs[i]}, {"sup_l6", r.sup_l6}, {"time_of_sup", r.time_of_sup}, {"peak_l6", r.peak_l6}});
            sups.push_back(r.sup_l6);
        }
        a.check("L6 sup decreasing across n", strictly_decreasing(sups), "");
        a.write_json("nonconcentration.json", {{"rows", rows}});
        return json{{"sup_l6", sups}};
    };
}

Job plan_volume_lemma(const Config& c)
{
    const std::vector<double> ts = c.list("t", {10, 30, 100});
    const std::vector<double> Rs = c.list("R", {0.1, 1});
    const std::vector<double> rs = c.list("r", {0.5, 2});
    const Vec3 dir = c.vec3("direction", Vec3(1, 0, 0));
    const auto samples = static_cast<std::size_t>(c.integer("samples", 100000, 10000, 1'000'000'000));
    const double eps0 = c.number_in("eps0", 0.25, 0, 1e9);
    const double slack = c.number_in("interval_factor", 1.2, 1, 1e9);
    const std::uint64_t seed = c.seed(1);
    if (!(dir.norm() > 0)) c.fail("direction", "must be non-zero");
    return [=](Artifacts& a) {
        struct Row {
            double t, R, r, eps, value, err, ratio, upper;
        };
        std::vector<Row> rows;
        std::uint64_t stream = 0;
        for (double t : ts)
            for (double R : Rs)
                for (double r : rs) {
                    // Base point on the sphere |x| = t, where the slab is centred.
                    const double eps = std::max(r, R) / t;
                    const std::uint64_t point_seed = seed + stream++;
                    if (eps > eps0) continue;
                    const VolumeEstimate v = cap_slab_volume(t * dir.normalized(), r, R, t, samples, point_seed);
                    const double scale = t * t * R * eps;
                    rows.push_back({t, R, r, eps, v.value, v.stderr_, v.value / scale, (v.value + v.stderr_) / scale});
                }
        double D = 0;
        for (const Row& row : rows) D = std::max(D, row.ratio);
        bool within = true;
        std::string csv = "t,R,r,eps,volume,stderr,ratio,upper_ratio\n";
        for (const Row& row : rows) {
            within = within && row.upper < slack * D;
            char buf[512];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.t, row.R, row.r, row.eps,
                          row.value, row.err, row.ratio, row.upper);
            csv += buf;
        }
        a.write("volume_lemma.csv", csv);
        a.check("admissible sweep non-empty", !rows.empty(), std::to_string(rows.size()) + " points");
        a.check("1-sigma upper ends below factor * D", within, "D = " + fmt(D));
        a.write_json("volume_lemma.json", {{"D", D}, {"points", rows.size()}, {"samples", samples}, {"seed", seed}, {"eps0", eps0}});
        return json{{"D", D}};
    };
}

const std::map<std::string, std::function<Job(const Config&)>>& planners()
{
    static const std::map<std::string, std::function<Job(const Config&)>> table = {
        {"trace", plan_trace},
        {"trap-report", plan_trap_report},
        {"reconcentrate", plan_reconcentrate},
        {"certify-weight", plan_certify_weight},
        {"minimal-c1", plan_minimal_c1},
        {"m-alpha", plan_m_alpha},
        {"solve", plan_solve},
        {"compare-free", plan_compare_free},
        {"nonconcentration", plan_nonconcentration},
        {"morawetz-check", plan_morawetz_check},
        {"volume-lemma", plan_volume_lemma},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, v] : planners()) n.push_back(k);
        return n;
    }();
    return names;
}

RunSummary run_experiment(const Config& config, const std::string& out_dir)
{
    const std::string name = config.choice("experiment", "", experiment_names());
    // The seed is echoed by every experiment, stochastic or not.
    const std::uint64_t seed = config.seed(1);
    const Job job = planners().at(name)(config);
    config.finish();

    fs::create_directories(out_dir);
    Artifacts artifacts(out_dir);
    json summary;
    try {
        summary = job(artifacts);
    } catch (const Error& e) {
        throw Error(name + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(name + ": " + e.what());
    }

    json manifest = {{"experiment", name},
                     {"seed", seed},
                     {"config", config.resolved()},
                     {"versions", {{"trapwave", kVersion},
                                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                                 "." + std::to_string(EIGEN_MINOR_VERSION)}}},
                     {"outputs", artifacts.files()},
                     {"summary", summary},
                     {"checks", artifacts.checks()},
                     {"status", artifacts.pass() ? "pass" : "fail"}};
    artifacts.write_json("manifest.json", manifest);
    return {name, artifacts.files(), artifacts.pass()};
}

}  // namespace trapwave
