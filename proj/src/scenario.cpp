#include "kvn/scenario.hpp"

#include <cmath>
#include <functional>
#include <set>

#include <json.hpp>

#include "kvn/error.hpp"

namespace kvn {

using nlohmann::json;

std::string method_name(Method m)
{
    switch (m) {
    case Method::flow: return "flow";
    case Method::vlasov: return "vlasov";
    case Method::perturbation: return "perturbation";
    case Method::fock: return "fock";
    case Method::ensemble: return "ensemble";
    case Method::compare: return "compare";
    }
    return "unknown";
}

namespace {

struct Context {
    bool strict = true;
    std::vector<ConfigIssue> errors;
    std::vector<ConfigIssue> warnings;

    void error(const std::string& path, const std::string& message) { errors.push_back({path, message}); }
};

std::string join(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

/// Typed access to one JSON object that remembers which keys were read.
class Section {
public:
    Section(const json* node, std::string path, Context& ctx) : node_(node), path_(std::move(path)), ctx_(ctx)
    {
        if (node_ && !node_->is_object()) {
            ctx_.error(path_.empty() ? "<root>" : path_, "expected an object");
            node_ = nullptr;
        }
    }

    const std::string& path() const { return path_; }
    bool present() const { return node_ != nullptr; }

    bool has(const std::string& key)
    {
        used_.insert(key);
        return node_ && node_->contains(key);
    }

    const json* raw(const std::string& key)
    {
        used_.insert(key);
        if (!node_) return nullptr;
        auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    Section child(const std::string& key) { return Section(raw(key), join(path_, key), ctx_); }

    double number(const std::string& key, double fallback)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number()) {
            ctx_.error(join(path_, key), "expected a number");
            return fallback;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d)) ctx_.error(join(path_, key), "must be finite");
        return d;
    }

    double positive(const std::string& key, double fallback)
    {
        const double d = number(key, fallback);
        if (!(d > 0.0)) ctx_.error(join(path_, key), "must be > 0");
        return d;
    }

    double non_negative(const std::string& key, double fallback)
    {
        const double d = number(key, fallback);
        if (!(d >= 0.0)) ctx_.error(join(path_, key), "must be >= 0");
        return d;
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback, std::uint64_t minimum = 0)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
            ctx_.error(join(path_, key), "expected a non-negative integer");
            return fallback;
        }
        const auto n = v->get<std::uint64_t>();
        if (n < minimum) ctx_.error(join(path_, key), "must be >= " + std::to_string(minimum));
        return n;
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            ctx_.error(join(path_, key), "expected true or false");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            ctx_.error(join(path_, key), "expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    template <typename E>
    E choice(const std::string& key, E fallback, const std::vector<std::pair<std::string, E>>& options)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (v->is_string()) {
            for (const auto& [name, value] : options) {
                if (v->get<std::string>() == name) return value;
            }
        }
        std::string names;
        for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
        ctx_.error(join(path_, key), "expected one of: " + names);
        return fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_array()) {
            ctx_.error(join(path_, key), "expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) {
                ctx_.error(join(path_, key) + "[" + std::to_string(i) + "]", "expected a number");
                continue;
            }
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback)
    {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_array()) {
            ctx_.error(join(path_, key), "expected an array of positive integers");
            return fallback;
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto& e = (*v)[i];
            if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
                ctx_.error(join(path_, key) + "[" + std::to_string(i) + "]", "expected a positive integer");
                continue;
            }
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }

    /// Reports keys that were never read.
    void finish()
    {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (used_.count(key)) continue;
            const ConfigIssue issue{join(path_, key), "unknown key"};
            if (ctx_.strict) {
                ctx_.errors.push_back(issue);
            } else {
                ctx_.warnings.push_back(issue);
            }
        }
    }

private:
    const json* node_;
    std::string path_;
    Context& ctx_;
    std::set<std::string> used_;
};

/// Runs a module validator and records its complaint under `path`.
/// Runs a module validator unless a field under `path` was already reported.
void check(Context& ctx, const std::string& path, const std::function<void()>& fn)
{
    for (const auto& e : ctx.errors) {
        if (e.path == path || e.path.rfind(path + ".", 0) == 0) return;
    }
    try {
        fn();
    } catch (const std::exception& e) {
        ctx.error(path, e.what());
    }
}

GridAxis parse_axis(Section s, GridAxis fallback)
{
    GridAxis a = fallback;
    a.lower = s.number("lower", a.lower);
    a.upper = s.number("upper", a.upper);
    a.cells = s.integer("cells", a.cells, 4);
    a.periodic = s.boolean("periodic", a.periodic);
    s.finish();
    return a;
}

PhaseGrid parse_grid(Section s, Context& ctx)
{
    PhaseGrid g{{-8.0, 8.0, 64, false}, {-8.0, 8.0, 64, false}};
    g.q = parse_axis(s.child("q"), g.q);
    g.p = parse_axis(s.child("p"), g.p);
    if (!(g.q.upper > g.q.lower)) ctx.error(join(s.path(), "q.upper"), "must exceed q.lower");
    if (!(g.p.upper > g.p.lower)) ctx.error(join(s.path(), "p.upper"), "must exceed p.lower");
    s.finish();
    return g;
}

PotentialSpec parse_external(Section s)
{
    PotentialSpec out = FreePotential{};
    if (!s.present()) return out;
    enum class Kind { free, harmonic, quartic, cosine };
    const Kind kind = s.choice<Kind>("type", Kind::free,
                                     {{"free", Kind::free}, {"harmonic", Kind::harmonic}, {"quartic", Kind::quartic},
                                      {"cosine", Kind::cosine}});
    switch (kind) {
    case Kind::free: break;
    case Kind::harmonic: out = HarmonicPotential{s.positive("omega", 1.0)}; break;
    case Kind::quartic: out = QuarticPotential{s.number("a", 0.0), s.number("b", 1.0)}; break;
    case Kind::cosine: out = CosinePotential{s.number("k", 1.0), s.number("amplitude", 1.0)}; break;
    }
    s.finish();
    return out;
}

PairPotentialSpec parse_pair(Section s, Context& ctx)
{
    PairPotentialSpec out = NoPairPotential{};
    if (!s.present()) return out;
    enum class Kind { none, gaussian, cosine };
    const Kind kind = s.choice<Kind>("type", Kind::none,
                                     {{"none", Kind::none}, {"gaussian", Kind::gaussian}, {"cosine", Kind::cosine}});
    auto strength = [&] {
        const double e = s.number("strength", 0.0);
        if (!(e >= 0.0)) ctx.error(join(s.path(), "strength"), "strength must be >= 0");
        return e;
    };
    switch (kind) {
    case Kind::none: break;
    case Kind::gaussian: {
        const double e = strength();
        out = GaussianPairPotential{e, s.positive("width", 1.0)};
        break;
    }
    case Kind::cosine: {
        const double e = strength();
        out = CosinePairPotential{e, s.number("k", 1.0)};
        break;
    }
    }
    s.finish();
    return out;
}

GaussianComponent parse_component(Section s)
{
    GaussianComponent c;
    c.weight = s.positive("weight", 1.0);
    c.q0 = s.number("q0", 0.0);
    c.p0 = s.number("p0", 0.0);
    c.sigma_q = s.positive("sigma_q", 1.0);
    c.sigma_p = s.positive("sigma_p", 1.0);
    s.finish();
    return c;
}

InitialDensity parse_initial(Section s, const PhaseGrid& grid, Context& ctx)
{
    InitialDensity out = gaussian_density();
    if (!s.present()) return out;
    enum class Kind { gaussian, mixture, perturbed_uniform };
    const Kind kind = s.choice<Kind>("type", Kind::gaussian,
                                     {{"gaussian", Kind::gaussian}, {"mixture", Kind::mixture},
                                      {"perturbed_uniform", Kind::perturbed_uniform}});
    switch (kind) {
    case Kind::gaussian: {
        GaussianComponent c;
        c.q0 = s.number("q0", 0.0);
        c.p0 = s.number("p0", 0.0);
        c.sigma_q = s.positive("sigma_q", 1.0);
        c.sigma_p = s.positive("sigma_p", 1.0);
        out.spec = GaussianMixtureDensity{{c}};
        break;
    }
    case Kind::mixture: {
        GaussianMixtureDensity m;
        const json* list = s.raw("components");
        const std::string path = join(s.path(), "components");
        if (!list || !list->is_array() || list->empty()) {
            ctx.error(path, "expected a non-empty array of components");
        } else {
            for (std::size_t i = 0; i < list->size(); ++i) {
                m.components.push_back(parse_component(Section(&(*list)[i], path + "[" + std::to_string(i) + "]", ctx)));
            }
        }
        out.spec = m;
        break;
    }
    case Kind::perturbed_uniform: {
        PerturbedUniformDensity u;
        u.q_lower = s.number("q_lower", grid.q.lower);
        u.length = s.positive("length", grid.q.length());
        u.alpha = s.number("alpha", 0.1);
        u.k = s.number("k", 2.0 * M_PI / u.length);
        u.sigma_p = s.positive("sigma_p", 1.0);
        out.spec = u;
        break;
    }
    }
    s.finish();
    return out;
}

std::vector<PhasePoint> parse_points(Section& s, Context& ctx)
{
    std::vector<PhasePoint> out;
    const json* v = s.raw("points");
    if (!v) return {{1.0, 0.0}};
    const std::string path = join(s.path(), "points");
    if (!v->is_array()) {
        ctx.error(path, "expected an array of [q, p] pairs");
        return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
        const auto& e = (*v)[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
            ctx.error(path + "[" + std::to_string(i) + "]", "expected [q, p]");
            continue;
        }
        out.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return out;
}

}  // namespace

ParseResult parse_config(const std::string& text, bool strict)
{
    ParseResult result;
    Context ctx;
    ctx.strict = strict;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        result.errors.push_back({"<root>", std::string("not valid JSON: ") + e.what()});
        return result;
    }
    if (!doc.is_object()) {
        result.errors.push_back({"<root>", "expected a JSON object"});
        return result;
    }

    ScenarioConfig c;
    Section root(&doc, "", ctx);
    c.name = root.string("name", "");
    if (!c.name.empty() && c.name.find_first_of("/\\") != std::string::npos) ctx.error("name", "must not contain path separators");
    if (!root.has("method")) ctx.error("method", "is required");
    c.method = root.choice<Method>("method", Method::vlasov,
                                   {{"flow", Method::flow}, {"vlasov", Method::vlasov},
                                    {"perturbation", Method::perturbation}, {"fock", Method::fock},
                                    {"ensemble", Method::ensemble}, {"compare", Method::compare}});
    c.seed = root.integer("seed", 1);

    {
        Section p = root.child("problem");
        c.problem.mass = p.positive("mass", 1.0);
        c.problem.dimension = static_cast<int>(p.integer("dimension", 1, 1));
        if (c.problem.dimension != 1) ctx.error("problem.dimension", "only dimension 1 is supported");
        c.problem.external = parse_external(p.child("external"));
        c.problem.pair = parse_pair(p.child("pair"), ctx);
        p.finish();
    }
    c.grid = parse_grid(root.child("grid"), ctx);
    c.initial = parse_initial(root.child("initial"), c.grid, ctx);
    {
        Section t = root.child("time");
        c.final_time = t.non_negative("final", 1.0);
        c.snapshots = t.numbers("snapshots", {});
        for (std::size_t i = 0; i < c.snapshots.size(); ++i) {
            if (!(c.snapshots[i] >= 0.0) || c.snapshots[i] > c.final_time) {
                ctx.error("time.snapshots[" + std::to_string(i) + "]", "must lie in [0, final]");
            }
        }
        t.finish();
    }
    {
        Section o = root.child("output");
        c.output_directory = o.string("directory", c.output_directory);
        o.finish();
    }
    {
        Section f = root.child("flow");
        c.flow.settings.dt = f.positive("dt", c.flow.settings.dt);
        c.flow.settings.exact_shortcut = f.boolean("exact_shortcut", false);
        c.flow.points = parse_points(f, ctx);
        c.flow.points_csv = f.string("points_csv", "");
        c.flow.output_every = f.integer("output_every", 1, 1);
        f.finish();
    }
    {
        Section v = root.child("vlasov");
        c.vlasov.dt = v.positive("dt", c.vlasov.dt);
        c.vlasov.interpolation = v.choice<Interpolation>(
            "interpolation", Interpolation::cubic_spline,
            {{"cubic_spline", Interpolation::cubic_spline}, {"linear", Interpolation::linear}});
        c.vlasov.splitting = v.choice<Splitting>("splitting", Splitting::strang, {{"strang", Splitting::strang}});
        c.vlasov.force_update = v.choice<ForceUpdate>("force_update", ForceUpdate::half_step_frozen,
                                                      {{"half_step_frozen", ForceUpdate::half_step_frozen}});
        v.finish();
    }
    {
        Section p = root.child("perturbation");
        c.perturbation.quadrature = p.choice<TimeQuadrature>(
            "quadrature", TimeQuadrature::gauss_legendre,
            {{"gauss_legendre", TimeQuadrature::gauss_legendre}, {"trapezoid", TimeQuadrature::trapezoid}});
        c.perturbation.n_s = p.integer("n_s", 16, 2);
        c.perturbation.h_p = p.positive("h_p", 1e-4);
        if (p.has("aux_grid")) c.perturbation.aux_grid = parse_grid(p.child("aux_grid"), ctx);
        Section fl = p.child("flow");
        c.perturbation.flow.dt = fl.positive("dt", 1e-3);
        c.perturbation.flow.exact_shortcut = fl.boolean("exact_shortcut", false);
        fl.finish();
        p.finish();
    }
    {
        Section f = root.child("fock");
        c.fock.particles = f.integer("particles", 2, 1);
        c.fock.cap = f.integer("cap", default_fock_dimension_cap, 1);
        c.fock.propagation = f.choice<PropagationMethod>(
            "propagation", PropagationMethod::automatic,
            {{"automatic", PropagationMethod::automatic}, {"dense", PropagationMethod::dense},
             {"krylov", PropagationMethod::krylov}});
        c.fock.dt_fd = f.positive("dt_fd", 1e-4);
        c.fock.write_operator = f.boolean("write_operator", false);
        f.finish();
    }
    {
        Section e = root.child("ensemble");
        auto& s = c.ensemble.settings;
        s.particles_per_system = e.integer("particles_per_system", s.particles_per_system, 1);
        s.n_samples = e.integer("n_samples", s.n_samples, 1);
        s.dt = e.positive("dt", s.dt);
        s.coupling = e.choice<CouplingScaling>("coupling", CouplingScaling::mean_field,
                                               {{"mean_field", CouplingScaling::mean_field},
                                                {"bare", CouplingScaling::bare}});
        c.ensemble.n_list = e.counts("n_list", c.ensemble.n_list);
        c.ensemble.replicates = e.integer("replicates", 1, 1);
        c.ensemble.coarsen = e.integer("coarsen", 4, 1);
        e.finish();
    }
    {
        Section k = root.child("compare");
        const json* methods = k.raw("methods");
        if (methods) {
            std::set<std::string> names;
            if (methods->is_array()) {
                for (const auto& m : *methods) {
                    if (m.is_string()) names.insert(m.get<std::string>());
                }
            }
            if (names == std::set<std::string>{"vlasov", "perturbation"}) {
                c.compare.kind = Comparison::perturbation_vlasov;
            } else if (names == std::set<std::string>{"vlasov", "ensemble"}) {
                c.compare.kind = Comparison::ensemble_vlasov;
            } else {
                ctx.error("compare.methods", "expected [\"vlasov\", \"perturbation\"] or [\"vlasov\", \"ensemble\"]");
            }
        }
        c.compare.epsilons = k.numbers("epsilons", c.compare.epsilons);
        k.finish();
    }
    root.finish();

    // Cross-field constraints, checked only once the shapes are sane.
    check(ctx, "problem", [&] { c.problem.validate(); });
    check(ctx, "grid", [&] { c.grid.validate(); });
    check(ctx, "initial", [&] { c.initial.validate(); });
    if (c.perturbation.aux_grid) check(ctx, "perturbation.aux_grid", [&] { c.perturbation.aux_grid->validate(); });
    if (const auto* g = std::get_if<GaussianPairPotential>(&c.problem.pair)) {
        if (c.grid.q.length() < 4.0 * g->width) {
            ctx.error("grid.q", "q extent must be at least 4 widths of the gaussian pair potential");
        }
    }
    if (std::holds_alternative<CosinePotential>(c.problem.external) && !c.grid.q.periodic) {
        ctx.error("grid.q.periodic", "the cosine potential needs a periodic q axis");
    }

    switch (c.method) {
    case Method::flow:
        if (c.flow.points.empty() && c.flow.points_csv.empty()) ctx.error("flow.points", "needs at least one point");
        break;
    case Method::vlasov:
        break;
    case Method::perturbation:
        break;
    case Method::fock:
        if (!c.grid.q.periodic || !c.grid.p.periodic) {
            ctx.error("grid", "the fock method needs periodic q and p axes");
        }
        break;
    case Method::ensemble:
        if (!(c.final_time > 0.0)) ctx.error("time.final", "must be > 0 for ensemble runs");
        check(ctx, "ensemble", [&] { c.ensemble.settings.validate(c.problem); });
        if (!std::holds_alternative<GaussianMixtureDensity>(c.initial.spec)) {
            ctx.error("initial.type", "ensemble sampling needs a gaussian or mixture density");
        }
        break;
    case Method::compare:
        if (!(c.final_time > 0.0)) ctx.error("time.final", "must be > 0 for compare runs");
        if (!has_pair_interaction(c.problem.pair)) ctx.error("problem.pair", "compare runs need a pair potential");
        if (c.compare.kind == Comparison::perturbation_vlasov) {
            if (c.compare.epsilons.empty()) ctx.error("compare.epsilons", "needs at least one coupling");
            for (std::size_t i = 0; i < c.compare.epsilons.size(); ++i) {
                if (!(c.compare.epsilons[i] > 0.0)) {
                    ctx.error("compare.epsilons[" + std::to_string(i) + "]", "strength must be > 0");
                }
                if (i > 0 && !(c.compare.epsilons[i] < c.compare.epsilons[i - 1])) {
                    ctx.error("compare.epsilons", "couplings must be strictly decreasing");
                }
            }
        } else {
            if (c.ensemble.n_list.size() < 2) ctx.error("ensemble.n_list", "needs at least two sample sizes");
            for (std::size_t i = 0; i < c.ensemble.n_list.size(); ++i) {
                if (c.ensemble.n_list[i] % c.ensemble.settings.particles_per_system != 0) {
                    ctx.error("ensemble.n_list[" + std::to_string(i) + "]",
                              "must be a multiple of ensemble.particles_per_system");
                }
                if (i > 0 && !(c.ensemble.n_list[i] > c.ensemble.n_list[i - 1])) {
                    ctx.error("ensemble.n_list", "sample sizes must increase");
                }
            }
            if (c.grid.q.cells % c.ensemble.coarsen != 0 || c.grid.p.cells % c.ensemble.coarsen != 0) {
                ctx.error("ensemble.coarsen", "must divide both grid cell counts");
            }
            if (!std::holds_alternative<GaussianMixtureDensity>(c.initial.spec)) {
                ctx.error("initial.type", "ensemble sampling needs a gaussian or mixture density");
            }
        }
        break;
    }

    result.errors = std::move(ctx.errors);
    result.warnings = std::move(ctx.warnings);
    if (result.errors.empty()) result.config = std::move(c);
    return result;
}

namespace {

json axis_json(const GridAxis& a)
{
    return {{"lower", a.lower}, {"upper", a.upper}, {"cells", a.cells}, {"periodic", a.periodic}};
}

json grid_json(const PhaseGrid& g)
{
    return {{"q", axis_json(g.q)}, {"p", axis_json(g.p)}};
}

json external_json(const PotentialSpec& u)
{
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, FreePotential>) return {{"type", "free"}};
            if constexpr (std::is_same_v<T, HarmonicPotential>) return {{"type", "harmonic"}, {"omega", v.omega}};
            if constexpr (std::is_same_v<T, QuarticPotential>) return {{"type", "quartic"}, {"a", v.a}, {"b", v.b}};
            if constexpr (std::is_same_v<T, CosinePotential>)
                return {{"type", "cosine"}, {"k", v.k}, {"amplitude", v.amplitude}};
        },
        u);
}

json pair_json(const PairPotentialSpec& p)
{
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, NoPairPotential>) return {{"type", "none"}};
            if constexpr (std::is_same_v<T, GaussianPairPotential>)
                return {{"type", "gaussian"}, {"strength", v.strength}, {"width", v.width}};
            if constexpr (std::is_same_v<T, CosinePairPotential>)
                return {{"type", "cosine"}, {"strength", v.strength}, {"k", v.k}};
        },
        p);
}

json initial_json(const InitialDensity& d)
{
    if (const auto* m = std::get_if<GaussianMixtureDensity>(&d.spec)) {
        json comps = json::array();
        for (const auto& c : m->components) {
            comps.push_back({{"weight", c.weight}, {"q0", c.q0}, {"p0", c.p0}, {"sigma_q", c.sigma_q},
                             {"sigma_p", c.sigma_p}});
        }
        return {{"type", "mixture"}, {"components", comps}};
    }
    const auto& u = std::get<PerturbedUniformDensity>(d.spec);
    return {{"type", "perturbed_uniform"}, {"q_lower", u.q_lower}, {"length", u.length}, {"alpha", u.alpha},
            {"k", u.k}, {"sigma_p", u.sigma_p}};
}

}  // namespace

std::string to_json(const ScenarioConfig& c)
{
    json points = json::array();
    for (const auto& x : c.flow.points) points.push_back({x.q, x.p});
    json perturbation = {
        {"quadrature", c.perturbation.quadrature == TimeQuadrature::gauss_legendre ? "gauss_legendre" : "trapezoid"},
        {"n_s", c.perturbation.n_s},
        {"h_p", c.perturbation.h_p},
        {"flow", {{"dt", c.perturbation.flow.dt}, {"exact_shortcut", c.perturbation.flow.exact_shortcut}}}};
    if (c.perturbation.aux_grid) perturbation["aux_grid"] = grid_json(*c.perturbation.aux_grid);
    const char* propagation = c.fock.propagation == PropagationMethod::dense    ? "dense"
                              : c.fock.propagation == PropagationMethod::krylov ? "krylov"
                                                                                : "automatic";
    json doc = {
        {"name", c.name},
        {"method", method_name(c.method)},
        {"seed", c.seed},
        {"problem",
         {{"mass", c.problem.mass},
          {"dimension", c.problem.dimension},
          {"external", external_json(c.problem.external)},
          {"pair", pair_json(c.problem.pair)}}},
        {"grid", grid_json(c.grid)},
        {"initial", initial_json(c.initial)},
        {"time", {{"final", c.final_time}, {"snapshots", c.snapshots}}},
        {"output", {{"directory", c.output_directory}}},
        {"flow",
         {{"dt", c.flow.settings.dt},
          {"exact_shortcut", c.flow.settings.exact_shortcut},
          {"points", points},
          {"points_csv", c.flow.points_csv},
          {"output_every", c.flow.output_every}}},
        {"vlasov",
         {{"dt", c.vlasov.dt},
          {"interpolation", c.vlasov.interpolation == Interpolation::cubic_spline ? "cubic_spline" : "linear"},
          {"splitting", "strang"},
          {"force_update", "half_step_frozen"}}},
        {"perturbation", perturbation},
        {"fock",
         {{"particles", c.fock.particles},
          {"cap", c.fock.cap},
          {"propagation", propagation},
          {"dt_fd", c.fock.dt_fd},
          {"write_operator", c.fock.write_operator}}},
        {"ensemble",
         {{"particles_per_system", c.ensemble.settings.particles_per_system},
          {"n_samples", c.ensemble.settings.n_samples},
          {"dt", c.ensemble.settings.dt},
          {"coupling", coupling_scaling_name(c.ensemble.settings.coupling)},
          {"n_list", c.ensemble.n_list},
          {"replicates", c.ensemble.replicates},
          {"coarsen", c.ensemble.coarsen}}},
        {"compare",
         {{"methods", c.compare.kind == Comparison::perturbation_vlasov ? json{"vlasov", "perturbation"}
                                                                        : json{"vlasov", "ensemble"}},
          {"epsilons", c.compare.epsilons}}},
    };
    return doc.dump(2) + "\n";
}

}  // namespace kvn
