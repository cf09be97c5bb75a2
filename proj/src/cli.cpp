#include "homocont/cli.hpp"

#include "homocont/admiss.hpp"
#include "homocont/branchcont.hpp"
#include "homocont/errors.hpp"
#include "homocont/homsolve.hpp"
#include "homocont/lindich.hpp"
#include "homocont/models.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace homocont {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string model = "pw_linear";
    std::string config;
    std::optional<double> alpha, delta, a, epsilon, beta, lambda_star;
    std::vector<std::string> params;
    std::vector<std::string> tables;
    double lambda = 0.0;
    int window = 0;
    std::string bc = "zero";
    double tol = 1e-10;
    std::string interval = "Z";
    std::optional<double> gamma_min, gamma_max;
    double resolution = 1e-6;
    std::string seed = "oracle";
    int sign = 1;
    unsigned rng_seed = 0;
    double perturb = 0.0;
    std::string out = ".";
    std::string format = "csv";
    // continuation budgets
    ContinuationSettings cont;
    std::string direction = "both";
};

std::pair<std::string, std::string> split_kv(const std::string& s)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw UsageError("expected key=value, got '" + s + "'");
    }
    return {s.substr(0, eq), s.substr(eq + 1)};
}

double to_double(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (used != s.size()) {
        throw UsageError("not a number: '" + s + "'");
    }
    return v;
}

BuiltinModel load_model(const Options& o)
{
    BuiltinModel m;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) {
            throw UsageError("cannot read config file " + o.config);
        }
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            m = model_from_json(buf.str());
        } catch (const json::exception& e) {
            throw UsageError(std::string("bad config: ") + e.what());
        }
    } else {
        ModelParams p;
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) {
                p.scalars[key] = *v;
            }
        };
        put("alpha", o.alpha);
        put("delta", o.delta);
        put("a", o.a);
        put("epsilon", o.epsilon);
        put("beta", o.beta);
        put("lambda_star", o.lambda_star);
        for (const auto& kv : o.params) {
            const auto [k, v] = split_kv(kv);
            p.scalars[k] = to_double(v);
        }
        for (const auto& kv : o.tables) {
            const auto [k, v] = split_kv(kv);
            std::vector<double> vals;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                vals.push_back(to_double(item));
            }
            p.tables[k] = vals;
        }
        m = build_model(o.model, p);
    }
    if (o.lambda_star) {
        m.model.lambda_star = *o.lambda_star;
    }
    return m;
}

Window pick_window(const BuiltinModel& m, const Options& o)
{
    return o.window > 0 ? Window::symmetric(o.window) : default_window(m);
}

TruncatedSequence initial_guess(const BuiltinModel& m, double lambda, const Window& w, const Options& o)
{
    TruncatedSequence phi = TruncatedSequence::zeros(w, m.model.dim);
    if (o.seed == "oracle") {
        phi = oracle_seed(m, lambda, w, o.sign);
    } else if (m.model.phi_star) {
        phi = m.model.phi_star->restricted_to(w);
    }
    if (o.perturb > 0.0) {
        std::mt19937 gen(o.rng_seed);
        std::uniform_real_distribution<double> u(-o.perturb, o.perturb);
        for (int t = w.t_minus() + 1; t < w.t_plus(); ++t) {
            Vector x = phi.at(t);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                x(i) += u(gen);
            }
            phi.set(t, x);
        }
    }
    return phi;
}

std::string csv_of(const TruncatedSequence& phi)
{
    std::ostringstream s;
    s << std::setprecision(17);
    write_csv(s, phi);
    return s.str();
}

json sequence_json(const TruncatedSequence& phi)
{
    json rows = json::array();
    const Window& w = phi.window();
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        const Vector x = phi.at(t);
        rows.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    }
    return {{"t_minus", w.t_minus()}, {"t_plus", w.t_plus()}, {"values", rows}};
}

json report_json(const DichotomyReport& r)
{
    return {{"interval", to_string(r.interval)}, {"has_ed", r.has_ed}, {"rank", r.projector_rank},
            {"K", r.K}, {"alpha", r.alpha}, {"diagnostic", r.diagnostic}, {"heuristic", r.heuristic}};
}

json certificate_json(const AdmissibilityCertificate& c)
{
    return {{"criterion", to_string(c.criterion)}, {"verified", c.verified}, {"lhs", c.lhs}, {"rhs", c.rhs},
            {"reason", c.reason}, {"numbers", c.numbers}};
}

int cmd_spectrum(const Options& o, std::ostream& out)
{
    const BuiltinModel m = load_model(o);
    const Window w = pick_window(m, o);
    const LinearSystem sys =
        variational_system(m.model, initial_guess(m, o.lambda, w, o), o.lambda);
    SpectrumOptions so;
    so.gamma_min = o.gamma_min;
    so.gamma_max = o.gamma_max;
    so.resolution = o.resolution;
    const SpectrumReport rep = spectrum(sys, parse_interval(o.interval), w, so);
    const std::string text = spectrum_json(rep);
    out << text << "\n";
    if (!o.out.empty() && o.out != ".") {
        std::filesystem::create_directories(o.out);
        write_file_atomic(std::filesystem::path(o.out) / "spectrum.json", text + "\n");
    }
    return 0;
}

int cmd_index(const Options& o, std::ostream& out)
{
    const BuiltinModel m = load_model(o);
    const Window w = pick_window(m, o);
    const LinearSystem sys =
        variational_system(m.model, initial_guess(m, o.lambda, w, o), o.lambda);
    EdOptions ed;
    const FredholmResult r = fredholm_index(sys, w, ed);
    if (o.format == "json") {
        out << json{{"index", r.index}, {"plus", report_json(r.plus)}, {"minus", report_json(r.minus)}}.dump()
            << "\n";
    } else {
        out << r.index << "\n";
    }
    return 0;
}

int cmd_solve(const Options& o, std::ostream& out)
{
    const BuiltinModel m = load_model(o);
    const Window w = pick_window(m, o);
    NewtonSettings ns;
    ns.residual_tol = o.tol;
    ns.bc = parse_bc_mode(o.bc);
    ns.validate();
    const NewtonResult r = newton_solve(m.model, initial_guess(m, o.lambda, w, o), o.lambda, ns);
    const NewtonDiagnostics& d = r.diagnostics;
    json j = {{"model", m.name},
              {"lambda", o.lambda},
              {"iterations", d.iterations},
              {"final_residual", d.final_residual},
              {"window", {d.window.t_minus(), d.window.t_plus()}},
              {"tail_minus", d.tail_minus},
              {"tail_plus", d.tail_plus},
              {"window_growths", d.window_growths},
              {"residual_history", d.residual_history},
              {"warnings", d.warnings},
              {"sup_norm", sup_norm(r.phi)}};
    try {
        const HyperbolicityReport h = hyperbolicity_report(m.model, r.phi, o.lambda);
        j["hyperbolicity"] = {{"hypotheses_hold", h.hypotheses_hold()},
                              {"one_not_in_sigma", h.one_not_in_sigma},
                              {"one_not_in_sigma_plus", h.one_not_in_sigma_plus},
                              {"one_not_in_sigma_minus", h.one_not_in_sigma_minus},
                              {"rank_plus", h.rank_plus},
                              {"rank_minus", h.rank_minus},
                              {"index", h.index ? json(*h.index) : json(nullptr)}};
    } catch (const std::exception& e) {
        j["hyperbolicity"] = {{"error", e.what()}};
    }
    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    if (o.format == "json") {
        j["solution"] = sequence_json(r.phi);
    } else {
        write_file_atomic(dir / "solution.csv", csv_of(r.phi));
    }
    write_file_atomic(dir / "solve.json", j.dump(2) + "\n");
    out << "converged in " << d.iterations << " iterations, residual " << d.final_residual << "\n";
    return 0;
}

json branch_json(const Branch& b)
{
    json folds = json::array();
    for (const Fold& f : b.folds) {
        folds.push_back({{"after_index", f.after_index}, {"lambda", f.lambda}, {"s", f.s}});
    }
    bool all_hyperbolic = true;
    for (const BranchPoint& p : b.points) {
        all_hyperbolic = all_hyperbolic && p.hyperbolic;
    }
    json j = {{"direction", to_string(b.direction)},
              {"outcome", to_string(b.outcome.code)},
              {"trigger", b.outcome.trigger},
              {"evidence", b.outcome.evidence},
              {"points", b.points.size()},
              {"folds", folds},
              {"all_hyperbolic", all_hyperbolic},
              {"lambda_end", b.points.empty() ? 0.0 : b.points.back().lambda}};
    if (b.outcome.reconnect_index) {
        j["reconnect_index"] = *b.outcome.reconnect_index;
    }
    return j;
}

int thread_cap()
{
    if (const char* env = std::getenv("HOMOCONT_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            return 1;
        }
    }
    return 2;
}

int cmd_continue(const Options& o, std::ostream& out)
{
    const BuiltinModel m = load_model(o);
    const Window w = pick_window(m, o);
    ContinuationSettings cs = o.cont;
    cs.residual_tol = o.tol;
    cs.bc = parse_bc_mode(o.bc);
    cs.validate();
    const double lstar = m.model.lambda_star;
    const TruncatedSequence phi0 = initial_guess(m, lstar, w, o);

    const bool want_plus = o.direction != "minus";
    const bool want_minus = o.direction != "plus";
    auto run = [&](Direction d) { return continue_branch(m.model, phi0, lstar, d, cs); };
    Branch plus, minus;
    if (want_plus && want_minus && thread_cap() >= 2) {
        auto fut = std::async(std::launch::async, run, Direction::Minus);
        plus = run(Direction::Plus);
        minus = fut.get();
    } else {
        if (want_plus) {
            plus = run(Direction::Plus);
        }
        if (want_minus) {
            minus = run(Direction::Minus);
        }
    }
    minus.direction = Direction::Minus;

    // One curve with signed arclength: the minus trace reversed, then the plus trace.
    std::vector<const BranchPoint*> pts;
    std::vector<double> s;
    for (auto it = minus.points.rbegin(); it != minus.points.rend(); ++it) {
        pts.push_back(&*it);
        s.push_back(-it->s);
    }
    for (std::size_t i = 0; i < plus.points.size(); ++i) {
        if (i == 0 && !minus.points.empty()) {
            continue;
        }
        pts.push_back(&plus.points[i]);
        s.push_back(plus.points[i].s);
    }
    const int d = m.model.dim;

    json j = {{"model", m.name}, {"lambda_star", lstar}, {"window", {w.t_minus(), w.t_plus()}},
              {"residual_tol", cs.residual_tol}};
    if (want_plus) {
        j["plus"] = branch_json(plus);
    }
    if (want_minus) {
        j["minus"] = branch_json(minus);
    }
    if (want_plus && want_minus) {
        const Classification c = classify(plus, minus, m.model);
        j["alternative"] = c.alternative;
        j["label"] = c.label;
        j["notes"] = c.notes;
        j["disclaimer"] = c.disclaimer;
        out << c.label << "\n";
    }

    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    if (o.format == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            rows.push_back({{"s", s[i]}, {"lambda", pts[i]->lambda}, {"sup_norm", pts[i]->sup_norm},
                            {"fold_flag", pts[i]->fold_flag}, {"phi", sequence_json(pts[i]->phi)}});
        }
        j["branch"] = rows;
    } else {
        std::ostringstream csv;
        std::ostringstream full;
        csv << std::setprecision(17);
        full << std::setprecision(17);
        csv << "s,lambda,sup_norm,fold_flag";
        full << "s,lambda,t";
        for (int i = 1; i <= d; ++i) {
            csv << ",x" << i;
            full << ",x" << i;
        }
        csv << "\n";
        full << "\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const BranchPoint& p = *pts[i];
            csv << s[i] << "," << p.lambda << "," << p.sup_norm << "," << (p.fold_flag ? 1 : 0);
            const Vector x0 = p.phi.at(0);
            for (int k = 0; k < d; ++k) {
                csv << "," << x0(k);
            }
            csv << "\n";
            const Window& pw = p.phi.window();
            for (int t = pw.t_minus(); t <= pw.t_plus(); ++t) {
                full << s[i] << "," << p.lambda << "," << t;
                const Vector x = p.phi.at(t);
                for (int k = 0; k < d; ++k) {
                    full << "," << x(k);
                }
                full << "\n";
            }
        }
        write_file_atomic(dir / "branch.csv", csv.str());
        write_file_atomic(dir / "branch_phi.csv", full.str());
    }
    write_file_atomic(dir / "branch.json", j.dump(2) + "\n");
    return 0;
}

int cmd_admissible(const Options& o, std::ostream& out)
{
    const BuiltinModel m = load_model(o);
    const auto [minus, plus] = check_limit_admissibility(m.model, o.lambda);
    json j = {{"model", m.name}, {"lambda", o.lambda}, {"minus", certificate_json(minus)},
              {"plus", certificate_json(plus)}, {"verified", minus.verified && plus.verified}};
    const std::string text = j.dump(2);
    out << text << "\n";
    if (!o.out.empty() && o.out != ".") {
        std::filesystem::create_directories(o.out);
        write_file_atomic(std::filesystem::path(o.out) / "admissible.json", text + "\n");
    }
    return 0;
}

void add_model_options(CLI::App* sub, Options& o)
{
    sub->add_option("--model", o.model, "Builtin model name");
    sub->add_option("--config", o.config, "JSON model description (overrides --model)");
    sub->add_option("--alpha", o.alpha, "Model parameter alpha");
    sub->add_option("--delta", o.delta, "Model parameter delta");
    sub->add_option("--a", o.a, "Model parameter a");
    sub->add_option("--epsilon", o.epsilon, "Model parameter epsilon");
    sub->add_option("--beta", o.beta, "Model parameter beta");
    sub->add_option("--lambda-star", o.lambda_star, "Reference parameter lambda*");
    sub->add_option("--param", o.params, "Extra scalar parameter key=value");
    sub->add_option("--table", o.tables, "Periodic table key=v1,v2,...");
    sub->add_option("--window", o.window, "Half width of the symmetric window (0 = model default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "Initial guess source")->check(CLI::IsMember({"oracle", "reference"}));
    sub->add_option("--sign", o.sign, "Root choice for two-branch oracles")->check(CLI::IsMember({-1, 1}));
    sub->add_option("--rng-seed", o.rng_seed, "Seed for random perturbations");
    sub->add_option("--perturb", o.perturb, "Uniform perturbation amplitude of the initial guess")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        f << contents;
        if (!f) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::vector<BranchRecord> read_branch_phi(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty branch file");
    }
    const int d = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 2;
    if (d < 1) {
        throw std::runtime_error("bad branch header: " + line);
    }
    struct Row {
        double s, lambda;
        int t;
        Vector x;
    };
    std::vector<BranchRecord> out;
    std::vector<Row> block;
    auto flush = [&]() {
        if (block.empty()) {
            return;
        }
        const Window w(block.front().t, block.back().t);
        TruncatedSequence phi = TruncatedSequence::zeros(w, d);
        for (const Row& r : block) {
            phi.set(r.t, r.x);
        }
        out.push_back({block.front().s, block.front().lambda, std::move(phi)});
        block.clear();
    };
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            v.push_back(std::stod(cell));
        }
        if (static_cast<int>(v.size()) != d + 3) {
            throw std::runtime_error("bad branch row: " + line);
        }
        Row r{v[0], v[1], static_cast<int>(v[2]), Vector(d)};
        for (int k = 0; k < d; ++k) {
            r.x(k) = v[3 + k];
        }
        if (!block.empty() && (r.s != block.front().s || r.lambda != block.front().lambda || r.t <= block.back().t)) {
            flush();
        }
        block.push_back(std::move(r));
    }
    flush();
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Homoclinic solutions of nonautonomous difference equations: spectra, solves, continuation"};
    app.require_subcommand(1);
    Options o;

    auto* sp = app.add_subcommand("spectrum", "Dichotomy spectrum of the linearization (JSON)");
    add_model_options(sp, o);
    sp->add_option("--lambda", o.lambda, "Parameter value");
    sp->add_option("--interval", o.interval, "Z, Z+ or Z-")->check(CLI::IsMember({"Z", "Z+", "Z-"}));
    sp->add_option("--gamma-min", o.gamma_min, "Lower end of the probed growth rates");
    sp->add_option("--gamma-max", o.gamma_max, "Upper end of the probed growth rates");
    sp->add_option("--resolution", o.resolution, "Edge resolution")->check(CLI::PositiveNumber);
    // the linearization is taken along phi = 0 unless asked otherwise
    o.seed = "reference";

    auto* ix = app.add_subcommand("index", "Fredholm index of the linearization");
    add_model_options(ix, o);
    ix->add_option("--lambda", o.lambda, "Parameter value");

    auto* so = app.add_subcommand("solve", "Newton solve for a homoclinic solution");
    add_model_options(so, o);
    so->add_option("--lambda", o.lambda, "Parameter value");
    so->add_option("--bc", o.bc, "Boundary conditions")->check(CLI::IsMember({"zero", "projected"}));
    so->add_option("--tol", o.tol, "Residual tolerance")->check(CLI::PositiveNumber);

    auto* co = app.add_subcommand("continue", "Pseudo-arclength continuation from (phi*, lambda*)");
    add_model_options(co, o);
    co->add_option("--bc", o.bc, "Boundary conditions")->check(CLI::IsMember({"zero", "projected"}));
    co->add_option("--tol", o.tol, "Corrector residual tolerance")->check(CLI::PositiveNumber);
    co->add_option("--direction", o.direction, "plus, minus or both")
        ->check(CLI::IsMember({"plus", "minus", "both"}));
    co->add_option("--steplength", o.cont.steplength, "Initial step");
    co->add_option("--min-step", o.cont.min_step, "Smallest step before giving up");
    co->add_option("--max-step", o.cont.max_step, "Largest step");
    co->add_option("--max-points", o.cont.max_points, "Point budget per direction");
    co->add_option("--norm-budget", o.cont.norm_budget, "Sup-norm budget");
    co->add_option("--lambda-min", o.cont.lambda_min, "Lower end of the lambda budget");
    co->add_option("--lambda-max", o.cont.lambda_max, "Upper end of the lambda budget");
    co->add_option("--reconnect-tol", o.cont.reconnect_tol, "Return distance (0 = 10 * steplength)");
    co->add_option("--lambda-weight", o.cont.lambda_weight, "Weight of lambda in the arclength");
    co->add_option("--hyperbolicity-stride", o.cont.hyperbolicity_stride, "Dichotomy check every n points");

    auto* ad = app.add_subcommand("admissible", "Admissibility certificates for the limit equations");
    add_model_options(ad, o);
    ad->add_option("--lambda", o.lambda, "Parameter value");

    // Seed defaults differ per subcommand: only spectrum/index linearize along zero.
    for (auto* sub : {so, co, ad}) {
        sub->preparse_callback([&o](std::size_t) { o.seed = "oracle"; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (sp->parsed()) {
            return cmd_spectrum(o, out);
        }
        if (ix->parsed()) {
            return cmd_index(o, out);
        }
        if (so->parsed()) {
            return cmd_solve(o, out);
        }
        if (co->parsed()) {
            return cmd_continue(o, out);
        }
        if (ad->parsed()) {
            return cmd_admissible(o, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NonConvergence& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace homocont
