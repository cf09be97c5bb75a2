// Acceptance run: one PASS/FAIL line per criterion.

#include "oracles.hpp"
#include "properties.hpp"

#include "homocont/admiss.hpp"
#include "homocont/branchcont.hpp"
#include "homocont/cli.hpp"
#include "homocont/homsolve.hpp"
#include "homocont/lindich.hpp"
#include "homocont/models.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace homocont;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

class Report {
public:
    void note(bool ok, const std::string& what)
    {
        if (!ok) {
            out_.ok = false;
            failures_ << (failures_.tellp() > 0 ? "; " : "") << what;
        } else {
            info(what);
        }
    }
    void info(const std::string& s) { summary_ << (summary_.tellp() > 0 ? "; " : "") << s; }

    Outcome done()
    {
        out_.detail = out_.ok ? summary_.str() : failures_.str();
        return out_;
    }

private:
    Outcome out_;
    std::ostringstream summary_;
    std::ostringstream failures_;
};

std::string num(double x)
{
    std::ostringstream s;
    s << std::setprecision(4) << x;
    return s.str();
}

nlohmann::json cli_json(std::vector<std::string> args)
{
    args.insert(args.begin(), "homocont");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    if (run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != 0) {
        throw std::runtime_error("cli failed: " + err.str());
    }
    return nlohmann::json::parse(out.str());
}

Outcome spectrum_reproduction()
{
    Report r;
    const auto j0 = cli_json({"spectrum", "--model", "pw_linear", "--alpha", "0.5", "--lambda", "0"});
    const auto s0 = j0["spectrum"];
    const bool ok0 = s0.size() == 1 && std::abs(s0[0][0].get<double>() - 0.5) <= 1e-6 &&
                     std::abs(s0[0][1].get<double>() - 2.0) <= 1e-6;
    r.note(ok0, "lambda=0: " + s0.dump());
    const auto j1 = cli_json({"spectrum", "--model", "pw_linear", "--alpha", "0.5", "--lambda", "1"});
    const auto s1 = j1["spectrum"];
    bool ok1 = s1.size() == 2;
    if (ok1) {
        for (std::size_t i = 0; i < 2; ++i) {
            const double target = i == 0 ? 0.5 : 2.0;
            const double lo = s1[i][0].get<double>();
            const double hi = s1[i][1].get<double>();
            ok1 = ok1 && hi - lo <= 1e-6 && std::abs(lo - target) <= 1e-6 && std::abs(hi - target) <= 1e-6;
        }
    }
    r.note(ok1, "lambda=1: " + s1.dump());
    return r.done();
}

Outcome index_reproduction()
{
    Report r;
    ModelParams p;
    p.scalars["alpha"] = 0.5;
    const BuiltinModel m = build_model("pw_linear", p);
    const Window w = Window::symmetric(40);
    for (double lambda : {1.0, -0.7, 2.5}) {
        const int idx = fredholm_index(variational_system(m.model, TruncatedSequence::zeros(w, 2), lambda), w).index;
        r.note(idx == 0, "pw_linear lambda=" + num(lambda) + " index " + std::to_string(idx));
    }
    int matched = 0;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto sys = oracle::random_asym_system(1000 + seed, 1 + static_cast<int>(seed % 3));
        const int lib = fredholm_index(sys.system, w).index;
        const auto brute = oracle::brute_force_index(sys.system, w);
        if (lib == brute.index()) {
            ++matched;
        } else {
            r.note(false, "seed " + std::to_string(seed) + ": index " + std::to_string(lib) + " vs brute force " +
                              std::to_string(brute.kernel) + "-" + std::to_string(brute.cokernel));
        }
    }
    r.info(std::to_string(matched) + "/20 random systems match the dense kernel/cokernel count");
    return r.done();
}

Outcome branch_oracle()
{
    Report r;
    const BuiltinModel m = build_model("transcritical");
    const Window w = default_window(m);
    ContinuationSettings cs;
    cs.lambda_min = 0.1;
    cs.lambda_max = 2.0;
    double err = 0.0;
    double tail = 0.0;
    std::size_t points = 0;
    double lo = 1e300, hi = -1e300;
    for (Direction d : {Direction::Minus, Direction::Plus}) {
        const Branch b = continue_branch(m.model, oracle_seed(m, 0.5, w), 0.5, d, cs);
        for (const BranchPoint& q : b.points) {
            err = std::max(err, vec_norm(q.phi.at(0) - oracle::transcritical_xi(0.5, 1.0, q.lambda)));
            tail = std::max(tail, q.tail);
            lo = std::min(lo, q.lambda);
            hi = std::max(hi, q.lambda);
        }
        points += b.points.size();
    }
    r.note(err <= 1e-6, "max |xi - oracle| = " + num(err));
    r.note(tail <= 1e-10, "max tail = " + num(tail));
    r.note(lo <= 0.1 + 1e-9 && hi >= 2.0 - 1e-9, "covered lambda in [" + num(lo) + ", " + num(hi) + "]");
    r.info(std::to_string(points) + " points");
    return r.done();
}

Outcome pitchfork_fold()
{
    Report r;
    ModelParams p;
    p.scalars["delta"] = -1.0;
    const BuiltinModel m = build_model("pitchfork", p);
    const Window w = default_window(m);
    ContinuationSettings cs;
    cs.lambda_max = 2.0;
    const Branch b = continue_branch(m.model, oracle_seed(m, 0.5, w), 0.5, Direction::Minus, cs);
    double worst = 0.0;
    for (const BranchPoint& q : b.points) {
        const double x = q.phi.at(0)(0);
        worst = std::max(worst, std::abs(x * x - 2.0 * q.lambda));
    }
    const bool folded = !b.folds.empty() && std::abs(b.folds.front().lambda) <= 1e-4;
    const bool stopped = b.folds.empty() && std::abs(b.points.back().lambda) <= 1e-4;
    r.note(folded || stopped, folded ? "fold at lambda = " + num(b.folds.front().lambda)
                                     : "no fold; trace ended at lambda = " + num(b.points.back().lambda));
    r.note(worst <= 1e-8, "max |xi1^2 - 2 lambda| = " + num(worst));
    return r.done();
}

Outcome affine_exactness()
{
    Report r;
    const BuiltinModel m = build_model("scalar_affine");
    const Window w = default_window(m);
    double worst_iter = 0, worst_res = 0, worst_err = 0;
    for (double lambda : {1.0, -0.3, 2.5}) {
        const NewtonResult s = newton_solve(m.model, TruncatedSequence::zeros(w, 1), lambda);
        worst_iter = std::max(worst_iter, static_cast<double>(s.diagnostics.iterations));
        worst_res = std::max(worst_res, s.diagnostics.final_residual);
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            worst_err = std::max(worst_err, std::abs(s.phi.at(t)(0) - lambda * oracle::scalar_green(0.5, t, 1)));
        }
    }
    r.note(worst_iter <= 2, "iterations " + num(worst_iter));
    r.note(worst_res <= 1e-12, "residual " + num(worst_res));
    r.note(worst_err <= 1e-12, "max |phi - lambda G(t,1)| = " + num(worst_err));
    return r.done();
}

Outcome jacobian_check()
{
    Report r;
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto& names = builtin_names();
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const BuiltinModel m = build_model(names[static_cast<std::size_t>(k) % names.size()]);
        const Window w(-5, 5);
        TruncatedSequence phi = TruncatedSequence::zeros(w, m.model.dim);
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            phi.set(t, Vector::NullaryExpr(m.model.dim, [&](Eigen::Index) { return 0.8 * u(gen); }));
        }
        const double lambda = m.model.lambda_star + u(gen);
        const Matrix j = Matrix(jacobian(m.model, phi, lambda));
        const Matrix fd = oracle::fd_jacobian(m.model, phi, lambda);
        const double rel = (j - fd).cwiseAbs().maxCoeff() / std::max(1.0, j.cwiseAbs().maxCoeff());
        worst = std::max(worst, rel);
        if (rel > 1e-5) r.note(false, m.name + " draw " + std::to_string(k) + " relative error " + num(rel));
    }
    r.info("50 draws, worst relative error " + num(worst));
    return r.done();
}

Outcome admissibility()
{
    Report r;
    ModelParams p;
    p.tables["a_minus"] = {0.8};
    p.tables["a_plus"] = {0.5, 1.5};
    const BuiltinModel m = build_model("beverton_holt", p);
    const auto [minus, plus] = check_limit_admissibility(m.model, 0.0);
    // Lipschitz constant of x -> a x / (1 + x) on x >= 0 is a, so c = product over one period.
    const double c_minus = 0.8;
    const double c_plus = 0.5 * 1.5;
    r.note(minus.verified && plus.verified, "both sides verified (" + minus.reason + " / " + plus.reason + ")");
    r.note(std::abs(minus.lhs - c_minus) <= 1e-12 && std::abs(plus.lhs - c_plus) <= 1e-12,
           "c- = " + num(minus.lhs) + ", c+ = " + num(plus.lhs));

    const LinearSystem a = LinearSystem::autonomous(Matrix::Constant(1, 1, 0.5));
    AsymLinearData data;
    data.p = 2.0;
    const AdmissibilityCertificate cert = check_asymptotically_linear(a, data);
    const double closed = cert.numbers.at("kappa_closed_form");
    const double K = cert.numbers.at("K");
    const double alpha = cert.numbers.at("alpha");
    const int n = static_cast<int>(std::ceil(std::log(1e-14) / std::log(alpha)));
    const double series = oracle::kappa_series(K, alpha, 2.0, n);
    r.note(std::abs(closed - series) <= 1e-6, "kappa closed " + num(closed) + " vs series " + num(series));
    r.note(std::abs(closed - 0.645497) <= 1e-6, "kappa = " + std::to_string(closed));
    return r.done();
}

Outcome invariant_suite()
{
    Report r;
    int passed = 0, total = 0;
    for (unsigned seed = 0; seed < 10; ++seed) {
        for (const props::Result& p : props::run_all(seed)) {
            ++total;
            passed += p.ok ? 1 : 0;
            r.note(p.ok, "seed " + std::to_string(seed) + " " + p.name + ": " + p.detail);
        }
    }
    Report summary;
    Outcome o = r.done();
    if (o.ok) {
        o.detail = std::to_string(passed) + "/" + std::to_string(total) + " property checks";
    }
    return o;
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        std::string name;
        double limit_s;  // 0 = no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "spectrum reproduction", 5.0, spectrum_reproduction},
        {2, "index reproduction", 30.0, index_reproduction},
        {3, "branch oracle", 60.0, branch_oracle},
        {4, "pitchfork fold", 0.0, pitchfork_fold},
        {5, "affine exactness", 0.0, affine_exactness},
        {6, "Jacobian correctness", 0.0, jacobian_check},
        {7, "admissibility certificates", 0.0, admissibility},
        {8, "invariant suite", 0.0, invariant_suite},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0.0 && secs >= c.limit_s) {
            o.ok = false;
            o.detail += "; runtime " + num(secs) + " s exceeds " + num(c.limit_s) + " s";
        }
        failed += o.ok ? 0 : 1;
        std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.id << " " << c.name << " (" << num(secs) << " s): " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
