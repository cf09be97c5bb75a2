#include "homocont/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace homocont {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw std::invalid_argument(what);
    }
}

int mod(int t, int p)
{
    return ((t % p) + p) % p;
}

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// Shared pieces of the triangular family x_{t+1} = [[b_t, 0], [lambda, c_t]] x + delta (0, x1^q).
struct TriangularFamily {
    double alpha;
    double delta;
    int power;  // 0: no nonlinearity

    [[nodiscard]] double b(int t) const { return t < 0 ? 1.0 / alpha : alpha; }
    [[nodiscard]] double c(int t) const { return t < 0 ? alpha : 1.0 / alpha; }

    [[nodiscard]] Vector rhs(double bt, double ct, const Vector& x, double lambda) const
    {
        Vector y(2);
        y(0) = bt * x(0);
        y(1) = lambda * x(0) + ct * x(1);
        if (power > 0) {
            y(1) += delta * std::pow(x(0), power);
        }
        return y;
    }

    [[nodiscard]] Matrix jac(double bt, double ct, const Vector& x, double lambda) const
    {
        Matrix a = mat2(bt, 0.0, lambda, ct);
        if (power > 0) {
            a(1, 0) += delta * power * std::pow(x(0), power - 1);
        }
        return a;
    }
};

ParametricModel triangular_model(const std::string& name, const TriangularFamily fam, double lambda_star)
{
    ParametricModel m;
    m.name = name;
    m.dim = 2;
    m.f = [fam](int t, const Vector& x, double l) { return fam.rhs(fam.b(t), fam.c(t), x, l); };
    m.df = [fam](int t, const Vector& x, double l) { return fam.jac(fam.b(t), fam.c(t), x, l); };
    m.df_dlambda = [](int, const Vector& x, double) {
        Vector v(2);
        v << 0.0, x(0);
        return v;
    };
    m.omega = Box::whole(2);
    auto side = [fam](double bt, double ct) {
        LimitSide s;
        s.period = 1;
        s.f = [fam, bt, ct](int, const Vector& x, double l) { return fam.rhs(bt, ct, x, l); };
        s.df = [fam, bt, ct](int, const Vector& x, double l) { return fam.jac(bt, ct, x, l); };
        s.triangular = true;
        if (fam.power == 0) {
            s.linear_part = [bt, ct](double l) { return std::vector<Matrix>{mat2(bt, 0.0, l, ct)}; };
        }
        return s;
    };
    m.minus = side(1.0 / fam.alpha, fam.alpha);
    m.plus = side(fam.alpha, 1.0 / fam.alpha);
    m.lambda_star = lambda_star;
    m.phi_star = TruncatedSequence::zeros(Window::symmetric(50), 2);
    return m;
}

TriangularFamily family_params(const std::string& name, const ModelParams& p)
{
    const double alpha = p.get("alpha", 0.5);
    require(alpha > -1.0 && alpha < 1.0 && alpha != 0.0, name + ": alpha must lie in (-1,1) without 0");
    double delta = 0.0;
    int power = 0;
    if (name == "transcritical") {
        delta = p.get("delta", 1.0);
        power = 2;
    } else if (name == "pitchfork") {
        delta = p.get("delta", -1.0);
        power = 3;
    }
    require(name == "pw_linear" || delta != 0.0, name + ": delta must be nonzero");
    return {alpha, delta, power};
}

ParametricModel semilinear_demo(const ModelParams& p)
{
    const double a = p.get("a", 0.5);
    const double eps = p.get("eps", 0.2);
    const double beta = p.get("beta", 0.5);
    require(std::abs(a) != 1.0 && a != 0.0, "semilinear_demo: a must be nonzero with |a| != 1");
    require(beta > 0.0 && beta < 1.0, "semilinear_demo: beta must lie in (0,1)");
    auto r = [eps](double x) { return eps * x * x / (1.0 + x * x); };
    auto dr = [eps](double x) { return eps * 2.0 * x / ((1.0 + x * x) * (1.0 + x * x)); };
    ParametricModel m;
    m.name = "semilinear_demo";
    m.dim = 1;
    m.f = [=](int t, const Vector& x, double l) {
        return Vector::Constant(1, a * x(0) + r(x(0)) + l * std::pow(beta, std::abs(t)));
    };
    m.df = [=](int, const Vector& x, double) { return Matrix::Constant(1, 1, a + dr(x(0))); };
    m.df_dlambda = [=](int t, const Vector&, double) { return Vector::Constant(1, std::pow(beta, std::abs(t))); };
    m.omega = Box::whole(1);
    LimitSide s;
    s.f = [=](int, const Vector& x, double) { return Vector::Constant(1, a * x(0) + r(x(0))); };
    s.df = [=](int, const Vector& x, double) { return Matrix::Constant(1, 1, a + dr(x(0))); };
    s.linear_part = [a](double) { return std::vector<Matrix>{Matrix::Constant(1, 1, a)}; };
    // sup |d/dx x^2/(1+x^2)| = 3 sqrt(3) / 8, attained at x = 1/sqrt(3).
    s.lip_r = std::abs(eps) * 3.0 * std::sqrt(3.0) / 8.0;
    m.minus = s;
    m.plus = s;
    m.lambda_star = 0.0;
    m.phi_star = TruncatedSequence::zeros(Window::symmetric(50), 1);
    return m;
}

ParametricModel beverton_holt(const ModelParams& p)
{
    std::vector<double> am;
    std::vector<double> ap;
    if (p.scalars.count("a") != 0U) {
        am = ap = {p.get("a", 0.8)};
    } else {
        am = p.table("a_minus", {0.8});
        ap = p.table("a_plus", {0.5, 1.5});
    }
    const double b0 = p.get("b0", 1.0);
    const double beta = p.get("beta", 0.5);
    require(!am.empty() && !ap.empty(), "beverton_holt: coefficient tables must be nonempty");
    for (double v : am) {
        require(v > 0.0, "beverton_holt: a-tables must be positive");
    }
    for (double v : ap) {
        require(v > 0.0, "beverton_holt: a-tables must be positive");
    }
    require(beta > 0.0 && beta < 1.0, "beverton_holt: b_t = b0 beta^|t| needs beta in (0,1)");
    const int pm = static_cast<int>(am.size());
    const int pp = static_cast<int>(ap.size());
    auto a_of = [=](int t) { return t < 0 ? am[static_cast<std::size_t>(mod(t, pm))] : ap[static_cast<std::size_t>(mod(t, pp))]; };
    ParametricModel m;
    m.name = "beverton_holt";
    m.dim = 1;
    m.f = [=](int t, const Vector& x, double l) {
        return Vector::Constant(1, a_of(t) * x(0) / (1.0 + std::abs(x(0))) + l * b0 * std::pow(beta, std::abs(t)));
    };
    m.df = [=](int t, const Vector& x, double) {
        const double s = 1.0 + std::abs(x(0));
        return Matrix::Constant(1, 1, a_of(t) / (s * s));
    };
    m.df_dlambda = [=](int t, const Vector&, double) { return Vector::Constant(1, b0 * std::pow(beta, std::abs(t))); };
    m.omega = Box::whole(1);
    auto side = [](std::vector<double> table) {
        LimitSide s;
        const int per = static_cast<int>(table.size());
        s.period = per;
        s.f = [table, per](int t, const Vector& x, double) {
            return Vector::Constant(1, table[static_cast<std::size_t>(mod(t, per))] * x(0) / (1.0 + std::abs(x(0))));
        };
        s.df = [table, per](int t, const Vector& x, double) {
            const double q = 1.0 + std::abs(x(0));
            return Matrix::Constant(1, 1, table[static_cast<std::size_t>(mod(t, per))] / (q * q));
        };
        s.lipschitz = table;
        return s;
    };
    m.minus = side(am);
    m.plus = side(ap);
    m.lambda_star = 0.0;
    m.phi_star = TruncatedSequence::zeros(Window::symmetric(50), 1);
    return m;
}

ParametricModel scalar_affine(const ModelParams& p)
{
    const double a = p.get("a", 0.5);
    require(std::abs(a) != 1.0, "scalar_affine: |a| must differ from 1");
    ParametricModel m;
    m.name = "scalar_affine";
    m.dim = 1;
    m.f = [a](int t, const Vector& x, double l) { return Vector::Constant(1, a * x(0) + (t == 0 ? l : 0.0)); };
    m.df = [a](int, const Vector&, double) { return Matrix::Constant(1, 1, a); };
    m.df_dlambda = [](int t, const Vector&, double) { return Vector::Constant(1, t == 0 ? 1.0 : 0.0); };
    m.omega = Box::whole(1);
    LimitSide s;
    s.f = [a](int, const Vector& x, double) { return Vector::Constant(1, a * x(0)); };
    s.df = [a](int, const Vector&, double) { return Matrix::Constant(1, 1, a); };
    s.linear_part = [a](double) { return std::vector<Matrix>{Matrix::Constant(1, 1, a)}; };
    s.lipschitz = {std::abs(a)};
    m.minus = s;
    m.plus = s;
    m.lambda_star = 0.0;
    m.phi_star = TruncatedSequence::zeros(Window::symmetric(50), 1);
    return m;
}

// ---- custom models ------------------------------------------------------

struct Monomial {
    int row = 0;
    double coeff = 0.0;
    std::vector<int> powers;
};

Matrix matrix_from_json(const json& j, int d)
{
    require(j.is_array() && static_cast<int>(j.size()) == d, "custom: coefficient matrices must be d x d");
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        require(j[static_cast<std::size_t>(r)].is_array() && static_cast<int>(j[static_cast<std::size_t>(r)].size()) == d,
                "custom: coefficient matrices must be d x d");
        for (int c = 0; c < d; ++c) {
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

std::vector<Matrix> table_from_json(const json& side, int d)
{
    require(side.contains("coefficients"), "custom: each side needs a \"coefficients\" list");
    std::vector<Matrix> out;
    for (const auto& m : side.at("coefficients")) {
        out.push_back(matrix_from_json(m, d));
    }
    require(!out.empty(), "custom: coefficient list must be nonempty");
    return out;
}

double monomial_value(const Monomial& mono, const Vector& x)
{
    double v = mono.coeff;
    for (std::size_t i = 0; i < mono.powers.size(); ++i) {
        v *= std::pow(x(static_cast<Eigen::Index>(i)), mono.powers[i]);
    }
    return v;
}

double monomial_partial(const Monomial& mono, const Vector& x, std::size_t k)
{
    if (mono.powers[k] == 0) {
        return 0.0;
    }
    double v = mono.coeff * mono.powers[k] * std::pow(x(static_cast<Eigen::Index>(k)), mono.powers[k] - 1);
    for (std::size_t i = 0; i < mono.powers.size(); ++i) {
        if (i != k) {
            v *= std::pow(x(static_cast<Eigen::Index>(i)), mono.powers[i]);
        }
    }
    return v;
}

BuiltinModel custom_model(const json& j)
{
    require(j.contains("dim"), "custom: \"dim\" is required");
    const int d = j.at("dim").get<int>();
    require(d >= 1, "custom: dim must be positive");
    require(j.contains("minus") && j.contains("plus"), "custom: \"minus\" and \"plus\" coefficient tables are required");
    const std::vector<Matrix> tm = table_from_json(j.at("minus"), d);
    const std::vector<Matrix> tp = table_from_json(j.at("plus"), d);
    const Matrix coupling = j.contains("lambda_coupling") ? matrix_from_json(j.at("lambda_coupling"), d)
                                                          : Matrix::Zero(d, d);
    Vector forcing = Vector::Zero(d);
    double rate = 0.5;
    if (j.contains("forcing")) {
        const auto& fj = j.at("forcing");
        const auto v = fj.at("vector").get<std::vector<double>>();
        require(static_cast<int>(v.size()) == d, "custom: forcing vector has wrong length");
        forcing = Eigen::Map<const Vector>(v.data(), d);
        rate = fj.value("rate", 0.5);
        require(rate > 0.0 && rate < 1.0, "custom: forcing rate must lie in (0,1)");
    }
    std::vector<Monomial> monos;
    if (j.contains("polynomial")) {
        for (const auto& mj : j.at("polynomial")) {
            Monomial mono;
            mono.row = mj.at("row").get<int>();
            mono.coeff = mj.at("coeff").get<double>();
            mono.powers = mj.at("powers").get<std::vector<int>>();
            require(mono.row >= 0 && mono.row < d, "custom: monomial row out of range");
            require(static_cast<int>(mono.powers.size()) == d, "custom: monomial powers need d entries");
            int degree = 0;
            for (int pw : mono.powers) {
                require(pw >= 0, "custom: monomial powers must be nonnegative");
                degree += pw;
            }
            require(degree >= 2, "custom: polynomial terms must be at least quadratic");
            monos.push_back(mono);
        }
    }
    const int pm = static_cast<int>(tm.size());
    const int pp = static_cast<int>(tp.size());
    auto a_of = [=](int t) -> const Matrix& {
        return t < 0 ? tm[static_cast<std::size_t>(mod(t, pm))] : tp[static_cast<std::size_t>(mod(t, pp))];
    };
    auto nonlinear = [monos, d](const Vector& x) {
        Vector y = Vector::Zero(d);
        for (const auto& mono : monos) {
            y(mono.row) += monomial_value(mono, x);
        }
        return y;
    };
    auto nonlinear_jac = [monos, d](const Vector& x) {
        Matrix a = Matrix::Zero(d, d);
        for (const auto& mono : monos) {
            for (int k = 0; k < d; ++k) {
                a(mono.row, k) += monomial_partial(mono, x, static_cast<std::size_t>(k));
            }
        }
        return a;
    };
    BuiltinModel out;
    out.name = "custom";
    ParametricModel& m = out.model;
    m.name = j.value("name", std::string("custom"));
    m.dim = d;
    m.f = [=](int t, const Vector& x, double l) {
        return Vector(a_of(t) * x + l * coupling * x + l * std::pow(rate, std::abs(t)) * forcing + nonlinear(x));
    };
    m.df = [=](int t, const Vector& x, double l) { return Matrix(a_of(t) + l * coupling + nonlinear_jac(x)); };
    m.df_dlambda = [=](int t, const Vector& x, double) {
        return Vector(coupling * x + std::pow(rate, std::abs(t)) * forcing);
    };
    m.omega = Box::whole(d);
    bool lower = coupling.isLowerTriangular();
    for (const auto& a : tm) {
        lower = lower && a.isLowerTriangular();
    }
    for (const auto& a : tp) {
        lower = lower && a.isLowerTriangular();
    }
    for (const auto& mono : monos) {
        for (int k = mono.row; k < d; ++k) {
            lower = lower && mono.powers[static_cast<std::size_t>(k)] == 0;
        }
    }
    auto side = [&](const std::vector<Matrix>& table) {
        LimitSide s;
        const int per = static_cast<int>(table.size());
        s.period = per;
        s.f = [=](int t, const Vector& x, double l) {
            return Vector(table[static_cast<std::size_t>(mod(t, per))] * x + l * coupling * x + nonlinear(x));
        };
        s.df = [=](int t, const Vector& x, double l) {
            return Matrix(table[static_cast<std::size_t>(mod(t, per))] + l * coupling + nonlinear_jac(x));
        };
        if (monos.empty()) {
            s.linear_part = [table, coupling](double l) {
                std::vector<Matrix> out_table;
                for (const auto& a : table) {
                    out_table.push_back(a + l * coupling);
                }
                return out_table;
            };
        }
        s.triangular = lower;
        return s;
    };
    m.minus = side(tm);
    m.plus = side(tp);
    m.lambda_star = j.value("lambda_star", 0.0);
    m.phi_star = TruncatedSequence::zeros(Window::symmetric(j.value("half_window", 50)), d);
    out.params.scalars["dim"] = d;
    return out;
}

}  // namespace

double ModelParams::get(const std::string& key, double fallback) const
{
    const auto it = scalars.find(key);
    return it == scalars.end() ? fallback : it->second;
}

std::vector<double> ModelParams::table(const std::string& key, std::vector<double> fallback) const
{
    const auto it = tables.find(key);
    return it == tables.end() ? std::move(fallback) : it->second;
}

const std::vector<std::string>& builtin_names()
{
    static const std::vector<std::string> names{"pw_linear",    "transcritical", "pitchfork",
                                                "semilinear_demo", "beverton_holt", "scalar_affine"};
    return names;
}

BuiltinModel build_model(const std::string& name, const ModelParams& params)
{
    BuiltinModel out;
    out.name = name;
    out.params = params;
    if (name == "pw_linear" || name == "transcritical" || name == "pitchfork") {
        out.model = triangular_model(name, family_params(name, params), params.get("lambda_star", 0.5));
    } else if (name == "semilinear_demo") {
        out.model = semilinear_demo(params);
    } else if (name == "beverton_holt") {
        out.model = beverton_holt(params);
    } else if (name == "scalar_affine") {
        out.model = scalar_affine(params);
    } else {
        std::string list;
        for (const auto& n : builtin_names()) {
            list += (list.empty() ? "" : ", ") + n;
        }
        throw std::invalid_argument("unknown model '" + name + "'; builtins: " + list + " (or a custom JSON model)");
    }
    if (name == "semilinear_demo" || name == "beverton_holt" || name == "scalar_affine") {
        out.model.lambda_star = params.get("lambda_star", 0.0);
    }
    return out;
}

BuiltinModel model_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("model config is not valid JSON: ") + e.what());
    }
    require(j.is_object() && j.contains("model"), "model config needs a \"model\" member");
    const std::string name = j.at("model").get<std::string>();
    if (name == "custom") {
        return custom_model(j);
    }
    ModelParams p;
    for (const auto& [key, value] : j.items()) {
        if (key == "model") {
            continue;
        }
        if (value.is_number()) {
            p.scalars[key] = value.get<double>();
        } else if (value.is_array()) {
            p.tables[key] = value.get<std::vector<double>>();
        } else {
            throw std::invalid_argument("model parameter '" + key + "' must be a number or a numeric array");
        }
    }
    return build_model(name, p);
}

Window default_window(const BuiltinModel& m)
{
    if (m.model.phi_star) {
        return m.model.phi_star->window();
    }
    return Window::symmetric(50);
}

std::vector<Vector> oracle_branch(const std::string& name, const ModelParams& params, double lambda)
{
    require(name == "transcritical" || name == "pitchfork", "closed-form branch only for transcritical and pitchfork");
    const TriangularFamily fam = family_params(name, params);
    const double a = fam.alpha;
    const double dl = fam.delta;
    if (name == "transcritical") {
        const double q = a * a + a + 1.0;
        Vector xi(2);
        xi << -2.0 * q / (dl * (a + 1.0) * (a + 1.0)) * lambda,
            -2.0 * a * q / (dl * std::pow(a + 1.0, 4)) * lambda * lambda;
        return {xi};
    }
    const double sq = -2.0 * lambda / dl;
    if (sq < 0.0) {
        throw std::domain_error("no real branch");
    }
    // Both asymptotic conditions on xi_2 (decay as t -> +inf and t -> -inf)
    // together give xi_1^2 = -2 lambda / delta and
    // xi_2 = -delta alpha xi_1^3 / (2 (1 + alpha^2)), odd in xi_1.
    const double x1 = std::sqrt(sq);
    const double x2 = -dl * a * x1 * x1 * x1 / (2.0 * (1.0 + a * a));
    Vector plus(2);
    Vector minus(2);
    plus << x1, x2;
    minus << -x1, -x2;
    return {plus, minus};
}

Vector oracle_solution(const ModelParams& params, const Vector& xi, double lambda, int t)
{
    const TriangularFamily fam = family_params("pw_linear", params);
    require(xi.size() == 2, "oracle_solution needs a 2-vector");
    Vector x = xi;
    if (t >= 0) {
        for (int s = 0; s < t; ++s) {
            x = mat2(fam.b(s), 0.0, lambda, fam.c(s)) * x;
        }
    } else {
        for (int s = -1; s >= t; --s) {
            // Inverse of the lower triangular coefficient at time s.
            const double b = fam.b(s);
            const double c = fam.c(s);
            x = mat2(1.0 / b, 0.0, -lambda / (b * c), 1.0 / c) * x;
        }
    }
    return x;
}

TruncatedSequence oracle_seed(const BuiltinModel& m, double lambda, const Window& window, int sign)
{
    const int d = m.model.dim;
    TruncatedSequence phi(window, d);
    if (m.name == "transcritical" || m.name == "pitchfork") {
        const TriangularFamily fam = family_params(m.name, m.params);
        const auto xis = oracle_branch(m.name, m.params, lambda);
        const Vector xi = (sign >= 0 || xis.size() == 1) ? xis.front() : xis.back();
        const double a = fam.alpha;
        // First component alpha^|t| xi_1; the second is the unique bounded
        // solution of the inhomogeneous scalar recursion, summed along the
        // stable direction on each half axis.
        auto x1 = [&](int t) { return std::pow(a, std::abs(t)) * xi(0); };
        auto g = [&](int t) { return lambda * x1(t) + fam.delta * std::pow(x1(t), fam.power); };
        const double cutoff = 1e-300;
        for (int t = window.t_minus(); t <= window.t_plus(); ++t) {
            double x2 = 0.0;
            if (t >= 0) {
                double w = a;
                for (int k = 0; std::abs(w) > cutoff && k < 4000; ++k, w *= a) {
                    x2 -= w * g(t + k);
                }
            } else {
                double w = 1.0;
                for (int k = 1; std::abs(w) > cutoff && k < 4000; ++k, w *= a) {
                    x2 += w * g(t - k);
                }
            }
            Vector v(2);
            v << x1(t), x2;
            phi.set(t, v);
        }
    } else if (m.name == "scalar_affine") {
        const double a = m.params.get("a", 0.5);
        for (int t = window.t_minus(); t <= window.t_plus(); ++t) {
            // Bounded solution of x_{t+1} = a x_t + lambda delta_{t,0}.
            double v = 0.0;
            if (std::abs(a) < 1.0) {
                v = t >= 1 ? lambda * std::pow(a, t - 1) : 0.0;
            } else {
                v = t <= 0 ? -lambda * std::pow(a, t - 1) : 0.0;
            }
            phi.set(t, Vector::Constant(1, v));
        }
    }
    return phi;
}

}  // namespace homocont
