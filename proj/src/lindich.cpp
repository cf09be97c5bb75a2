#include "homocont/lindich.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace homocont {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix orthonormalize(const Matrix& y)
{
    if (y.cols() == 0) {
        return y;
    }
    Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Orthonormal basis of span(y)^perp.
Matrix orth_complement(const Matrix& y)
{
    const Eigen::Index d = y.rows();
    const Eigen::Index m = y.cols();
    if (m == 0) {
        return Matrix::Identity(d, d);
    }
    Eigen::HouseholderQR<Matrix> qr(y);
    const Matrix q = qr.householderQ();
    return q.rightCols(d - m);
}

Matrix seeded_basis(int d, int m)
{
    std::mt19937 gen(20240917u + 31u * static_cast<unsigned>(d) + static_cast<unsigned>(m));
    std::normal_distribution<double> n01;
    Matrix x(d, m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < d; ++i) {
            x(i, j) = n01(gen);
        }
    }
    return orthonormalize(x);
}

// Forward-decaying fiber at time t: complement of the dominant subspace of
// the adjoint iterated backwards from t + horizon.
Matrix stable_fiber(const LinearSystem& sys, int t, int k, int horizon)
{
    const int d = sys.dim();
    if (k >= d) {
        return Matrix::Identity(d, d);
    }
    if (k <= 0) {
        return Matrix(d, 0);
    }
    Matrix y = seeded_basis(d, d - k);
    for (int tau = t + horizon - 1; tau >= t; --tau) {
        y = orthonormalize(sys.at(tau).transpose() * y);
    }
    return orth_complement(y);
}

// Backward-decaying fiber at time t: dominant subspace of forward iteration
// started at t - horizon.
Matrix unstable_fiber(const LinearSystem& sys, int t, int m, int horizon)
{
    const int d = sys.dim();
    if (m <= 0) {
        return Matrix(d, 0);
    }
    if (m >= d) {
        return Matrix::Identity(d, d);
    }
    Matrix y = seeded_basis(d, m);
    for (int tau = t - horizon; tau < t; ++tau) {
        y = orthonormalize(sys.at(tau) * y);
    }
    return y;
}

double smallest_singular_value(const Matrix& m)
{
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().minCoeff();
}

// Growth-rate splitting of one half axis.
struct Split {
    bool marginal = false;
    int stable = 0;
    double stable_max = 0.0;   // largest rate below 1
    double unstable_min = kInf;  // smallest rate above 1
    bool heuristic = false;
};

Split split_points(const std::vector<double>& rates, double tol)
{
    Split s;
    for (double r : rates) {
        if (std::abs(r - 1.0) <= tol) {
            s.marginal = true;
        } else if (r < 1.0) {
            ++s.stable;
            s.stable_max = std::max(s.stable_max, r);
        } else {
            s.unstable_min = std::min(s.unstable_min, r);
        }
    }
    return s;
}

// Steklov averages of the diagonal of the discrete QR flow: one band
// [min, max] per coordinate, the standard QR approximation of the
// Sacker-Sell spectrum.
std::vector<SpectralInterval> steklov_bands(const LinearSystem& sys, int t_begin, int t_end)
{
    const int d = sys.dim();
    const int steps = t_end - t_begin;
    const int p = sys.period_hint();
    int block = std::max(p, (steps / 3) / p * p);
    if (steps < 6 || block > steps) {
        throw std::invalid_argument("window too short for growth-rate estimation");
    }
    const int burn = block;
    Matrix q = Matrix::Identity(d, d);
    std::vector<Vector> logs;
    logs.reserve(static_cast<std::size_t>(steps));
    for (int tau = t_begin - burn; tau < t_end; ++tau) {
        Eigen::HouseholderQR<Matrix> qr(sys.at(tau) * q);
        Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        q = qr.householderQ();
        Vector lr(d);
        for (int i = 0; i < d; ++i) {
            const double rii = std::abs(r(i, i));
            lr(i) = rii > 0.0 ? std::log(rii) : -700.0;
        }
        if (tau >= t_begin) {
            logs.push_back(lr);
        }
    }
    Vector lo = Vector::Constant(d, kInf);
    Vector hi = Vector::Constant(d, -kInf);
    Vector acc = Vector::Zero(d);
    for (int j = 0; j < block; ++j) {
        acc += logs[static_cast<std::size_t>(j)];
    }
    for (int start = 0;; ++start) {
        const Vector avg = acc / block;
        lo = lo.cwiseMin(avg);
        hi = hi.cwiseMax(avg);
        if (start + block >= steps) {
            break;
        }
        acc += logs[static_cast<std::size_t>(start + block)] - logs[static_cast<std::size_t>(start)];
    }
    std::vector<SpectralInterval> bands;
    for (int i = 0; i < d; ++i) {
        bands.push_back({std::exp(lo(i)), std::exp(hi(i))});
    }
    return bands;
}

Split split_bands(const std::vector<SpectralInterval>& bands, double tol)
{
    Split s;
    s.heuristic = true;
    for (const auto& b : bands) {
        if (b.hi < 1.0 - tol) {
            ++s.stable;
            s.stable_max = std::max(s.stable_max, b.hi);
        } else if (b.lo > 1.0 + tol) {
            s.unstable_min = std::min(s.unstable_min, b.lo);
        } else {
            s.marginal = true;
        }
    }
    return s;
}

// Part of the window belonging to a half axis, as a step range [begin, end).
std::pair<int, int> half_range(const Window& w, Interval side)
{
    if (side == Interval::ZPlus) {
        return {std::max(0, w.t_minus()), std::max(w.t_plus(), 1)};
    }
    return {std::min(w.t_minus(), -1), std::min(0, w.t_plus())};
}

Split half_split(const LinearSystem& sys, Interval side, const Window& w, double tol)
{
    if (sys.structure() == Structure::General) {
        const auto [b, e] = half_range(w, side);
        return split_bands(steklov_bands(sys, b, e), tol);
    }
    return split_points(sys.limit(side).floquet_rates(), tol);
}

int auto_horizon(double gap_ratio, const Window& w, bool stationary)
{
    double r = gap_ratio;
    if (!(r > 0.0) || !(r < 1.0)) {
        r = 0.5;
    }
    r = std::max(r, 1e-3);
    const int base = static_cast<int>(std::ceil(std::log(1e-17) / std::log(r))) + 16;
    const int transient = stationary ? 0 : w.length();
    return std::clamp(base + transient, 24, 6000);
}

double gap_ratio(const Split& s)
{
    if (s.stable_max <= 0.0 || !std::isfinite(s.unstable_min)) {
        return 0.5;
    }
    return s.stable_max / s.unstable_min;
}

double alpha_bound(const Split& s)
{
    double a = s.stable_max;
    if (std::isfinite(s.unstable_min)) {
        a = std::max(a, 1.0 / s.unstable_min);
    }
    return a;
}

}  // namespace

std::string to_string(Interval iv)
{
    switch (iv) {
    case Interval::Z: return "Z";
    case Interval::ZPlus: return "Z+";
    case Interval::ZMinus: return "Z-";
    }
    return "?";
}

Interval parse_interval(const std::string& s)
{
    if (s == "Z") {
        return Interval::Z;
    }
    if (s == "Z+" || s == "Zplus" || s == "Z_plus") {
        return Interval::ZPlus;
    }
    if (s == "Z-" || s == "Zminus" || s == "Z_minus") {
        return Interval::ZMinus;
    }
    throw std::invalid_argument("unknown interval tag '" + s + "' (expected Z, Z+ or Z-)");
}

std::string to_string(Structure s)
{
    switch (s) {
    case Structure::Autonomous: return "autonomous";
    case Structure::Periodic: return "periodic";
    case Structure::AsymPeriodic: return "asym_periodic";
    case Structure::General: return "general";
    }
    return "?";
}

PeriodicTable::PeriodicTable(std::vector<Matrix> coeffs) : coeffs_(std::move(coeffs))
{
    if (coeffs_.empty()) {
        throw std::invalid_argument("periodic table needs at least one matrix");
    }
    const auto d = coeffs_.front().rows();
    for (const auto& a : coeffs_) {
        if (a.rows() != d || a.cols() != d || d == 0) {
            throw std::invalid_argument("periodic table entries must be square of equal size");
        }
        if (!a.allFinite()) {
            throw std::invalid_argument("periodic table entries must be finite");
        }
    }
}

const Matrix& PeriodicTable::at(int t) const
{
    const int p = period();
    return coeffs_[static_cast<std::size_t>(((t % p) + p) % p)];
}

Matrix PeriodicTable::monodromy() const
{
    Matrix m = Matrix::Identity(dim(), dim());
    for (const auto& a : coeffs_) {
        m = a * m;
    }
    return m;
}

std::vector<double> PeriodicTable::floquet_rates() const
{
    Eigen::EigenSolver<Matrix> es(monodromy(), false);
    std::vector<double> rates;
    const double inv_p = 1.0 / period();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        rates.push_back(std::pow(std::abs(es.eigenvalues()(i)), inv_p));
    }
    std::sort(rates.begin(), rates.end());
    return rates;
}

PeriodicTable PeriodicTable::scaled(double gamma) const
{
    std::vector<Matrix> c;
    c.reserve(coeffs_.size());
    for (const auto& a : coeffs_) {
        c.push_back(a / gamma);
    }
    return PeriodicTable(std::move(c));
}

LinearSystem LinearSystem::autonomous(Matrix a)
{
    PeriodicTable table({a});
    LinearSystem s;
    s.dim_ = table.dim();
    s.structure_ = Structure::Autonomous;
    s.coeff_ = [a = std::move(a)](int) { return a; };
    s.minus_ = table;
    s.plus_ = table;
    return s;
}

LinearSystem LinearSystem::periodic(std::vector<Matrix> table_in)
{
    PeriodicTable table(std::move(table_in));
    LinearSystem s;
    s.dim_ = table.dim();
    s.structure_ = table.period() == 1 ? Structure::Autonomous : Structure::Periodic;
    s.coeff_ = [table](int t) { return table.at(t); };
    s.minus_ = table;
    s.plus_ = table;
    s.period_hint_ = table.period();
    return s;
}

LinearSystem LinearSystem::asym_periodic(int dim, CoeffFn coeff, PeriodicTable minus, PeriodicTable plus)
{
    if (minus.dim() != dim || plus.dim() != dim) {
        throw std::invalid_argument("limit tables do not match system dimension");
    }
    LinearSystem s;
    s.dim_ = dim;
    s.structure_ = Structure::AsymPeriodic;
    s.coeff_ = std::move(coeff);
    s.period_hint_ = std::max(minus.period(), plus.period());
    s.minus_ = std::move(minus);
    s.plus_ = std::move(plus);
    return s;
}

LinearSystem LinearSystem::general(int dim, CoeffFn coeff)
{
    if (dim <= 0) {
        throw std::invalid_argument("system dimension must be positive");
    }
    LinearSystem s;
    s.dim_ = dim;
    s.structure_ = Structure::General;
    s.coeff_ = std::move(coeff);
    return s;
}

Matrix LinearSystem::at(int t) const
{
    Matrix a = coeff_(t);
    if (a.rows() != dim_ || a.cols() != dim_) {
        throw std::invalid_argument("coefficient at t=" + std::to_string(t) + " has wrong shape");
    }
    return a;
}

const PeriodicTable& LinearSystem::limit(Interval side) const
{
    if (structure_ == Structure::General || side == Interval::Z) {
        throw std::invalid_argument("limit data requested for a general system or for Z");
    }
    return side == Interval::ZPlus ? *plus_ : *minus_;
}

LinearSystem LinearSystem::scaled(double gamma) const
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("scaling factor must be positive");
    }
    LinearSystem s = *this;
    s.coeff_ = [inner = coeff_, gamma](int t) { return Matrix(inner(t) / gamma); };
    if (minus_) {
        s.minus_ = minus_->scaled(gamma);
    }
    if (plus_) {
        s.plus_ = plus_->scaled(gamma);
    }
    return s;
}

LinearSystem LinearSystem::as_general() const
{
    LinearSystem s = *this;
    s.structure_ = Structure::General;
    s.minus_.reset();
    s.plus_.reset();
    return s;
}

double LinearSystem::bound(const Window& w) const
{
    double m = 0.0;
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        m = std::max(m, op_norm(at(t)));
    }
    return m;
}

void LinearSystem::validate(const Window& w, double tol) const
{
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        if (!at(t).allFinite()) {
            throw std::invalid_argument("non-finite coefficient at t=" + std::to_string(t));
        }
    }
    if (structure_ == Structure::Autonomous || structure_ == Structure::Periodic) {
        for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
            if (op_norm(at(t) - plus_->at(t)) > tol) {
                throw std::invalid_argument("periodicity violated at t=" + std::to_string(t));
            }
        }
    } else if (structure_ == Structure::AsymPeriodic) {
        const double left = op_norm(at(w.t_minus()) - minus_->at(w.t_minus()));
        const double right = op_norm(at(w.t_plus()) - plus_->at(w.t_plus()));
        if (left > tol || right > tol) {
            throw std::invalid_argument("coefficients do not approach their limits at the window ends");
        }
    }
}

Matrix evolution(const LinearSystem& sys, int t, int s)
{
    if (s > t) {
        throw std::invalid_argument("evolution(t, s) requires s <= t");
    }
    Matrix phi = Matrix::Identity(sys.dim(), sys.dim());
    for (int tau = s; tau < t; ++tau) {
        phi = sys.at(tau) * phi;
    }
    return phi;
}

InvariantProjectors::InvariantProjectors(const LinearSystem& sys, Interval interval, int stable_rank, int horizon)
    : sys_(sys), interval_(interval), rank_(stable_rank), horizon_(horizon)
{
    if (stable_rank < 0 || stable_rank > sys.dim()) {
        throw std::invalid_argument("stable rank out of range");
    }
    if (horizon_ <= 0) {
        horizon_ = 200;
    }
}

InvariantProjectors::InvariantProjectors(const LinearSystem& sys, const DichotomyReport& report)
    : InvariantProjectors(sys, report.interval, report.projector_rank, report.horizon)
{
    if (!report.has_ed) {
        throw std::invalid_argument("invariant projectors need a dichotomy");
    }
}

void InvariantProjectors::check_time(int t) const
{
    if ((interval_ == Interval::ZPlus && t < 0) || (interval_ == Interval::ZMinus && t > 0)) {
        throw std::out_of_range("time " + std::to_string(t) + " outside " + to_string(interval_));
    }
}

Matrix InvariantProjectors::range_basis(int t) const
{
    check_time(t);
    const int d = sys_.dim();
    if (interval_ != Interval::ZMinus) {
        return stable_fiber(sys_, t, rank_, horizon_);
    }
    // Z-: range chosen orthogonal to the kernel at 0, pulled back invariantly.
    Matrix r = orth_complement(unstable_fiber(sys_, 0, d - rank_, horizon_));
    for (int tau = -1; tau >= t && r.cols() > 0; --tau) {
        r = orthonormalize(sys_.at(tau).colPivHouseholderQr().solve(r));
    }
    return r;
}

Matrix InvariantProjectors::kernel_basis(int t) const
{
    check_time(t);
    const int d = sys_.dim();
    if (interval_ != Interval::ZPlus) {
        return unstable_fiber(sys_, t, d - rank_, horizon_);
    }
    Matrix n = orth_complement(stable_fiber(sys_, 0, rank_, horizon_));
    for (int tau = 0; tau < t && n.cols() > 0; ++tau) {
        n = orthonormalize(sys_.at(tau) * n);
    }
    return n;
}

Matrix InvariantProjectors::projector(int t) const
{
    const int d = sys_.dim();
    const Matrix r = range_basis(t);
    const Matrix n = kernel_basis(t);
    Matrix b(d, d);
    b << r, n;
    Eigen::FullPivLU<Matrix> lu(b);
    if (!lu.isInvertible()) {
        throw NumericalError("stable and unstable fibers are not complementary at t=" + std::to_string(t));
    }
    Matrix sel = Matrix::Zero(d, d);
    sel.topLeftCorner(rank_, rank_).setIdentity();
    return b * sel * lu.inverse();
}

double fit_dichotomy_constant(const LinearSystem& sys, const InvariantProjectors& proj, int t_lo, int t_hi,
                              double alpha)
{
    const int d = sys.dim();
    const int max_gap = 80;
    const Matrix id = Matrix::Identity(d, d);
    std::vector<Matrix> p;
    std::vector<Matrix> back_step;  // inverse of A_tau restricted to N(P_tau), on N(P_{tau+1})
    for (int t = t_lo; t <= t_hi; ++t) {
        p.push_back(proj.projector(t));
        if (t < t_hi) {
            const Matrix n = proj.kernel_basis(t);
            if (n.cols() == 0) {
                back_step.push_back(Matrix::Zero(d, d));
            } else {
                const Matrix w = sys.at(t) * n;
                back_step.push_back(n * w.completeOrthogonalDecomposition().pseudoInverse());
            }
        }
    }
    auto idx = [t_lo](int t) { return static_cast<std::size_t>(t - t_lo); };
    // Both products are re-projected every step so rounding errors cannot
    // leak into the complementary (growing) direction.
    double k = 1.0;
    for (int s = t_lo; s <= t_hi; ++s) {
        Matrix fwd = p[idx(s)];
        for (int t = s; t <= std::min(t_hi, s + max_gap); ++t) {
            if (t > s) {
                fwd = p[idx(t)] * sys.at(t - 1) * fwd;
            }
            const double n = op_norm(fwd);
            if (n > 0.0) {
                k = std::max(k, n / std::pow(alpha, t - s));
            }
        }
    }
    for (int t = t_lo; t <= t_hi; ++t) {
        Matrix bwd = id - p[idx(t)];
        for (int s = t; s >= std::max(t_lo, t - max_gap); --s) {
            if (s < t) {
                bwd = (id - p[idx(s)]) * back_step[idx(s)] * bwd;
            }
            const double n = op_norm(bwd);
            if (n > 0.0) {
                k = std::max(k, n / std::pow(alpha, t - s));
            }
        }
    }
    return k;
}

DichotomyReport detect_ed(const LinearSystem& sys, Interval interval, const Window& window, const EdOptions& opts)
{
    if (window.length() < std::max(3, 2 * sys.period_hint())) {
        throw std::invalid_argument("window shorter than twice the structural period");
    }
    DichotomyReport rep;
    rep.interval = interval;
    rep.heuristic = sys.structure() == Structure::General;
    const int d = sys.dim();
    const bool stationary = sys.structure() == Structure::Autonomous || sys.structure() == Structure::Periodic;

    Split split;
    double ratio = 0.5;
    if (interval != Interval::Z || stationary) {
        const Interval side = interval == Interval::ZMinus ? Interval::ZMinus : Interval::ZPlus;
        if (interval == Interval::Z && sys.structure() == Structure::General) {
            // unreachable: general systems are never stationary
        }
        split = half_split(sys, side, window, opts.tol);
        if (split.marginal) {
            rep.diagnostic = "marginal";
            return rep;
        }
        ratio = gap_ratio(split);
        rep.horizon = opts.horizon > 0 ? opts.horizon : auto_horizon(ratio, window, stationary);
    } else {
        const Split plus = half_split(sys, Interval::ZPlus, window, opts.tol);
        const Split minus = half_split(sys, Interval::ZMinus, window, opts.tol);
        if (plus.marginal || minus.marginal) {
            rep.diagnostic = "marginal";
            return rep;
        }
        if (plus.stable != minus.stable) {
            rep.diagnostic = "rank mismatch";
            return rep;
        }
        split = plus;
        split.stable_max = std::max(plus.stable_max, minus.stable_max);
        split.unstable_min = std::min(plus.unstable_min, minus.unstable_min);
        ratio = std::max(gap_ratio(plus), gap_ratio(minus));
        rep.horizon = opts.horizon > 0 ? opts.horizon : auto_horizon(ratio, window, false);
        Matrix b(d, d);
        b << stable_fiber(sys, 0, split.stable, rep.horizon), unstable_fiber(sys, 0, d - split.stable, rep.horizon);
        if (smallest_singular_value(b) <= opts.transversality_tol) {
            rep.diagnostic = "non-transversal";
            return rep;
        }
    }

    rep.projector_rank = split.stable;
    const InvariantProjectors proj(sys, interval, split.stable, rep.horizon);
    rep.projector_at_0 = proj.projector(0);

    int t_lo = window.t_minus();
    int t_hi = window.t_plus();
    if (interval == Interval::ZPlus) {
        t_lo = 0;
        t_hi = std::max(t_hi, 2);
    } else if (interval == Interval::ZMinus) {
        t_hi = 0;
        t_lo = std::min(t_lo, -2);
    }
    const double alpha0 = std::clamp(alpha_bound(split), 1e-6, 1.0 - 1e-12);
    for (double alpha = alpha0; alpha < 1.0; alpha *= 1.02) {
        const double k = fit_dichotomy_constant(sys, proj, t_lo, t_hi, alpha);
        if (k <= opts.k_cap) {
            rep.has_ed = true;
            rep.alpha = alpha;
            rep.K = k;
            return rep;
        }
    }
    rep.diagnostic = "dichotomy constant exceeds cap";
    return rep;
}

namespace {

std::vector<SpectralInterval> merge(std::vector<SpectralInterval> v, double resolution)
{
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
    std::vector<SpectralInterval> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.lo <= out.back().hi + resolution) {
            out.back().hi = std::max(out.back().hi, iv.hi);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

std::vector<SpectralInterval> critical_bands(const LinearSystem& sys, Interval interval, const Window& w)
{
    std::vector<SpectralInterval> bands;
    auto add_side = [&](Interval side) {
        if (sys.structure() == Structure::General) {
            const auto [b, e] = half_range(w, side);
            for (const auto& band : steklov_bands(sys, b, e)) {
                bands.push_back(band);
            }
        } else {
            for (double r : sys.limit(side).floquet_rates()) {
                if (r > 0.0) {
                    bands.push_back({r, r});
                }
            }
        }
    };
    if (interval != Interval::ZMinus) {
        add_side(Interval::ZPlus);
    }
    if (interval != Interval::ZPlus) {
        add_side(Interval::ZMinus);
    }
    return bands;
}

bool has_ed_scaled(const LinearSystem& sys, Interval interval, const Window& w, double gamma, const EdOptions& ed)
{
    return detect_ed(sys.scaled(gamma), interval, w, ed).has_ed;
}

}  // namespace

SpectrumReport spectrum(const LinearSystem& sys, Interval interval, const Window& window, const SpectrumOptions& opts)
{
    SpectrumReport rep;
    rep.interval = interval;
    rep.heuristic = sys.structure() == Structure::General;

    double gmin = 0.0;
    double gmax = 0.0;
    if (opts.gamma_min && opts.gamma_max) {
        gmin = *opts.gamma_min;
        gmax = *opts.gamma_max;
    } else {
        double smin = kInf;
        double smax = 0.0;
        for (int t = window.t_minus(); t <= window.t_plus(); ++t) {
            Eigen::JacobiSVD<Matrix> svd(sys.at(t));
            smax = std::max(smax, svd.singularValues().maxCoeff());
            smin = std::min(smin, svd.singularValues().minCoeff());
        }
        if (!(smin > 0.0)) {
            smin = 1e-3 * smax;
        }
        gmin = opts.gamma_min.value_or(smin / 2.0);
        gmax = opts.gamma_max.value_or(2.0 * smax);
    }
    if (!(gmin > 0.0) || !(gmin < gmax)) {
        throw std::invalid_argument("spectrum needs 0 < gamma_min < gamma_max");
    }

    if (sys.structure() == Structure::Autonomous || sys.structure() == Structure::Periodic) {
        std::vector<SpectralInterval> pts;
        for (double r : sys.limit(Interval::ZPlus).floquet_rates()) {
            if (r > 0.0 && r >= gmin && r <= gmax) {
                pts.push_back({r, r});
            }
        }
        rep.intervals = merge(std::move(pts), opts.resolution);
    } else {
        std::vector<SpectralInterval> bands;
        for (auto b : critical_bands(sys, interval, window)) {
            if (b.hi < gmin || b.lo > gmax) {
                continue;
            }
            bands.push_back({std::max(b.lo, gmin), std::min(b.hi, gmax)});
        }
        bands = merge(std::move(bands), opts.resolution);

        // Every gap between critical bands either lies in the resolvent or
        // entirely in the spectrum; one probe decides.
        std::vector<SpectralInterval> result = bands;
        double left = gmin;
        for (std::size_t i = 0; i <= bands.size(); ++i) {
            const double right = i < bands.size() ? bands[i].lo : gmax;
            if (right > left * (1.0 + 1e-12)) {
                const double probe = std::sqrt(left * right);
                if (!has_ed_scaled(sys, interval, window, probe, opts.ed)) {
                    result.push_back({left, right});
                }
            }
            if (i < bands.size()) {
                left = bands[i].hi;
            }
        }
        result = merge(std::move(result), opts.resolution);

        if (rep.heuristic) {
            // Refine heuristic band edges against the scaled-system test.
            for (auto& iv : result) {
                auto refine = [&](double inside, double outside) {
                    if (has_ed_scaled(sys, interval, window, inside, opts.ed) ||
                        !has_ed_scaled(sys, interval, window, outside, opts.ed)) {
                        return inside;
                    }
                    while (std::abs(outside - inside) > opts.resolution) {
                        const double mid = 0.5 * (inside + outside);
                        if (has_ed_scaled(sys, interval, window, mid, opts.ed)) {
                            outside = mid;
                        } else {
                            inside = mid;
                        }
                    }
                    return inside;
                };
                if (iv.lo > gmin) {
                    iv.lo = refine(iv.lo, std::max(gmin, iv.lo - std::max(10 * opts.resolution, 0.05 * iv.lo)));
                }
                if (iv.hi < gmax) {
                    iv.hi = refine(iv.hi, std::min(gmax, iv.hi + std::max(10 * opts.resolution, 0.05 * iv.hi)));
                }
            }
            result = merge(std::move(result), opts.resolution);
            rep.warnings.emplace_back("general structure: spectrum estimated from growth-rate heuristics");
        }
        rep.intervals = std::move(result);
    }
    if (rep.intervals.empty()) {
        rep.warnings.emplace_back("gamma range excludes all spectrum");
    }
    return rep;
}

bool spectrum_contains(const SpectrumReport& report, double gamma, double tol)
{
    return std::any_of(report.intervals.begin(), report.intervals.end(),
                       [&](const auto& iv) { return gamma >= iv.lo - tol && gamma <= iv.hi + tol; });
}

std::string spectrum_json(const SpectrumReport& report)
{
    nlohmann::json j;
    j["interval"] = to_string(report.interval);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& iv : report.intervals) {
        arr.push_back({iv.lo, iv.hi});
    }
    j["spectrum"] = arr;
    return j.dump();
}

FredholmResult fredholm_index(const LinearSystem& sys, const Window& window, const EdOptions& opts)
{
    FredholmResult r;
    r.plus = detect_ed(sys, Interval::ZPlus, window, opts);
    if (!r.plus.has_ed) {
        throw NotFredholmCheckable(Interval::ZPlus, "no exponential dichotomy on Z+ (" + r.plus.diagnostic +
                                                        "); L_A is not Fredholm-checkable");
    }
    r.minus = detect_ed(sys, Interval::ZMinus, window, opts);
    if (!r.minus.has_ed) {
        throw NotFredholmCheckable(Interval::ZMinus, "no exponential dichotomy on Z- (" + r.minus.diagnostic +
                                                         "); L_A is not Fredholm-checkable");
    }
    r.index = r.plus.projector_rank - r.minus.projector_rank;
    return r;
}

TruncatedSequence apply_LA(const LinearSystem& sys, const TruncatedSequence& phi)
{
    if (phi.dim() != sys.dim()) {
        throw std::invalid_argument("sequence and system dimensions differ");
    }
    const Window& w = phi.window();
    const Window out_w(w.t_minus() + 1, w.t_plus());
    TruncatedSequence out(out_w, phi.dim());
    for (int t = out_w.t_minus(); t <= out_w.t_plus(); ++t) {
        out.set(t, phi.at(t) - sys.at(t - 1) * phi.at(t - 1));
    }
    return out;
}

}  // namespace homocont
