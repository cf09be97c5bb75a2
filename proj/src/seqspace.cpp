#include "homocont/seqspace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace homocont {

double vec_norm(const Vector& x)
{
    return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

double op_norm(const Matrix& a)
{
    if (a.size() == 0) {
        return 0.0;
    }
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

Window::Window(int t_minus, int t_plus) : t_minus_(t_minus), t_plus_(t_plus)
{
    if (t_minus >= t_plus || t_plus - t_minus + 1 < 3) {
        throw std::invalid_argument("window [" + std::to_string(t_minus) + ", " +
                                    std::to_string(t_plus) + "] needs at least three points");
    }
}

Window Window::grown(double factor) const
{
    if (!(factor > 1.0)) {
        throw std::invalid_argument("window growth factor must exceed 1");
    }
    const int extra = std::max(1, static_cast<int>(std::ceil((factor - 1.0) * length() / 2.0)));
    return {t_minus_ - extra, t_plus_ + extra};
}

TruncatedSequence::TruncatedSequence(Window window, int dim)
    : window_(window), values_(Matrix::Zero(dim, window.length()))
{
    if (dim <= 0) {
        throw std::invalid_argument("sequence dimension must be positive");
    }
}

TruncatedSequence::TruncatedSequence(Window window, Matrix values)
    : window_(window), values_(std::move(values))
{
    if (values_.rows() <= 0) {
        throw std::invalid_argument("sequence dimension must be positive");
    }
    if (values_.cols() != window_.length()) {
        throw std::invalid_argument("value block does not match window length");
    }
    if (!values_.allFinite()) {
        throw std::invalid_argument("sequence entries must be finite");
    }
}

Vector TruncatedSequence::at(int t) const
{
    if (!window_.contains(t)) {
        return Vector::Zero(dim());
    }
    return values_.col(window_.index(t));
}

void TruncatedSequence::set(int t, const Vector& x)
{
    if (!window_.contains(t)) {
        throw std::out_of_range("time index " + std::to_string(t) + " outside window");
    }
    if (x.size() != dim()) {
        throw std::invalid_argument("vector dimension mismatch");
    }
    if (!x.allFinite()) {
        throw std::invalid_argument("sequence entries must be finite");
    }
    values_.col(window_.index(t)) = x;
}

Vector TruncatedSequence::flat() const
{
    return Eigen::Map<const Vector>(values_.data(), values_.size());
}

TruncatedSequence TruncatedSequence::from_flat(Window window, int dim, const Vector& flat)
{
    if (flat.size() != static_cast<Eigen::Index>(dim) * window.length()) {
        throw std::invalid_argument("flat vector size mismatch");
    }
    return {window, Eigen::Map<const Matrix>(flat.data(), dim, window.length())};
}

TruncatedSequence TruncatedSequence::restricted_to(Window other) const
{
    TruncatedSequence out(other, dim());
    for (int t = other.t_minus(); t <= other.t_plus(); ++t) {
        if (window_.contains(t)) {
            out.values_.col(other.index(t)) = values_.col(window_.index(t));
        }
    }
    return out;
}

DecayEnvelope::DecayEnvelope(double c, double r) : constant(c), rate(r)
{
    if (!(c >= 0.0) || !(r > 0.0 && r < 1.0)) {
        throw std::invalid_argument("decay envelope needs C >= 0 and rate in (0,1)");
    }
}

double sup_norm(const TruncatedSequence& phi)
{
    return phi.values().cwiseAbs().maxCoeff();
}

TruncatedSequence shift(const TruncatedSequence& phi, int l)
{
    const Window& w = phi.window();
    return {Window(w.t_minus() - l, w.t_plus() - l), phi.values()};
}

EnvelopeCheck check_envelope(const TruncatedSequence& phi, const DecayEnvelope& env)
{
    EnvelopeCheck result;
    const Window& w = phi.window();
    int best = 0;
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        const double bound = env.constant * std::pow(env.rate, std::abs(t));
        if (vec_norm(phi.at(t)) > bound) {
            if (!result.first_violation || std::abs(t) < best) {
                result.first_violation = t;
                best = std::abs(t);
            }
            result.holds = false;
        }
    }
    return result;
}

void write_csv(std::ostream& out, const TruncatedSequence& phi)
{
    out << "t";
    for (int i = 1; i <= phi.dim(); ++i) {
        out << ",x" << i;
    }
    out << '\n';
    out << std::setprecision(17);
    const Window& w = phi.window();
    for (int t = w.t_minus(); t <= w.t_plus(); ++t) {
        out << t;
        const auto col = phi.values().col(w.index(t));
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            out << ',' << col(i);
        }
        out << '\n';
    }
}

TruncatedSequence read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("t", 0) != 0) {
        throw std::runtime_error("sequence CSV: missing `t,x1,...` header");
    }
    const int dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (dim < 1) {
        throw std::runtime_error("sequence CSV: no value columns");
    }
    std::vector<int> times;
    std::vector<double> entries;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const int t = std::stoi(cell);
        if (!times.empty() && t != times.back() + 1) {
            throw std::runtime_error("sequence CSV: time column must increase by one");
        }
        times.push_back(t);
        for (int i = 0; i < dim; ++i) {
            if (!std::getline(row, cell, ',')) {
                throw std::runtime_error("sequence CSV: short row at t=" + std::to_string(t));
            }
            entries.push_back(std::stod(cell));
        }
    }
    if (times.size() < 3) {
        throw std::runtime_error("sequence CSV: fewer than three rows");
    }
    Window w(times.front(), times.back());
    Vector flat = Eigen::Map<Vector>(entries.data(), static_cast<Eigen::Index>(entries.size()));
    return TruncatedSequence::from_flat(w, dim, flat);
}

}  // namespace homocont
