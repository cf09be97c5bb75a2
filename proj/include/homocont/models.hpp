#pragma once

// Built-in parametric models with known homoclinic structure, JSON-defined
// custom models, and closed-form branch data.

#include "homocont/homsolve.hpp"

#include <map>
#include <string>
#include <vector>

namespace homocont {

/// Named numeric parameters; tables hold periodic coefficient data.
struct ModelParams {
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> tables;

    [[nodiscard]] double get(const std::string& key, double fallback) const;
    [[nodiscard]] std::vector<double> table(const std::string& key, std::vector<double> fallback) const;
};

struct BuiltinModel {
    std::string name;
    ModelParams params;
    ParametricModel model;
};

[[nodiscard]] const std::vector<std::string>& builtin_names();

/// Throws std::invalid_argument for unknown names (listing the builtins) and
/// for parameter constraint violations.
[[nodiscard]] BuiltinModel build_model(const std::string& name, const ModelParams& params = {});

/// Parses `{"model": name, ...}`. Scalar members become parameters, numeric
/// arrays become tables; `"model": "custom"` builds from a coefficient
/// description (see README).
[[nodiscard]] BuiltinModel model_from_json(const std::string& text);

/// Default symmetric window for the model's homoclinics.
[[nodiscard]] Window default_window(const BuiltinModel& m);

/// Value at t = 0 of the nontrivial homoclinic branch: one entry for the
/// transcritical model, the (+, -) pair phi and -phi for the pitchfork. Throws
/// std::domain_error("no real branch") when the pitchfork has none.
[[nodiscard]] std::vector<Vector> oracle_branch(const std::string& name, const ModelParams& params, double lambda);

/// General solution phi_lambda(t; 0, xi) of the piecewise linear triangular
/// model, by forward and (explicitly inverted) backward recursion.
[[nodiscard]] Vector oracle_solution(const ModelParams& params, const Vector& xi, double lambda, int t);

/// A homoclinic solution to seed a solve or a continuation with:
/// the nontrivial branch for transcritical/pitchfork (`sign` picks the
/// pitchfork root), the Green's-function solution for scalar_affine, zero otherwise.
[[nodiscard]] TruncatedSequence oracle_seed(const BuiltinModel& m, double lambda, const Window& window, int sign = 1);

}  // namespace homocont
