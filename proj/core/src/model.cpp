#include "mimic/model.hpp"

#include "mimic/errors.hpp"

#include <algorithm>

#include <cmath>
#include <set>

namespace mimic {

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (!seen.insert(name).second) {
            throw SchemaError(std::string("duplicate ") + what + " name '" + name + "'");
        }
    }
}

}  // namespace

void ModelSpec::validate() const {
    if (p() < 1) throw SchemaError("model needs at least 1 indicator");
    if (k() < 1) throw SchemaError("model needs at least 1 cause");
    if (fixed_loading >= p()) throw SchemaError("fixed loading index out of range");
    require_unique(indicator_names, "indicator");
    require_unique(cause_names, "cause");
    for (const auto& name : cause_names) {
        if (std::find(indicator_names.begin(), indicator_names.end(), name) != indicator_names.end()) {
            throw SchemaError("'" + name + "' is both an indicator and a cause");
        }
    }
}

ModelSpec ModelSpec::make(std::size_t p, std::size_t k, std::size_t fixed_loading) {
    ModelSpec spec;
    for (std::size_t i = 0; i < p; ++i) spec.indicator_names.push_back("y" + std::to_string(i + 1));
    for (std::size_t j = 0; j < k; ++j) spec.cause_names.push_back("x" + std::to_string(j + 1));
    spec.fixed_loading = fixed_loading;
    spec.validate();
    return spec;
}

void ParameterSet::validate(const ModelSpec& spec) const {
    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());
    if (lambda.size() != p || theta.size() != p || beta.size() != k) {
        throw SchemaError("parameter set dimensions do not match the model");
    }
    if (!lambda.allFinite() || !beta.allFinite() || !theta.allFinite() || !std::isfinite(sigma)) {
        throw SchemaError("parameter set contains non-finite values");
    }
    if ((theta.array() <= 0.0).any()) throw SchemaError("indicator error SDs must be positive");
    if (sigma < 0.0) throw SchemaError("structural error SD must be non-negative");
}

void Dataset::validate_shape(const ModelSpec& spec) const {
    if (static_cast<std::size_t>(y.cols()) != spec.p()) {
        throw SchemaError("dataset has " + std::to_string(y.cols()) + " indicator columns, model expects " +
                          std::to_string(spec.p()));
    }
    if (static_cast<std::size_t>(x.cols()) != spec.k()) {
        throw SchemaError("dataset has " + std::to_string(x.cols()) + " cause columns, model expects " +
                          std::to_string(spec.k()));
    }
    if (x.rows() != y.rows()) throw SchemaError("indicator and cause row counts differ");
    if (!unit_labels.empty() && unit_labels.size() != n()) {
        throw SchemaError("unit label count does not match row count");
    }
    if (n() == 0) throw SchemaError("dataset has no observations");
    if (!y.allFinite() || !x.allFinite()) throw SchemaError("dataset contains missing or non-finite values");
}

void Dataset::validate(const ModelSpec& spec) const {
    validate_shape(spec);
    if (n() < spec.p() + spec.k() + 1) {
        throw SchemaError("need at least p + k + 1 = " + std::to_string(spec.p() + spec.k() + 1) +
                          " observations, got " + std::to_string(n()));
    }
}

ImpliedMoments implied_moments(const ModelSpec& spec, const ParameterSet& params) {
    params.validate(spec);
    ImpliedMoments m;
    m.pi = params.beta * params.lambda.transpose();
    m.omega = params.sigma * params.sigma * params.lambda * params.lambda.transpose();
    m.omega.diagonal() += params.theta.array().square().matrix();
    return m;
}

ParameterSet standardize_loadings(const ParameterSet& params) {
    const double total = params.lambda.sum();
    if (std::abs(total) < 1e-12) {
        throw SingularityError("loadings sum to zero; cannot normalize to unit sum");
    }
    return rescale_latent(params, 1.0 / total);
}

ParameterSet rescale_latent(const ParameterSet& params, double c) {
    if (c == 0.0 || !std::isfinite(c)) throw SchemaError("latent rescaling factor must be finite and nonzero");
    ParameterSet out = params;
    out.lambda *= c;
    out.beta /= c;
    out.sigma = params.sigma / std::abs(c);
    return out;
}

ParameterSet identify(const ModelSpec& spec, const ParameterSet& params) {
    const double anchor = params.lambda(static_cast<Eigen::Index>(spec.fixed_loading));
    if (std::abs(anchor) < 1e-12) throw SingularityError("fixed loading is zero; cannot identify");
    ParameterSet out = rescale_latent(params, 1.0 / anchor);
    out.lambda(static_cast<Eigen::Index>(spec.fixed_loading)) = 1.0;
    return out;
}

}  // namespace mimic
