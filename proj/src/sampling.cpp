#include "d2d/sampling.hpp"

#include <cmath>

#include "d2d/error.hpp"
#include "d2d/random.hpp"

namespace d2d {

void check_settings(const ModelSettings &s) {
    auto fail = [](const std::string &field, const std::string &why) {
        throw Error(ErrorCode::InvalidSettings, field + " " + why, field);
    };
    if (s.timeframe_units < 2) fail("timeframe_units", "must be at least 2 base time units");
    if (!(s.theta_max_stock > 0.0) || !std::isfinite(s.theta_max_stock))
        fail("theta_max_stock", "must be a positive finite number");
    if (!(s.theta_max_aux > 0.0) || !std::isfinite(s.theta_max_aux))
        fail("theta_max_aux", "must be a positive finite number");
    if (s.samples < 2) fail("samples", "must be at least 2");
    if (s.bootstrap < 1) fail("bootstrap", "must be at least 1");
}

namespace {

constexpr std::uint64_t kLinkDomain = 1;
constexpr std::uint64_t kInteractionDomain = 2;

double draw(Polarity polarity, double width, double u) {
    switch (polarity) {
    case Polarity::Positive: return u * width;
    case Polarity::Negative: return -(u * width);
    case Polarity::Unspecified: return (2.0 * u - 1.0) * width;
    }
    return 0.0;
}

double theta_for(const CausalLoopDiagram &cld, const std::string &target, const ModelSettings &s) {
    const Variable *v = cld.variable(target);
    return v && v->kind == VariableKind::Auxiliary ? s.theta_max_aux : s.theta_max_stock;
}

} // namespace

ParameterAssignment sample_parameters(const CausalLoopDiagram &cld, const ModelSettings &settings,
                                      std::uint64_t sample_index) {
    ParameterAssignment params = ParameterAssignment::zeros(cld);
    for (std::size_t i = 0; i < cld.links.size(); ++i) {
        const auto &link = cld.links[i];
        const double u = uniform_unit(settings.seed, sample_index, stable_hash(trim(link.from) + '\x1f' + trim(link.to)),
                                      kLinkDomain);
        params.link_strengths[i] = draw(link.polarity, theta_for(cld, link.to, settings), u);
    }
    for (std::size_t i = 0; i < cld.interactions.size(); ++i) {
        const auto &term = cld.interactions[i];
        const auto key = trim(term.from1) + '\x1f' + trim(term.from2) + '\x1f' + trim(term.to);
        const double u = uniform_unit(settings.seed, sample_index, stable_hash(key), kInteractionDomain);
        params.interaction_strengths[i] = draw(term.polarity, 0.5 * theta_for(cld, term.to, settings), u);
    }
    return params;
}

double theta_max_heuristic(double expected_total_voi_change_sd, int timeframe_units) {
    if (!(expected_total_voi_change_sd > 0.0) || timeframe_units <= 0)
        throw Error(ErrorCode::InvalidSettings, "theta heuristic needs a positive change and timeframe");
    return expected_total_voi_change_sd / timeframe_units;
}

} // namespace d2d
