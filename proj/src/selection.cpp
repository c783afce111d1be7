#include "lmlreg/selection.hpp"

#include "lmlreg/errors.hpp"

#include <cmath>

namespace lmlreg {

namespace {

// Position map from the responses kept in a margin to the margin's own bits.
struct MarginMap {
    Mask kept = 0;
    std::vector<int> positions;

    explicit MarginMap(Mask k, int p) : kept(k) {
        for (int i = 0; i < p; ++i)
            if ((k >> i) & 1u) positions.push_back(i);
    }

    Mask to_margin(Mask joint) const {
        Mask out = 0;
        for (std::size_t j = 0; j < positions.size(); ++j)
            if ((joint >> positions[j]) & 1u) out |= Mask{1} << j;
        return out;
    }

    Mask to_joint(Mask margin) const {
        Mask out = 0;
        for (std::size_t j = 0; j < positions.size(); ++j)
            if ((margin >> j) & 1u) out |= Mask{1} << positions[j];
        return out;
    }
};

std::vector<Coefficient> non_significant(const FitResult& fit, double alpha, auto&& eligible) {
    std::vector<Coefficient> out;
    for (std::size_t k = 0; k < fit.free.size(); ++k) {
        if (!eligible(fit.free[k])) continue;
        if (fit.wald_p[k] && *fit.wald_p[k] > alpha) out.push_back(fit.free[k]);
    }
    return out;
}

std::vector<Mask> masks_of_size(int p, int k) {
    std::vector<Mask> out;
    for (Mask d = 1; d < (Mask{1} << p); ++d)
        if (popcount(d) == k) out.push_back(d);
    return out;
}

} // namespace

SelectionTrace forward_margin_selection(const CountTable& data, Link link, const SelectionOptions& options) {
    if (link != Link::LML) {
        throw ArgumentError("forward per-margin selection relies on upward compatibility and needs the LML link");
    }
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
    const int p = data.responses().ground_size();

    SelectionTrace trace;
    ModelSpec joint(Link::LML);
    for (int k = 1; k <= p; ++k) {
        for (Mask d : masks_of_size(p, k)) {
            const MarginMap map(d, p);
            const CountTable table = data.marginal(d);
            ModelSpec margin_spec(Link::LML);
            ModelSpec joint_restricted(Link::LML);
            for (const auto& c : joint.zeros()) {
                if ((c.d & ~d) == 0) {
                    margin_spec.add_zero({map.to_margin(c.d), c.e});
                    joint_restricted.add_zero(c);
                }
            }

            SelectionStep step;
            step.stage = "margin " + data.responses().format(d);
            step.margin = d;
            try {
                FitResult first = fit(margin_spec, table, options.fit);
                const Mask top = map.to_margin(d);
                auto drop = non_significant(first, options.alpha, [&](const Coefficient& c) { return c.d == top; });
                if (drop.empty()) {
                    step.fit = std::move(first);
                } else {
                    ModelSpec reduced = margin_spec;
                    for (const auto& c : drop) reduced.add_zero(c);
                    step.fit = fit(reduced, table, options.fit);
                    for (const auto& c : drop) {
                        const Coefficient jc{map.to_joint(c.d), c.e};
                        step.dropped.push_back(jc);
                        joint.add_zero(jc);
                        joint_restricted.add_zero(jc);
                    }
                }
            } catch (const Error& err) {
                step.error = err.what();
                step.dropped.clear();
            }
            step.spec = joint_restricted;
            trace.steps.push_back(std::move(step));
        }
    }

    trace.final_spec = joint.with_link(link);
    trace.final_fit = fit(trace.final_spec, data, options.fit);
    return trace;
}

StagePolicy StagePolicy::standard(int p) {
    StagePolicy policy;
    for (int k = std::max(p - 1, 1); k >= 1; --k) policy.min_sizes.push_back(k);
    return policy;
}

SelectionTrace backward_staged_selection(const CountTable& data, Link link, const SelectionOptions& options,
                                         std::optional<StagePolicy> policy_in) {
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
    const auto& V = data.responses();
    const auto& U = data.covariates();
    const StagePolicy policy = policy_in.value_or(StagePolicy::standard(V.ground_size()));

    ModelSpec spec(link);
    std::vector<Coefficient> forced;
    if (policy.force_top_interactions && U.ground_size() > 1) {
        for (Mask d = 1; d < V.size(); ++d) {
            spec.add_zero({d, U.full()});
            forced.push_back({d, U.full()});
        }
    }

    SelectionTrace trace;
    int stage = 1;
    SelectionStep first;
    first.stage = "M1";
    first.margin = V.full();
    first.spec = spec;
    first.dropped = forced;
    first.fit = fit(spec, data, options.fit);
    trace.steps.push_back(first);

    FitResult current = *first.fit;
    for (int min_size : policy.min_sizes) {
        auto drop = non_significant(current, options.alpha,
                                    [&](const Coefficient& c) { return popcount(c.d) >= min_size; });
        if (drop.empty()) continue;
        for (const auto& c : drop) spec.add_zero(c);
        SelectionStep step;
        step.stage = "M" + std::to_string(++stage);
        step.margin = V.full();
        step.spec = spec;
        step.dropped = drop;
        step.fit = fit(spec, data, options.fit);
        current = *step.fit;
        trace.steps.push_back(std::move(step));
    }
    trace.final_spec = spec;
    trace.final_fit = current;
    return trace;
}

std::vector<double> pattern_weights(const CountTable& data) {
    const auto& V = data.responses();
    // Observations with Y^D = 1: superset sums of the pooled response counts.
    std::vector<double> pooled(V.size(), 0.0);
    for (Mask y = 0; y < V.size(); ++y) pooled[y] = static_cast<double>(data.counts().row(y).sum());
    superset_zeta_transform(pooled);
    std::vector<double> by_size(V.ground_size() + 1, 0.0);
    for (Mask d = 1; d < V.size(); ++d) by_size[popcount(d)] += pooled[d];
    std::vector<double> w(V.size(), 0.0);
    for (Mask d = 1; d < V.size(); ++d) {
        const double total = by_size[popcount(d)];
        w[d] = total > 0.0 ? pooled[d] / total : 0.0;
    }
    return w;
}

AverageEffects average_effects(const FitResult& fit, const CountTable& data, int covariate) {
    const auto& V = data.responses();
    const auto& U = data.covariates();
    if (covariate < 0 || covariate >= U.ground_size()) throw ArgumentError("covariate index out of range");
    if (!(fit.beta_hat.responses() == V) || !(fit.beta_hat.covariates() == U)) {
        throw ShapeError("fit and data use different lattices");
    }
    const Mask col = Mask{1} << covariate;
    const std::vector<double> w = pattern_weights(data);

    AverageEffects out;
    for (int k = 1; k <= V.ground_size(); ++k) {
        double wsum = 0.0;
        for (Mask d = 1; d < V.size(); ++d)
            if (popcount(d) == k) wsum += w[d];
        if (wsum <= 0.0) {
            out.missing_sizes.push_back(k);
            continue;
        }
        AverageEffect eff;
        eff.k = k;
        Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.free.size()));
        for (Mask d = 1; d < V.size(); ++d) {
            if (popcount(d) != k) continue;
            eff.weights.push_back(w[d]);
            eff.estimate += w[d] * fit.beta_hat(d, col);
            if (auto idx = fit.index_of(d, col)) a[static_cast<Eigen::Index>(*idx)] = w[d];
        }
        if (fit.covariance) {
            const double var = a.dot(*fit.covariance * a);
            if (var >= 0.0) {
                eff.se = std::sqrt(var);
                eff.ci = std::make_pair(eff.estimate - 1.96 * *eff.se, eff.estimate + 1.96 * *eff.se);
            }
        }
        out.effects.push_back(std::move(eff));
    }
    return out;
}

} // namespace lmlreg
