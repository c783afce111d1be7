#pragma once

#include "lmlreg/inference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lmlreg {

struct SelectionStep {
    std::string stage;
    Mask margin = 0;                    // responses of the model fitted at this step
    ModelSpec spec{Link::LML};          // zeros in joint coordinates, restricted to the margin
    std::optional<FitResult> fit;       // fit in the margin's own coordinates
    std::vector<Coefficient> dropped;   // joint coordinates
    std::optional<std::string> error;

    double deviance() const { return fit ? fit->deviance : 0.0; }
    int df() const { return fit ? fit->df : 0; }
    double p_value() const { return fit ? fit->deviance_p : 1.0; }
};

struct SelectionTrace {
    std::vector<SelectionStep> steps;
    ModelSpec final_spec{Link::LML};
    std::optional<FitResult> final_fit;
};

struct SelectionOptions {
    double alpha = 0.05;
    FitOptions fit;
};

// For k = 1..p and every D with |D| = k, fits Y_D | X_U in the marginal table
// keeping the zeros already chosen for subsets of D, then zeroes the
// coefficients of row D whose Wald p-value exceeds alpha and refits. All
// failing coefficients of a margin are dropped in one batch.
SelectionTrace forward_margin_selection(const CountTable& data, Link link, const SelectionOptions& options = {});

struct StagePolicy {
    // Zero every column E with |E| = q before the first fit (only when q > 1).
    bool force_top_interactions = true;
    // After stage s, drop non-significant coefficients with |D| >= min_sizes[s].
    std::vector<int> min_sizes;

    // p-1, p-2, ..., 1 (or just 1 when p = 1).
    static StagePolicy standard(int p);
};

SelectionTrace backward_staged_selection(const CountTable& data, Link link, const SelectionOptions& options = {},
                                         std::optional<StagePolicy> policy = std::nullopt);

struct AverageEffect {
    int k = 0;
    double estimate = 0.0;
    std::optional<double> se;
    std::optional<std::pair<double, double>> ci;  // 95%
    std::vector<double> weights;                  // over patterns of size k, in mask order
};

struct AverageEffects {
    std::vector<AverageEffect> effects;
    std::vector<int> missing_sizes;  // sizes with no qualifying observation
};

// Weight of pattern D is the number of observations with every response in D
// present, normalized over patterns of the same size.
std::vector<double> pattern_weights(const CountTable& data);

AverageEffects average_effects(const FitResult& fit, const CountTable& data, int covariate);

} // namespace lmlreg
