#include "lmlreg/cli.hpp"

#include "lmlreg/errors.hpp"
#include "lmlreg/risk.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <cmath>

namespace lmlreg {

namespace {

using Json = nlohmann::ordered_json;

const char* const kDot = "\xC2\xB7"; // middle dot marks a constrained entry

std::string fixed(double x, int decimals) {
    std::string s = fmt::format("{:.{}f}", x, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string est3(double x) { return fixed(x, 3); }

std::string pval3(double p) { return p < 0.001 ? "<.001" : fixed(p, 3); }

double round6(double x) {
    const double r = std::round(x * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;
}

Json num6(std::optional<double> x) {
    if (!x || !std::isfinite(*x)) return nullptr;
    return round6(*x);
}

FitOptions fit_options(const RunConfig& config) {
    FitOptions o;
    o.smoothing = config.smoothing;
    o.allow_missing_cells = config.allow_missing_cells;
    return o;
}

ModelSpec load_spec(const RunConfig& config, const SubsetLattice& V, const SubsetLattice& U) {
    if (config.zeros.empty()) return ModelSpec(config.link);
    return parse_zero_set(read_file(config.zeros), config.link, V, U);
}

int covariate_index(const RunConfig& config) {
    if (config.effect.empty()) return 0;
    for (std::size_t i = 0; i < config.covariates.size(); ++i)
        if (config.covariates[i] == config.effect) return static_cast<int>(i);
    throw ConfigError("effect covariate '" + config.effect + "' is not among the covariates");
}

std::string coeff_label(const FitResult& fit) {
    return fit.beta_hat.kind() == ParamKind::BETA_GAMMA ? "beta_gamma" : "beta_mu";
}

std::string tsv_table(const FitResult& fit, bool with_lm) {
    const auto& V = fit.beta_hat.responses();
    const auto& U = fit.beta_hat.covariates();
    const auto cols = U.graded_order();
    const std::string label = coeff_label(fit);
    const bool lml = fit.beta_hat.kind() == ParamKind::BETA_GAMMA;
    const CoefficientSummary lm = induced_lm_coefficients(fit);

    std::string out = "D";
    for (Mask e : cols) out += "\t" + label + "(" + U.format(e) + ")\tse\tp";
    if (with_lm && lml)
        for (Mask e : cols) out += "\tbeta_mu(" + U.format(e) + ")\tse";
    out += "\n";
    for (Mask d : V.graded_order()) {
        if (d == 0) continue;
        out += V.format(d);
        for (Mask e : cols) {
            if (auto k = fit.index_of(d, e)) {
                out += "\t" + est3(fit.beta_hat(d, e));
                out += "\t" + (fit.std_errors[*k] ? est3(*fit.std_errors[*k]) : std::string("NA"));
                out += "\t" + (fit.wald_p[*k] ? pval3(*fit.wald_p[*k]) : std::string("NA"));
            } else {
                out += std::string("\t") + kDot + "\t" + kDot + "\t" + kDot;
            }
        }
        if (with_lm && lml) {
            for (Mask e : cols) {
                out += "\t" + est3(lm.estimates(d, e));
                out += "\t" + (std::isfinite(lm.se(d, e)) ? est3(lm.se(d, e)) : std::string(kDot));
            }
        }
        out += "\n";
    }
    return out;
}

std::string tsv_footer(const FitResult& fit) {
    const auto& U = fit.beta_hat.covariates();
    std::string out;
    out += "deviance\t" + est3(fit.deviance) + "\tdf\t" + std::to_string(fit.df) + "\tp\t" + pval3(fit.deviance_p) + "\n";
    out += "loglik\t" + est3(fit.loglik) + "\n";
    out += std::string("converged\t") + (fit.converged ? "yes" : "no") + "\titerations\t" +
           std::to_string(fit.iterations) + "\n";
    if (!fit.covariance) out += "covariance\tsingular information; standard errors unavailable\n";
    if (fit.smoothing > 0.0) out += "smoothing\t" + fixed(fit.smoothing, 3) + "\n";
    if (!fit.excluded_cells.empty()) {
        out += "excluded_cells";
        for (Mask e : fit.excluded_cells) out += "\t" + U.format(e);
        out += "\n";
    }
    return out;
}

Json json_fit(const FitResult& fit) {
    const auto& V = fit.beta_hat.responses();
    const auto& U = fit.beta_hat.covariates();
    const bool lml = fit.beta_hat.kind() == ParamKind::BETA_GAMMA;
    const CoefficientSummary lm = induced_lm_coefficients(fit);
    Json j;
    j["link"] = to_string(fit.spec.link());
    Json coeffs = Json::array();
    for (Mask d : V.graded_order()) {
        if (d == 0) continue;
        for (Mask e : U.graded_order()) {
            Json c;
            c["D"] = V.format(d);
            c["E"] = U.format(e);
            if (auto k = fit.index_of(d, e)) {
                c["estimate"] = round6(fit.beta_hat(d, e));
                c["se"] = num6(fit.std_errors[*k]);
                c["p"] = num6(fit.wald_p[*k]);
                c["constrained"] = false;
            } else {
                c["estimate"] = 0.0;
                c["se"] = nullptr;
                c["p"] = nullptr;
                c["constrained"] = true;
            }
            if (lml) {
                c["beta_mu"] = round6(lm.estimates(d, e));
                c["beta_mu_se"] = num6(lm.se(d, e));
            }
            coeffs.push_back(std::move(c));
        }
    }
    j["coefficients"] = std::move(coeffs);
    j["deviance"] = round6(fit.deviance);
    j["df"] = fit.df;
    j["p"] = round6(fit.deviance_p);
    j["loglik"] = round6(fit.loglik);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["smoothing"] = fit.smoothing;
    Json excluded = Json::array();
    for (Mask e : fit.excluded_cells) excluded.push_back(U.format(e));
    j["excluded_cells"] = std::move(excluded);
    return j;
}

ParamMatrix pi_from_any(const ParamMatrix& m) {
    switch (m.kind()) {
    case ParamKind::PI:
        m.validate();
        return m;
    case ParamKind::MU: return pi_from_mu(m);
    case ParamKind::LOG_MU: return pi_from_mu(m.with_values(ParamKind::MU, m.values().array().exp().matrix()));
    case ParamKind::GAMMA: return pi_from_mu(mu_from_gamma(m));
    case ParamKind::BETA_MU:
    case ParamKind::BETA_GAMMA: return pi_from_beta(m);
    case ParamKind::REF_B: break;
    }
    throw ConfigError("reference coefficients do not determine a distribution");
}

ParamMatrix load_matrix(const RunConfig& config) {
    if (config.matrix.empty()) throw ConfigError("no parameter matrix file given");
    if (!config.matrix_kind) throw ConfigError("the parameter matrix kind is required");
    return parse_matrix(read_file(config.matrix), *config.matrix_kind, config.response_lattice(),
                        config.covariate_lattice());
}

} // namespace

std::string render_fit(const FitResult& fit, OutputFormat format) {
    if (format == OutputFormat::Json) return json_fit(fit).dump(2) + "\n";
    return tsv_table(fit, true) + "\n" + tsv_footer(fit);
}

std::string render_trace(const SelectionTrace& trace, OutputFormat format) {
    // Dropped coefficients are in joint coordinates; name them with the final lattices.
    const auto name_d = [&](Mask d) {
        return trace.final_fit ? trace.final_fit->beta_hat.responses().format(d) : std::to_string(d);
    };
    const auto name_e = [&](Mask e) {
        return trace.final_fit ? trace.final_fit->beta_hat.covariates().format(e) : std::to_string(e);
    };
    if (format == OutputFormat::Json) {
        Json j;
        Json steps = Json::array();
        for (const auto& s : trace.steps) {
            Json js;
            js["stage"] = s.stage;
            js["zeros"] = s.spec.zeros().size();
            Json dropped = Json::array();
            if (s.fit) js["fit"] = json_fit(*s.fit);
            for (const auto& c : s.dropped) dropped.push_back({{"D", name_d(c.d)}, {"E", name_e(c.e)}});
            js["dropped"] = std::move(dropped);
            if (s.error) js["error"] = *s.error;
            steps.push_back(std::move(js));
        }
        j["steps"] = std::move(steps);
        if (trace.final_fit) j["final"] = json_fit(*trace.final_fit);
        return j.dump(2) + "\n";
    }
    std::string out;
    for (const auto& s : trace.steps) {
        out += "## " + s.stage;
        if (s.fit) {
            out += "\tdeviance\t" + est3(s.deviance()) + "\tdf\t" + std::to_string(s.df()) + "\tp\t" +
                   pval3(s.p_value());
        }
        out += "\n";
        if (s.fit) out += tsv_table(*s.fit, false);
        for (const auto& c : s.dropped) out += "dropped\t" + name_d(c.d) + "\t" + name_e(c.e) + "\n";
        if (s.error) out += "error\t" + *s.error + "\n";
        out += "\n";
    }
    if (trace.final_fit) {
        out += "## final\n" + render_fit(*trace.final_fit, OutputFormat::Tsv);
    }
    return out;
}

CommandResult cmd_fit(const RunConfig& config) {
    CommandResult r;
    const CountTable data = ingest(config, &r.warnings);
    const ModelSpec spec = load_spec(config, data.responses(), data.covariates());
    const FitResult f = fit(spec, data, fit_options(config));
    r.text = render_fit(f, config.output);
    if (!f.converged) {
        r.warnings.push_back("optimizer did not converge (gradient sup-norm " + fmt::format("{:.3g}", f.gradient_norm) +
                             ")");
        r.exit_code = kExitNumerical;
    }
    return r;
}

CommandResult cmd_transform(const RunConfig& config) {
    config.validate();
    const ParamMatrix input = load_matrix(config);
    const ParamMatrix pi = pi_from_any(input);
    const ParamMatrix mu = mu_from_pi(pi);
    const ParamMatrix log_mu = log_mu_from_mu(mu);
    const ParamMatrix gamma = gamma_from_mu(mu);
    const ParamMatrix beta_mu = coeffs_from_link(log_mu);
    const ParamMatrix beta_gamma = coeffs_from_link(gamma);
    const ParamMatrix ref = reference_coeffs(beta_mu);

    CommandResult r;
    const std::vector<const ParamMatrix*> all{&pi, &mu, &log_mu, &gamma, &beta_mu, &beta_gamma, &ref};
    if (config.output == OutputFormat::Json) {
        Json j;
        for (const auto* m : all) {
            Json rows = Json::object();
            for (Mask d : m->responses().graded_order()) {
                Json row = Json::object();
                for (Mask e : m->covariates().graded_order()) row[m->covariates().format(e)] = round6((*m)(d, e));
                rows[m->responses().format(d)] = std::move(row);
            }
            j[to_string(m->kind())] = std::move(rows);
        }
        r.text = j.dump(2) + "\n";
    } else {
        for (const auto* m : all) r.text += "# " + to_string(m->kind()) + "\n" + format_matrix(*m, 6, '\t') + "\n";
    }
    return r;
}

CommandResult cmd_select(const RunConfig& config) {
    CommandResult r;
    const CountTable data = ingest(config, &r.warnings);
    SelectionOptions options;
    options.alpha = config.alpha;
    options.fit = fit_options(config);
    SelectionTrace trace;
    if (config.procedure == "forward") {
        trace = forward_margin_selection(data, config.link, options);
    } else if (config.procedure == "backward") {
        trace = backward_staged_selection(data, config.link, options);
    } else {
        throw ConfigError("unknown selection procedure '" + config.procedure + "' (expected forward or backward)");
    }
    r.text = render_trace(trace, config.output);
    if (config.output == OutputFormat::Tsv) {
        r.text += "\n## zero set\n" + format_zero_set(trace.final_spec, data.responses(), data.covariates());
    }
    for (const auto& s : trace.steps)
        if (s.error) r.warnings.push_back(s.stage + ": " + *s.error);
    if (trace.final_fit && !trace.final_fit->converged) r.exit_code = kExitNumerical;
    return r;
}

CommandResult cmd_risk(const RunConfig& config) {
    config.validate();
    CommandResult r;
    std::optional<ModelSpec> spec;
    ParamMatrix beta_mu = [&] {
        if (!config.matrix.empty()) {
            ParamMatrix m = load_matrix(config);
            if (m.kind() == ParamKind::BETA_GAMMA) return beta_mu_from_beta_gamma(m);
            if (m.kind() == ParamKind::BETA_MU) return m;
            throw ConfigError("risk needs a beta-mu or beta-gamma matrix");
        }
        const CountTable data = ingest(config, &r.warnings);
        spec = load_spec(config, data.responses(), data.covariates());
        const FitResult f = fit(*spec, data, fit_options(config));
        if (!f.converged) r.exit_code = kExitNumerical;
        return f.spec.link() == Link::LML ? beta_mu_from_beta_gamma(f.beta_hat) : f.beta_hat;
    }();
    const auto& V = beta_mu.responses();
    const auto& U = beta_mu.covariates();
    const auto report = risk_report(beta_mu, spec ? &*spec : nullptr);

    std::vector<ResponseIndependence> resp;
    std::vector<CovariateIndependence> cov;
    if (spec) {
        resp = implied_response_independencies(*spec, V, U);
        cov = implied_covariate_independencies(*spec, V, U);
    }

    if (config.output == OutputFormat::Json) {
        Json j;
        Json rows = Json::array();
        for (const auto& e : report) {
            Json row;
            row["D"] = V.format(e.d);
            row["u"] = U.labels()[e.u];
            row["E"] = U.format(e.e);
            row["log_rr"] = round6(e.log_rr);
            row["rr"] = round6(std::exp(e.log_rr));
            row["log_ref_rr"] = num6(e.log_ref_rr);
            row["ref_rr"] = e.log_ref_rr ? Json(round6(std::exp(*e.log_ref_rr))) : Json(nullptr);
            row["log_ratio"] = num6(e.log_ratio);
            row["ratio"] = e.log_ratio ? Json(round6(std::exp(*e.log_ratio))) : Json(nullptr);
            row["ratio_constrained"] = e.ratio_constrained;
            rows.push_back(std::move(row));
        }
        j["relative_risks"] = std::move(rows);
        Json ri = Json::array();
        for (const auto& x : resp) ri.push_back({{"A", V.format(x.a)}, {"B", V.format(x.b)}});
        j["response_independencies"] = std::move(ri);
        Json ci = Json::array();
        for (const auto& x : cov) ci.push_back({{"D", V.format(x.d)}, {"covariates", U.format(x.removed)}});
        j["covariate_independencies"] = std::move(ci);
        r.text = j.dump(2) + "\n";
        return r;
    }
    r.text = "D\tu\tE\tlog_rr\trr\tlog_ref_rr\tref_rr\tlog_ratio\tratio\tconstrained\n";
    for (const auto& e : report) {
        r.text += V.format(e.d) + "\t" + U.labels()[e.u] + "\t" + U.format(e.e) + "\t" + est3(e.log_rr) + "\t" +
                  est3(std::exp(e.log_rr));
        if (e.log_ref_rr) {
            r.text += "\t" + est3(*e.log_ref_rr) + "\t" + est3(std::exp(*e.log_ref_rr)) + "\t" + est3(*e.log_ratio) +
                      "\t" + est3(std::exp(*e.log_ratio)) + "\t" + (e.ratio_constrained ? "yes" : "no");
        } else {
            r.text += std::string("\t") + kDot + "\t" + kDot + "\t" + kDot + "\t" + kDot + "\t" + kDot;
        }
        r.text += "\n";
    }
    if (spec) {
        const std::string given = U.format(U.full());
        r.text += "\n## response independencies\n";
        for (const auto& x : resp) r.text += V.format(x.a) + "\t" + V.format(x.b) + "\tgiven\t" + given + "\n";
        r.text += "\n## covariate independencies\n";
        for (const auto& x : cov)
            r.text += V.format(x.d) + "\t" + U.format(x.removed) + "\tgiven\t" + U.format(U.full() & ~x.removed) + "\n";
    }
    return r;
}

CommandResult cmd_simulate(const RunConfig& config) {
    config.validate();
    const ParamMatrix beta = load_matrix(config);
    if (beta.kind() != ParamKind::BETA_MU && beta.kind() != ParamKind::BETA_GAMMA) {
        throw ConfigError("simulate needs a beta-mu or beta-gamma matrix");
    }
    const std::size_t cells = beta.covariates().size();
    std::vector<std::int64_t> totals = config.totals;
    if (totals.size() == 1 && cells > 1) totals.assign(cells, totals.front());
    if (totals.size() != cells) {
        throw ConfigError("expected " + std::to_string(cells) + " covariate-cell totals, got " +
                          std::to_string(totals.size()));
    }
    const CountTable table = simulate(beta, totals, config.seed);
    CommandResult r;
    r.text = config.format == InputFormat::Counts ? export_counts(table) : export_cases(table);
    return r;
}

std::vector<PlotPoint> plot_series(const CountTable& data, int covariate, const FitOptions& options) {
    std::vector<PlotPoint> out;
    for (Link link : {Link::LM, Link::LML}) {
        const FitResult f = fit(ModelSpec::saturated(link), data, options);
        for (const auto& e : average_effects(f, data, covariate).effects) {
            if (!e.se) continue;
            out.push_back({link, e.k, e.estimate, *e.se, e.ci->first, e.ci->second});
        }
    }
    return out;
}

CommandResult cmd_plot_data(const RunConfig& config) {
    CommandResult r;
    const CountTable data = ingest(config, &r.warnings);
    const auto series = plot_series(data, covariate_index(config), fit_options(config));
    if (config.output == OutputFormat::Json) {
        Json j = Json::array();
        for (const auto& p : series) {
            j.push_back({{"link", to_string(p.link)},
                         {"k", p.k},
                         {"estimate", round6(p.estimate)},
                         {"se", round6(p.se)},
                         {"ci_lo", round6(p.ci_lo)},
                         {"ci_hi", round6(p.ci_hi)}});
        }
        r.text = j.dump(2) + "\n";
        return r;
    }
    r.text = "link,k,estimate,se,ci_lo,ci_hi\n";
    for (const auto& p : series) {
        r.text += to_string(p.link) + "," + std::to_string(p.k) + "," + fixed(p.estimate, 6) + "," + fixed(p.se, 6) +
                  "," + fixed(p.ci_lo, 6) + "," + fixed(p.ci_hi, 6) + "\n";
    }
    return r;
}

int exit_code_for(const std::exception& err) {
    if (dynamic_cast<const ConfigError*>(&err) || dynamic_cast<const ArgumentError*>(&err) ||
        dynamic_cast<const RangeError*>(&err)) {
        return kExitConfig;
    }
    if (dynamic_cast<const DataError*>(&err) || dynamic_cast<const ShapeError*>(&err) ||
        dynamic_cast<const ValidationError*>(&err)) {
        return kExitData;
    }
    if (dynamic_cast<const NumericalError*>(&err) || dynamic_cast<const BoundaryError*>(&err) ||
        dynamic_cast<const DomainError*>(&err)) {
        return kExitNumerical;
    }
    return kExitInternal;
}

} // namespace lmlreg
