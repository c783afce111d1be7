#include "lmlreg/cli.hpp"
#include "lmlreg/errors.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

struct Args {
    std::string input, format = "cases", responses, covariates, link = "lml", out = "tsv";
    std::string zeros, matrix, kind, procedure = "forward", effect, totals;
    double alpha = 0.05;
    std::optional<double> smooth;
    std::uint64_t seed = 1;
    bool allow_missing = false;
};

lmlreg::RunConfig to_config(const Args& a) {
    lmlreg::RunConfig c;
    c.input = a.input;
    c.format = lmlreg::parse_input_format(a.format);
    c.responses = split_names(a.responses);
    c.covariates = split_names(a.covariates);
    c.link = lmlreg::parse_link(a.link);
    c.alpha = a.alpha;
    c.smoothing = a.smooth;
    c.seed = a.seed;
    c.output = lmlreg::parse_output_format(a.out);
    c.allow_missing_cells = a.allow_missing;
    c.zeros = a.zeros;
    c.matrix = a.matrix;
    if (!a.kind.empty()) c.matrix_kind = lmlreg::parse_kind(a.kind);
    c.procedure = a.procedure;
    c.effect = a.effect;
    for (const auto& t : split_names(a.totals)) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(t, &used);
            if (used != t.size() || v < 0) throw std::invalid_argument(t);
            c.totals.push_back(v);
        } catch (const std::logic_error&) {
            throw lmlreg::ConfigError("invalid total '" + t + "'");
        }
    }
    return c;
}

void add_common(CLI::App* sub, Args& a) {
    sub->add_option("--input", a.input, "Input CSV file");
    sub->add_option("--format", a.format, "Input format: cases or counts");
    sub->add_option("--responses", a.responses, "Comma-separated response columns");
    sub->add_option("--covariates", a.covariates, "Comma-separated covariate columns");
    sub->add_option("--link", a.link, "Link: lm or lml");
    sub->add_option("--alpha", a.alpha, "Significance level");
    sub->add_option("--smooth", a.smooth, "Add this count to every cell");
    sub->add_option("--zeros", a.zeros, "Zero-set file");
    sub->add_option("--seed", a.seed, "Random seed");
    sub->add_option("--out", a.out, "Output: tsv or json");
    sub->add_flag("--allow-missing-cells", a.allow_missing, "Drop covariate cells without observations");
    sub->add_option("--matrix", a.matrix, "Parameter matrix file");
    sub->add_option("--kind", a.kind, "Parameter kind of --matrix");
    sub->add_option("--procedure", a.procedure, "Selection procedure: forward or backward");
    sub->add_option("--effect", a.effect, "Covariate for average effects");
    sub->add_option("--totals", a.totals, "Comma-separated covariate-cell totals");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Log-mean and log-mean-linear regression for binary responses"};
    app.require_subcommand(1);
    Args args;
    using Command = lmlreg::CommandResult (*)(const lmlreg::RunConfig&);
    const std::vector<std::pair<std::string, Command>> commands{
        {"fit", lmlreg::cmd_fit},           {"transform", lmlreg::cmd_transform},
        {"select", lmlreg::cmd_select},     {"risk", lmlreg::cmd_risk},
        {"simulate", lmlreg::cmd_simulate}, {"plot-data", lmlreg::cmd_plot_data},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, _] : commands) {
        subs.push_back(app.add_subcommand(name));
        add_common(subs.back(), args);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : lmlreg::kExitConfig;
    }
    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const lmlreg::CommandResult r = commands[i].second(to_config(args));
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << r.text;
            return r.exit_code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lmlreg::exit_code_for(e);
    }
    return lmlreg::kExitInternal;
}
