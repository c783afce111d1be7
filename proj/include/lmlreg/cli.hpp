#pragma once

#include "lmlreg/io.hpp"
#include "lmlreg/selection.hpp"

#include <string>
#include <vector>

namespace lmlreg {

// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumerical = 4,
    kExitInternal = 5,
};

struct CommandResult {
    std::string text;
    std::vector<std::string> warnings;
    int exit_code = kExitOk;
};

CommandResult cmd_fit(const RunConfig& config);
CommandResult cmd_transform(const RunConfig& config);
CommandResult cmd_select(const RunConfig& config);
CommandResult cmd_risk(const RunConfig& config);
CommandResult cmd_simulate(const RunConfig& config);
CommandResult cmd_plot_data(const RunConfig& config);

// Renderers shared by the commands; output is byte-stable for equal input.
std::string render_fit(const FitResult& fit, OutputFormat format);
std::string render_trace(const SelectionTrace& trace, OutputFormat format);

struct PlotPoint {
    Link link;
    int k;
    double estimate;
    double se;
    double ci_lo;
    double ci_hi;
};

// Average-effect series of a saturated fit under both links.
std::vector<PlotPoint> plot_series(const CountTable& data, int covariate, const FitOptions& options);

int exit_code_for(const std::exception& err);

} // namespace lmlreg
