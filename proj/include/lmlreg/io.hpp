#pragma once

#include "lmlreg/inference.hpp"
#include "lmlreg/params.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lmlreg {

enum class InputFormat { Cases, Counts };
enum class OutputFormat { Tsv, Json };

struct RunConfig {
    std::string input;
    InputFormat format = InputFormat::Cases;
    std::vector<std::string> responses;
    std::vector<std::string> covariates;
    Link link = Link::LML;
    double alpha = 0.05;
    std::optional<double> smoothing;
    std::uint64_t seed = 1;
    OutputFormat output = OutputFormat::Tsv;
    bool allow_missing_cells = false;

    std::string zeros;                    // zero-set file
    std::string matrix;                   // parameter matrix file (transform, simulate, risk)
    std::optional<ParamKind> matrix_kind;
    std::string procedure = "forward";    // select: forward | backward
    std::string effect;                   // covariate for average effects; first when empty
    std::vector<std::int64_t> totals;     // simulate: per covariate cell, mask order

    static constexpr int kMaxResponses = 8;
    static constexpr int kMaxCovariates = 4;

    // Throws ConfigError on an invalid combination.
    void validate() const;
    SubsetLattice response_lattice() const { return SubsetLattice(responses); }
    SubsetLattice covariate_lattice() const { return SubsetLattice(covariates); }
};

InputFormat parse_input_format(const std::string& text);
OutputFormat parse_output_format(const std::string& text);

// Splits one CSV line on commas outside braces and double quotes.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads cases (one 0/1 row per subject) or counts (pattern columns plus
// `count`) from comma-separated text. Covariate cells with no observations
// are reported through `warnings`.
CountTable ingest_text(const std::string& text, const RunConfig& config, std::vector<std::string>* warnings = nullptr);
CountTable ingest(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

// Counts format, one row per cell in mask order.
std::string export_counts(const CountTable& table);
// Cases format, one row per observation.
std::string export_cases(const CountTable& table);

// One "D;E" pair per line in brace notation; '#' starts a comment.
ModelSpec parse_zero_set(const std::string& text, Link link, const SubsetLattice& responses,
                         const SubsetLattice& covariates);
std::string format_zero_set(const ModelSpec& spec, const SubsetLattice& responses, const SubsetLattice& covariates);

// Header "D,{},{h},..." then one row per response subset; tab-separated
// text is accepted as well.
ParamMatrix parse_matrix(const std::string& text, ParamKind kind, const SubsetLattice& responses,
                         const SubsetLattice& covariates);
std::string format_matrix(const ParamMatrix& m, int decimals = 6, char sep = ',');

std::string read_file(const std::string& path);

} // namespace lmlreg
