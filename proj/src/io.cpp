#include "lmlreg/io.hpp"

#include "lmlreg/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lmlreg {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::int64_t parse_int(const std::string& field, std::size_t row, const std::string& column) {
    std::int64_t v = 0;
    const std::string t = unquote(field);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw DataError("line " + std::to_string(row) + ": column '" + column + "' value '" + t + "' is not an integer");
    }
    return v;
}

double parse_double(const std::string& field, const std::string& where) {
    const std::string t = unquote(field);
    try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": '" + t + "' is not a number");
    }
}

} // namespace

InputFormat parse_input_format(const std::string& text) {
    if (text == "cases") return InputFormat::Cases;
    if (text == "counts") return InputFormat::Counts;
    throw ConfigError("unknown input format '" + text + "' (expected cases or counts)");
}

OutputFormat parse_output_format(const std::string& text) {
    if (text == "tsv") return OutputFormat::Tsv;
    if (text == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format '" + text + "' (expected tsv or json)");
}

void RunConfig::validate() const {
    if (responses.empty()) throw ConfigError("no response columns given");
    if (covariates.empty()) throw ConfigError("no covariate columns given");
    if (static_cast<int>(responses.size()) > kMaxResponses) {
        throw ConfigError("at most " + std::to_string(kMaxResponses) + " responses are supported");
    }
    if (static_cast<int>(covariates.size()) > kMaxCovariates) {
        throw ConfigError("at most " + std::to_string(kMaxCovariates) + " covariates are supported");
    }
    std::set<std::string> seen;
    for (const auto& name : responses)
        if (!seen.insert(name).second) throw ConfigError("duplicate column name '" + name + "'");
    for (const auto& name : covariates)
        if (!seen.insert(name).second) throw ConfigError("column '" + name + "' is both a response and a covariate, or repeated");
    if (seen.count("count")) throw ConfigError("'count' is reserved for the counts format");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (smoothing && !(*smoothing > 0.0)) throw ConfigError("smoothing must be positive");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        else if (!quoted && ch == '{') ++depth;
        else if (!quoted && ch == '}') depth = std::max(0, depth - 1);
        if (ch == ',' && depth == 0 && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

CountTable ingest_text(const std::string& text, const RunConfig& config, std::vector<std::string>* warnings) {
    const SubsetLattice V = config.response_lattice();
    const SubsetLattice U = config.covariate_lattice();
    const auto lines = lines_of(text);

    std::size_t header_at = 0;
    while (header_at < lines.size() && trim(lines[header_at]).empty()) ++header_at;
    if (header_at == lines.size()) throw DataError("input has no header row");
    std::vector<std::string> header = split_csv_line(lines[header_at]);
    for (auto& h : header) h = unquote(h);

    auto column = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError("column '" + name + "' not found in input header");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> ycol, xcol;
    for (const auto& n : config.responses) ycol.push_back(column(n));
    for (const auto& n : config.covariates) xcol.push_back(column(n));
    const bool counts_format = config.format == InputFormat::Counts;
    const std::size_t count_col = counts_format ? column("count") : 0;

    CountMatrix counts = CountMatrix::Zero(static_cast<Eigen::Index>(V.size()), static_cast<Eigen::Index>(U.size()));
    for (std::size_t i = header_at + 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::size_t row = i + 1; // 1-based line number
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        auto bit = [&](std::size_t c, const std::string& name) {
            const std::int64_t v = parse_int(fields[c], row, name);
            if (v != 0 && v != 1) {
                throw DataError("line " + std::to_string(row) + ": column '" + name + "' value " + std::to_string(v) +
                                " is not binary");
            }
            return v == 1;
        };
        Mask y = 0, x = 0;
        for (std::size_t j = 0; j < ycol.size(); ++j)
            if (bit(ycol[j], config.responses[j])) y |= Mask{1} << j;
        for (std::size_t j = 0; j < xcol.size(); ++j)
            if (bit(xcol[j], config.covariates[j])) x |= Mask{1} << j;
        std::int64_t n = 1;
        if (counts_format) {
            n = parse_int(fields[count_col], row, "count");
            if (n < 0) throw DataError("line " + std::to_string(row) + ": negative count");
        }
        counts(y, x) += n;
    }

    CountTable table(V, U, std::move(counts));
    if (warnings) {
        const auto totals = table.column_totals();
        for (Mask e = 0; e < U.size(); ++e) {
            if (totals[e] == 0) {
                warnings->push_back("covariate cell " + U.format(e) + " has no observations; excluded");
            }
        }
    }
    return table;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CountTable ingest(const RunConfig& config, std::vector<std::string>* warnings) {
    config.validate();
    if (config.input.empty()) throw ConfigError("no input file given");
    return ingest_text(read_file(config.input), config, warnings);
}

std::string export_counts(const CountTable& table) {
    const auto& V = table.responses();
    const auto& U = table.covariates();
    std::string out;
    for (const auto& l : V.labels()) out += l + ",";
    for (const auto& l : U.labels()) out += l + ",";
    out += "count\n";
    for (Mask e = 0; e < U.size(); ++e) {
        for (Mask d = 0; d < V.size(); ++d) {
            for (int i = 0; i < V.ground_size(); ++i) out += ((d >> i) & 1u) ? "1," : "0,";
            for (int i = 0; i < U.ground_size(); ++i) out += ((e >> i) & 1u) ? "1," : "0,";
            out += std::to_string(table(d, e)) + "\n";
        }
    }
    return out;
}

std::string export_cases(const CountTable& table) {
    const auto& V = table.responses();
    const auto& U = table.covariates();
    std::string out;
    std::vector<std::string> header;
    for (const auto& l : V.labels()) header.push_back(l);
    for (const auto& l : U.labels()) header.push_back(l);
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (Mask e = 0; e < U.size(); ++e) {
        for (Mask d = 0; d < V.size(); ++d) {
            std::string row;
            for (int i = 0; i < V.ground_size(); ++i) row += std::string(i ? "," : "") + (((d >> i) & 1u) ? "1" : "0");
            for (int i = 0; i < U.ground_size(); ++i) row += std::string(",") + (((e >> i) & 1u) ? "1" : "0");
            row += "\n";
            for (std::int64_t k = 0; k < table(d, e); ++k) out += row;
        }
    }
    return out;
}

ModelSpec parse_zero_set(const std::string& text, Link link, const SubsetLattice& responses,
                         const SubsetLattice& covariates) {
    ModelSpec spec(link);
    std::size_t n = 0;
    for (const auto& raw_line : lines_of(text)) {
        ++n;
        std::string line = raw_line;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto semi = line.find(';');
        if (semi == std::string::npos) {
            throw ConfigError("zero-set line " + std::to_string(n) + ": expected 'D;E', got '" + line + "'");
        }
        try {
            const Mask d = responses.parse(line.substr(0, semi));
            const Mask e = covariates.parse(line.substr(semi + 1));
            if (d == 0) throw ConfigError("coefficients of the empty response set are always zero");
            spec.add_zero({d, e});
        } catch (const Error& err) {
            throw ConfigError("zero-set line " + std::to_string(n) + ": " + err.what());
        }
    }
    return spec;
}

std::string format_zero_set(const ModelSpec& spec, const SubsetLattice& responses, const SubsetLattice& covariates) {
    std::string out = "# " + to_string(spec.link()) + " zero constraints\n";
    for (const auto& c : spec.zeros()) out += responses.format(c.d) + ";" + covariates.format(c.e) + "\n";
    return out;
}

ParamMatrix parse_matrix(const std::string& text, ParamKind kind, const SubsetLattice& responses,
                         const SubsetLattice& covariates) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& line : lines_of(text)) {
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.find('\t') != std::string::npos) {
            std::vector<std::string> fields;
            std::istringstream in(t);
            std::string f;
            while (std::getline(in, f, '\t')) fields.push_back(trim(f));
            rows.push_back(std::move(fields));
        } else {
            rows.push_back(split_csv_line(t));
        }
    }
    if (rows.empty()) throw DataError("matrix file is empty");
    const auto& header = rows.front();
    std::vector<Mask> cols;
    for (std::size_t j = 1; j < header.size(); ++j) {
        try {
            cols.push_back(covariates.parse(unquote(header[j])));
        } catch (const Error& err) {
            throw DataError(std::string("matrix header: ") + err.what());
        }
    }
    if (cols.size() != covariates.size()) {
        throw DataError("matrix header lists " + std::to_string(cols.size()) + " covariate subsets, expected " +
                        std::to_string(covariates.size()));
    }
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(responses.size()),
                                                       static_cast<Eigen::Index>(covariates.size()),
                                                       std::numeric_limits<double>::quiet_NaN());
    std::set<Mask> seen_rows;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != header.size()) throw DataError("matrix row " + std::to_string(i) + " has the wrong width");
        Mask d = 0;
        try {
            d = responses.parse(unquote(r[0]));
        } catch (const Error& err) {
            throw DataError("matrix row " + std::to_string(i) + ": " + err.what());
        }
        if (!seen_rows.insert(d).second) throw DataError("matrix row " + responses.format(d) + " repeated");
        for (std::size_t j = 1; j < r.size(); ++j)
            values(d, cols[j - 1]) = parse_double(r[j], "matrix row " + responses.format(d));
    }
    // Row {} of link and coefficient matrices is implied when omitted.
    if (!seen_rows.count(0)) {
        if (kind == ParamKind::PI) throw DataError("pi matrix needs every row, including {}");
        values.row(0).setConstant(kind == ParamKind::MU ? 1.0 : 0.0);
    }
    if (!values.allFinite()) throw DataError("matrix file does not cover every response subset");
    return ParamMatrix(kind, responses, covariates, std::move(values));
}

std::string format_matrix(const ParamMatrix& m, int decimals, char sep) {
    const auto& V = m.responses();
    const auto& U = m.covariates();
    const auto rows = V.graded_order();
    const auto cols = U.graded_order();
    std::string out = "D";
    for (Mask e : cols) out += sep + U.format(e);
    out += "\n";
    for (Mask d : rows) {
        out += V.format(d);
        for (Mask e : cols) {
            std::string v = fmt::format("{:.{}f}", m(d, e), decimals);
            if (v.find_first_not_of("-0.") == std::string::npos && v.front() == '-') v.erase(0, 1);
            out += sep + v;
        }
        out += "\n";
    }
    return out;
}

} // namespace lmlreg
