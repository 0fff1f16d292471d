#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastvol/batch.hpp"
#include "fastvol/format.hpp"
#include "fastvol/greeks.hpp"
#include "fastvol/types.hpp"

namespace vol {

using namespace fastvol;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

// Exit code 1: the message names the offending row and/or column.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string subcommand;
    std::string model = "bs";
    std::string method = "halley";
    std::string format;
    std::string input;
    std::string output;
    std::vector<std::string> compute{"price"};
    bool raw_greeks = false;

    std::string flag;
    std::optional<double> s, f, k, t, r, q, sigma, price;

    bool has_inline() const {
        return !flag.empty() || s || f || k || t || r || q || sigma || price;
    }
};

inline std::string read_file(const std::string& path) {
    if (path == "-") {
        return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw DataError("cannot read '" + path + "'");
    return buffer.str();
}

// One-row table from --flag/--s/--f/... .
inline ChainTable inline_table(const Config& cfg, Model model, bool needs_sigma, bool needs_price) {
    auto require = [](const std::optional<double>& v, const char* name) {
        if (!v) throw UsageError(std::string("missing --") + name);
        return *v;
    };
    if (cfg.flag.empty()) throw UsageError("missing --flag");
    ChainTable table;
    try {
        table.set_flags(cfg.flag);
    } catch (const BatchError&) {
        throw UsageError("--flag must be c or p, got '" + cfg.flag + "'");
    }
    if (model == Model::Black76) {
        if (cfg.s) throw UsageError("--s is not accepted with --model black; use --f");
        table.set(columns::forward, require(cfg.f, "f"));
    } else {
        if (cfg.f) throw UsageError("--f is only accepted with --model black; use --s");
        table.set(columns::spot, require(cfg.s, "s"));
    }
    table.set(columns::strike, require(cfg.k, "k"));
    table.set(columns::t, require(cfg.t, "t"));
    table.set(columns::r, require(cfg.r, "r"));
    if (cfg.q) {
        if (model == Model::BlackScholes) throw UsageError("--q is not accepted with --model bs; use --model bsm");
        table.set(columns::q, *cfg.q);
    }
    if (needs_sigma) table.set(columns::sigma, require(cfg.sigma, "sigma"));
    else if (cfg.sigma) table.set(columns::sigma, *cfg.sigma);
    if (needs_price) table.set(columns::price, require(cfg.price, "price"));
    else if (cfg.price) table.set(columns::price, *cfg.price);
    return table;
}

struct Plan {
    bool price = false;
    bool iv = false;
    bool greeks = false;
};

inline Plan plan_for(const Config& cfg) {
    Plan plan;
    if (cfg.subcommand == "price") plan.price = true;
    else if (cfg.subcommand == "iv") plan.iv = true;
    else if (cfg.subcommand == "greeks") plan.greeks = true;
    else {
        for (const std::string& item : cfg.compute) {
            if (item == "price") plan.price = true;
            else if (item == "iv") plan.iv = true;
            else if (item == "greeks") plan.greeks = true;
            else throw UsageError("--compute accepts price, iv and greeks, got '" + item + "'");
        }
    }
    return plan;
}

// Runs price -> iv -> greeks; computed columns replace same-named inputs.
inline ChainTable compute(const Plan& plan, Model model, IvMethod method, ChainTable table,
                          const BatchOptions& options) {
    if (model == Model::BlackScholes && table.has(columns::q)) {
        throw DataError("column 'q': not accepted with --model bs; use --model bsm");
    }
    if (plan.price) table = batch_price(model, table, options);
    if (plan.iv) table = batch_iv(model, method, table, options);
    if (plan.greeks) {
        if (table.has(columns::sigma)) {
            table = batch_greeks(model, table, options);
        } else if (table.has(columns::iv)) {
            // Greeks at the implied volatility; rows without one come out as NaN.
            ChainTable at_iv = table;
            std::vector<double> sigma = table.numbers(columns::iv);
            for (double& v : sigma) {
                if (!std::isfinite(v)) v = 0.0;
            }
            at_iv.set(columns::sigma, std::move(sigma));
            const ChainTable greeks = batch_greeks(model, at_iv, options);
            for (std::string_view name : {columns::delta, columns::gamma, columns::theta, columns::rho,
                                          columns::vega}) {
                table.set(name, greeks.numbers(name));
            }
        } else {
            throw DataError("column 'sigma': required for greeks (or compute iv first)");
        }
    }
    return table;
}

inline std::string describe(const BatchError& e) {
    if (e.kind() == BatchErrorKind::MissingColumn) return e.detail();
    return "row " + std::to_string(e.index()) + ": " + e.detail();
}

// Single contract in plain format: the bare number for price and iv.
inline std::string inline_plain(const Config& cfg, const ChainTable& table) {
    if (cfg.subcommand == "price") return format_plain(table.numbers(columns::price)[0]) + "\n";
    if (cfg.subcommand == "iv") {
        const SolverStatus status = table.statuses(columns::status)[0];
        if (!succeeded(status)) {
            throw DataError("row 0, column 'price': no implied volatility (" + std::string(to_string(status)) + ")");
        }
        return format_plain(table.numbers(columns::iv)[0]) + "\n";
    }
    ChainTable greeks;
    for (std::string_view name : {columns::delta, columns::gamma, columns::theta, columns::rho, columns::vega}) {
        greeks.set(name, table.numbers(name));
    }
    return format_plain_table(greeks);
}

inline int execute(const Config& cfg, std::ostream& out) {
    const Model model = parse_model(cfg.model);
    const IvMethod method = parse_method(cfg.method);
    const Plan plan = plan_for(cfg);
    const bool from_file = !cfg.input.empty();
    if (from_file && cfg.has_inline()) throw UsageError("use either --input or inline contract fields, not both");
    if (!from_file && cfg.subcommand == "chain") throw UsageError("chain requires --input");
    if (!from_file && !cfg.has_inline()) throw UsageError("no contract given; use inline fields or --input");

    ChainTable table;
    if (from_file) {
        try {
            table = parse_csv(read_file(cfg.input));
        } catch (const CsvError& e) {
            throw DataError(e.what());
        }
    } else {
        table = inline_table(cfg, model, plan.price || (plan.greeks && !plan.iv), plan.iv);
    }

    BatchOptions options;
    options.scaling.raw = cfg.raw_greeks;
    try {
        table = compute(plan, model, method, std::move(table), options);
    } catch (const BatchError& e) {
        throw DataError(describe(e));
    }

    const std::string default_format = from_file ? "csv" : "plain";
    const OutputFormat format = parse_format(cfg.format.empty() ? default_format : cfg.format);
    const std::string text = (!from_file && format == OutputFormat::Plain) ? inline_plain(cfg, table)
                                                                           : format_output(table, format);
    if (cfg.output.empty() || cfg.output == "-") {
        out << text;
        out.flush();
    } else {
        std::ofstream file(cfg.output, std::ios::binary);
        file << text;
        file.close();
        if (!file) throw DataError("cannot write '" + cfg.output + "'");
    }
    return kExitOk;
}

inline void add_common_options(CLI::App& sub, Config& cfg) {
    sub.add_option("--model", cfg.model, "Pricing model")->check(CLI::IsMember({"black", "bs", "bsm"}));
    sub.add_option("--format", cfg.format, "Output format (default: plain inline, csv for files)")
        ->check(CLI::IsMember({"csv", "json", "plain"}));
    sub.add_option("--input", cfg.input, "CSV option chain ('-' for stdin)");
    sub.add_option("--output", cfg.output, "Output file (default: stdout)");
    sub.add_flag("--raw", cfg.raw_greeks, "Report plain partial derivatives for theta, vega and rho");
}

inline void add_contract_options(CLI::App& sub, Config& cfg) {
    sub.add_option("--flag", cfg.flag, "c or p");
    sub.add_option("--s", cfg.s, "Spot (bs, bsm)");
    sub.add_option("--f", cfg.f, "Forward (black)");
    sub.add_option("--k", cfg.k, "Strike");
    sub.add_option("--t", cfg.t, "Time to expiry in years");
    sub.add_option("--r", cfg.r, "Continuously compounded rate");
    sub.add_option("--q", cfg.q, "Dividend yield (bsm)");
    sub.add_option("--sigma", cfg.sigma, "Volatility");
    sub.add_option("--price", cfg.price, "Option price");
}

/// Entry point of the `vol` tool. Results go to `out`, diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"European option pricing, implied volatility and Greeks", "vol"};
    app.require_subcommand(1);
    Config cfg;

    CLI::App* price = app.add_subcommand("price", "Price contracts");
    CLI::App* iv = app.add_subcommand("iv", "Implied volatility from prices");
    CLI::App* greeks = app.add_subcommand("greeks", "Delta, gamma, theta, rho and vega");
    CLI::App* chain = app.add_subcommand("chain", "Process a CSV option chain");
    for (CLI::App* sub : {price, iv, greeks, chain}) {
        add_common_options(*sub, cfg);
        sub->callback([&cfg, sub] { cfg.subcommand = sub->get_name(); });
    }
    for (CLI::App* sub : {price, iv, greeks}) add_contract_options(*sub, cfg);
    for (CLI::App* sub : {iv, chain}) {
        sub->add_option("--method", cfg.method, "Implied volatility solver")
            ->check(CLI::IsMember({"halley", "lbr"}));
    }
    chain->add_option("--compute", cfg.compute, "Columns to compute: price, iv, greeks")->delimiter(',');

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "vol: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        return execute(cfg, out);
    } catch (const UsageError& e) {
        err << "vol: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "vol: " << e.what() << "\n";
        return kExitData;
    } catch (const DomainError& e) {
        err << "vol: " << e.what() << "\n";
        return kExitData;
    }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

} // namespace vol
