// smalltime: small-maturity ATM asymptotics and their Monte Carlo verification.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "smalltime/cli.hpp"

namespace cli = smalltime::cli;

namespace {

std::vector<double> parse_grid(const std::string& spec) {
    // "a,b,c,..." explicit maturities, or "dyadic:k1:k2" for 2^-k1 .. 2^-k2.
    if (spec.rfind("dyadic:", 0) == 0) {
        int k1 = 0, k2 = 0;
        if (std::sscanf(spec.c_str(), "dyadic:%d:%d", &k1, &k2) != 2 || k2 < k1) {
            smalltime::detail::fail(smalltime::ErrorKind::ConfigError, "bad --grid '" + spec + "'");
        }
        return smalltime::dyadic_grid(k1, k2);
    }
    std::vector<double> grid;
    std::stringstream ss(spec);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            grid.push_back(std::stod(tok));
        } catch (const std::exception&) {
            smalltime::detail::fail(smalltime::ErrorKind::ConfigError, "bad --grid entry '" + tok + "'");
        }
    }
    return grid;
}

int emit(const cli::Outcome& out, const std::string& path) {
    const std::string text = smalltime::json_io::dump(out.report);
    if (path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(path);
        if (!f) {
            std::cerr << "cannot write " << path << "\n";
            return cli::ConfigOrUsage;
        }
        f << text;
    }
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Small-maturity ATM call asymptotics with Monte Carlo verification"};
    app.require_subcommand(1);

    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;

    auto* analyze = app.add_subcommand("analyze", "Classify a model's leading order (no simulation)");
    std::string analyze_cfg;
    analyze->add_option("config", analyze_cfg, "Model config JSON")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", out_path, "Write report here instead of stdout");

    auto* verify = app.add_subcommand("verify", "Compare MC prices on a maturity grid with the asymptote");
    std::string verify_cfg;
    std::string grid_spec = "dyadic:4:8";
    std::string csv_out;
    cli::VerifyOptions vopt;
    std::optional<double> expect_coeff;
    verify->add_option("config", verify_cfg, "Model config JSON")->required()->check(CLI::ExistingFile);
    verify->add_option("--grid", grid_spec, "Maturities 'T1,T2,...' or 'dyadic:k1:k2'")->capture_default_str();
    verify->add_option("--paths", vopt.paths, "Paths per maturity")->capture_default_str();
    verify->add_option("--seed", seed, "RNG seed (default: SMALLTIME_SEED or 0)");
    verify->add_option("--tol", vopt.tol, "Relative tolerance on MC/asymptote ratios")->capture_default_str();
    verify->add_option("--margin", vopt.exponent_margin, "Allowed error of the fitted exponent")
        ->capture_default_str();
    verify->add_option("--expect-coeff", expect_coeff, "Override the asymptotic coefficient");
    verify->add_option("--workers", workers, "Worker threads (results do not depend on it)");
    verify->add_option("--out", out_path, "Write report here instead of stdout");
    verify->add_option("--csv-out", csv_out, "Write the per-maturity rows as CSV");

    auto* ivol = app.add_subcommand("implied-vol", "ATM Black-Scholes implied volatility");
    double price = 0.0, s0 = 0.0, maturity = 0.0;
    ivol->add_option("--price", price, "ATM call price")->required();
    ivol->add_option("--s0", s0, "Spot")->required();
    ivol->add_option("--maturity", maturity, "Maturity")->required();
    ivol->add_option("--out", out_path, "Write report here instead of stdout");

    auto* mcp = app.add_subcommand("mc-price", "Monte Carlo call price at one maturity");
    std::string mc_cfg;
    std::size_t paths = 100000;
    mcp->add_option("config", mc_cfg, "Model config JSON")->required()->check(CLI::ExistingFile);
    mcp->add_option("--maturity", maturity, "Maturity")->required();
    mcp->add_option("--paths", paths, "Number of paths")->capture_default_str();
    mcp->add_option("--seed", seed, "RNG seed (default: SMALLTIME_SEED or 0)");
    mcp->add_option("--workers", workers, "Worker threads (results do not depend on it)");
    mcp->add_option("--out", out_path, "Write report here instead of stdout");

    auto* fit = app.add_subcommand("fit-rate", "Fit a rate law to a (T, value[, half_width]) CSV");
    std::string csv_in;
    std::string fit_model = "power";
    fit->add_option("--csv", csv_in, "Input CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--model", fit_model, "power | power-log")
        ->check(CLI::IsMember({"power", "power-log"}))
        ->capture_default_str();
    fit->add_option("--out", out_path, "Write report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::ConfigOrUsage;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*analyze) return emit(cli::cmd_analyze(cli::load_config(analyze_cfg)), out_path);
        if (*verify) {
            vopt.grid = parse_grid(grid_spec);
            vopt.seed = cli::resolve_seed(seed);
            vopt.expect_coeff = expect_coeff;
            vopt.workers = workers;
            std::string csv;
            const auto out = cli::cmd_verify(cli::load_config(verify_cfg), vopt, &csv);
            if (!csv_out.empty()) std::ofstream(csv_out) << csv;
            return emit(out, out_path);
        }
        if (*ivol) return emit(cli::cmd_implied_vol(price, s0, maturity), out_path);
        if (*mcp) {
            return emit(cli::cmd_mc_price(cli::load_config(mc_cfg), maturity, paths, cli::resolve_seed(seed), workers),
                        out_path);
        }
        if (*fit) {
            std::ifstream in(csv_in);
            return emit(cli::cmd_fit_rate(in, fit_model == "power" ? smalltime::RateModel::PurePower
                                                                   : smalltime::RateModel::PowerWithLog),
                        out_path);
        }
    } catch (const smalltime::Error& e) {
        std::cerr << e.what() << "\n";
        return emit(cli::error_outcome(command, e), out_path);
    }
    return cli::ConfigOrUsage;
}
