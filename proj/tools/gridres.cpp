// gridres command-line driver.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error, 4 numeric divergence.

#include "gridres/app/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDivergence = 4 };

}  // namespace

int main(int argc, char** argv) {
    using namespace gridres;
    CLI::App cli{"Grid-cell disaster resilience rating"};
    cli.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool grid_search = false;
    cli.add_option("--config", config_path, "JSON run configuration")->required();
    auto* out_opt = cli.add_option("--out", out_dir, "Output directory (overrides config and GRIDRES_OUT)");
    auto* seed_opt = cli.add_option("--seed", seed, "Root seed (overrides config)");
    cli.add_flag("--grid-search", grid_search, "Search embedding size and cluster count");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"extract", "Compute the cell feature matrix from the input layers"},
        {"train", "Train SDAE and DEC, rate clusters and persist the model"},
        {"rate", "Re-derive levels from the persisted model"},
        {"moran", "Global Moran's I of the resilience levels"},
        {"scenario", "Apply the configured scenario and re-rate"},
        {"risk-combine", "Combine flood risk and resilience levels"},
        {"report", "Bundle stage outputs into reports and GeoJSON"},
    };
    for (const auto& [name, help] : commands) cli.add_subcommand(name, help)->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return kConfig;
    }

    try {
        app::Overrides ov;
        if (*out_opt) ov.output_dir = out_dir;
        if (*seed_opt) ov.seed = seed;
        ov.grid_search = grid_search;
        const auto cfg = app::load_config(config_path, ov);
        const std::string cmd = cli.get_subcommands().front()->get_name();

        if (cmd == "extract") {
            const auto rf = app::cmd_extract(cfg);
            std::cout << "extract: " << rf.rows() << " cells x " << rf.values.cols() << " features -> "
                      << (cfg.output_dir / "rf.csv").string() << '\n';
        } else if (cmd == "train") {
            const auto t = app::cmd_train(cfg);
            const auto& run = t.result.clustering;
            std::cout << "train: d_e=" << run.embedding_dim << " k=" << run.k << " dec_iterations=" << run.dec.iterations
                      << " macro_f1=" << t.result.rating.metrics.f1_macro << '\n';
        } else if (cmd == "rate") {
            const auto r = app::cmd_rate(cfg);
            std::cout << "rate: " << r.cell_levels.size() << " cells, k=" << r.levels.k() << '\n';
        } else if (cmd == "moran") {
            const auto m = app::cmd_moran(cfg);
            std::cout << "moran: I=" << m.i << " p=" << m.p_value << " n=" << m.n << '\n';
        } else if (cmd == "scenario") {
            const auto r = app::cmd_scenario(cfg);
            std::size_t changed = 0;
            for (int d : r.delta) changed += d != 0;
            std::cout << "scenario: " << changed << " of " << r.delta.size() << " cells changed level\n";
        } else if (cmd == "risk-combine") {
            const auto labels = app::cmd_risk_combine(cfg);
            std::size_t flagged = 0;
            for (const auto& l : labels) flagged += l.flagged();
            std::cout << "risk-combine: " << labels.size() << " cells, " << flagged << " flagged\n";
        } else if (cmd == "report") {
            app::cmd_report(cfg);
            std::cout << "report: " << (cfg.output_dir / "report.md").string() << '\n';
        }
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
