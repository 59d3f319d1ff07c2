#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "spectra/cli.hpp"

using namespace spectra;

int main(int argc, char** argv)
{
    CLI::App app{"Band spectra of sphere necklaces and carpets"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> model, form, format, out, regime;
    std::optional<double> a, d, alpha, kmin, kmax, eps;
    std::optional<int> resolution;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config, or a report written by this tool");
        sub->add_option("--model", model, "loose-straight | loose-zigzag | tight-straight | tight-zigzag | "
                                          "loose-carpet | tight-carpet (or I..VI)");
        sub->add_option("--a", a, "sphere radius");
        sub->add_option("--d", d, "segment length (loose models only)");
        sub->add_option("--alpha", alpha, "coupling constant");
        sub->add_option("--kmin", kmin, "lower end of the momentum range");
        sub->add_option("--kmax", kmax, "upper end of the momentum range");
        sub->add_option("--resolution", resolution, "grid points per pole-free subinterval");
        sub->add_option("--eps", eps, "interval family exponent");
        sub->add_option("--format", format, "csv | json");
        sub->add_option("--out", out, "output path (default stdout)");
        sub->add_option("--form", form, "determinant | literal");
        sub->add_option("--regime", regime, "stats fit regime: auto | power | log | both");
    };
    std::optional<cli::Command> cmd;
    const std::pair<cli::Command, const char*> subs[] = {
        {cli::Command::trace, "dispersion values on a grid (cos theta, or carpet min/max over the torus)"},
        {cli::Command::bands, "band edges and the gaps between them"},
        {cli::Command::stats, "band-to-gap ratios and envelope fits per pole cluster"},
        {cli::Command::verify, "check that bands eventually sit inside the interval family"},
    };
    for (auto [c, help] : subs) {
        auto* sub = app.add_subcommand(cli::to_string(c), help);
        add_common(sub);
        sub->callback([&cmd, c] { cmd = c; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::exit_ok : cli::exit_config;
    }

    try {
        nlohmann::json j = nlohmann::json::object();
        std::string text;
        if (!config_path.empty()) {
            text = cli::read_file(config_path);
            j = cli::read_config_document(text);
        }
        if (!j.is_object())
            throw cli::ConfigError("configuration must be a JSON object");
        if (model) {
            auto m = parse_model(*model);
            j["model"] = m ? to_string(*m) : *model;
            // a report for another model may carry fields that no longer apply
            if (m && is_tight(*m) && !d)
                j.erase("d");
        }
        if (a) j["a"] = *a;
        if (d) j["d"] = *d;
        if (alpha) j["alpha"] = *alpha;
        if (kmin) j["k_min"] = *kmin;
        if (kmax) j["k_max"] = *kmax;
        if (resolution) j["resolution"] = *resolution;
        if (eps) j["epsilon"] = *eps;
        if (format) j["format"] = *format;
        if (out) j["out"] = *out;
        if (form) j["form"] = *form;
        if (regime) j["regime"] = *regime;
        if (j.contains("model") && j["model"].is_string()) {
            // accept roman numerals in files too
            if (auto m = parse_model(j["model"].get<std::string>()))
                j["model"] = to_string(*m);
        }

        const auto cfg = cli::config_from_json(j, text);
        const auto rep = cli::run(*cmd, cfg);
        if (cfg.out.empty())
            std::cout << rep.text;
        else
            cli::write_atomic(cfg.out, rep.text);
        return rep.exit_code;
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::exit_config;
    } catch (const cli::RangeError& e) {
        std::cerr << e.what() << "\n";
        return cli::exit_range;
    } catch (const InsufficientData& e) {
        std::cerr << "insufficient range: " << e.what() << "\n";
        return cli::exit_range;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::exit_config;
    }
}
