// Copyright 2026 The ergostein Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "ergostein/error.hpp"
#include "ergostein/parallel.hpp"
#include "ergostein_cli/commands.hpp"
#include "ergostein_cli/config.hpp"

namespace {

using ergostein::cli::Invocation;

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

}  // namespace

int main(int argc, char** argv) {
    namespace cli = ergostein::cli;
    CLI::App app{"ergostein: one-step SDE schemes and ergodic error checks"};
    app.require_subcommand(1);

    Flags flags;
    const std::map<std::string, std::function<int(const Invocation&)>> commands{
        {"check-assumptions", cli::cmd_check_assumptions},
        {"simulate", cli::cmd_simulate},
        {"converge", cli::cmd_converge},
        {"stein-verify", cli::cmd_stein_verify},
        {"blowup-demo", cli::cmd_blowup_demo},
    };
    const std::map<std::string, std::string> help{
        {"check-assumptions", "sample the monotonicity, coercivity and growth conditions"},
        {"simulate", "run one chain; write a trace and a time-average estimate"},
        {"converge", "estimate the ergodic error over a step-size grid and fit its order"},
        {"stein-verify", "solve the Stein equation and check the error representation"},
        {"blowup-demo", "contrast explicit Euler divergence with the modified schemes"},
    };
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", flags.config_path, "INI configuration file");
        sub->add_option("--seed", flags.seed, "master seed (default 0)");
        sub->add_option("--workers", flags.workers, "worker threads (default: all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--format", flags.format, "report format")
            ->check(CLI::IsMember({"csv", "json"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kUsage;
    }

    const auto* chosen = app.get_subcommands().front();
    Invocation inv;
    try {
        if (!flags.config_path.empty()) inv.config = cli::load_config(flags.config_path);
        if (flags.seed) inv.config.run.seed = *flags.seed;
        if (flags.out) inv.config.output.dir = *flags.out;
        if (flags.format) inv.config.output.format = *flags.format;
        cli::validate(inv.config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kUsage;
    }
    inv.workers = flags.workers.value_or(ergostein::default_workers());
    inv.log = &std::cout;

    try {
        return commands.at(chosen->get_name())(inv);
    } catch (const ergostein::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kUsage;
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kFail;
    }
}
