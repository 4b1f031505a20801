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

#include "ergostein_cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ergostein/error.hpp"

namespace ergostein::cli {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected a number, got '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) {
        throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("expected true|false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
    return out;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt_double(v[i]);
    }
    return out;
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
Field number(std::string sec, std::string key, T RunConfig::*part, double T::*member) {
    return {std::move(sec), std::move(key),
            [part, member](RunConfig& c, const std::string& v) { (c.*part).*member = parse_double(v); },
            [part, member](const RunConfig& c) -> std::optional<std::string> {
                return fmt_double((c.*part).*member);
            }};
}

template <class T, class I>
Field integer(std::string sec, std::string key, T RunConfig::*part, I T::*member) {
    return {std::move(sec), std::move(key),
            [part, member](RunConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<I, int>) {
                    (c.*part).*member = parse_int(v);
                } else {
                    (c.*part).*member = static_cast<I>(parse_u64(v));
                }
            },
            [part, member](const RunConfig& c) -> std::optional<std::string> {
                return std::to_string((c.*part).*member);
            }};
}

template <class T>
Field text(std::string sec, std::string key, T RunConfig::*part, std::string T::*member) {
    return {std::move(sec), std::move(key),
            [part, member](RunConfig& c, const std::string& v) { (c.*part).*member = v; },
            [part, member](const RunConfig& c) -> std::optional<std::string> {
                return (c.*part).*member;
            }};
}

template <class T>
Field list(std::string sec, std::string key, T RunConfig::*part, std::vector<double> T::*member,
           bool omit_empty) {
    return {std::move(sec), std::move(key),
            [part, member](RunConfig& c, const std::string& v) { (c.*part).*member = parse_list(v); },
            [part, member, omit_empty](const RunConfig& c) -> std::optional<std::string> {
                const auto& v = (c.*part).*member;
                if (omit_empty && v.empty()) return std::nullopt;
                return fmt_list(v);
            }};
}

Field optional_int(std::string key, std::optional<int> ProblemConfig::*member) {
    return {"problem", std::move(key),
            [member](RunConfig& c, const std::string& v) { c.problem.*member = parse_int(v); },
            [member](const RunConfig& c) -> std::optional<std::string> {
                const auto& v = c.problem.*member;
                if (!v) return std::nullopt;
                return std::to_string(*v);
            }};
}

Field optional_number(std::string key, std::optional<double> ProblemConfig::*member) {
    return {"problem", std::move(key),
            [member](RunConfig& c, const std::string& v) { c.problem.*member = parse_double(v); },
            [member](const RunConfig& c) -> std::optional<std::string> {
                const auto& v = c.problem.*member;
                if (!v) return std::nullopt;
                return fmt_double(*v);
            }};
}

const std::vector<Field>& fields() {
    using P = ProblemConfig;
    using S = SchemeConfig;
    using R = RunSection;
    using O = OutputConfig;
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(text("problem", "name", &RunConfig::problem, &P::name));
        f.push_back(optional_int("dim", &P::dim));
        f.push_back(optional_number("a", &P::a));
        f.push_back(optional_number("c", &P::c));
        f.push_back(optional_number("nu", &P::nu));
        f.push_back(optional_number("kappa", &P::kappa));
        f.push_back(list("problem", "drift", &RunConfig::problem, &P::drift, true));
        f.push_back(list("problem", "diffusion", &RunConfig::problem, &P::diffusion, true));
        f.push_back(optional_number("gamma", &P::gamma));
        f.push_back(optional_number("L1", &P::L1));
        f.push_back(optional_number("L2", &P::L2));
        f.push_back(optional_number("L3", &P::L3));
        f.push_back(optional_number("p_star", &P::p_star));
        f.push_back(optional_number("growth_const", &P::growth_const));
        f.push_back({"problem", "theorem_study",
                     [](RunConfig& c, const std::string& v) { c.problem.theorem_study = parse_bool(v); },
                     [](const RunConfig& c) -> std::optional<std::string> {
                         if (!c.problem.theorem_study) return std::nullopt;
                         return *c.problem.theorem_study ? "true" : "false";
                     }});

        f.push_back(text("scheme", "kind", &RunConfig::scheme, &S::kind));
        f.push_back(number("scheme", "tau", &RunConfig::scheme, &S::tau));
        f.push_back(list("scheme", "tau_grid", &RunConfig::scheme, &S::tau_grid, false));
        f.push_back(number("scheme", "bem_tolerance", &RunConfig::scheme, &S::bem_tolerance));
        f.push_back(integer("scheme", "bem_max_iterations", &RunConfig::scheme, &S::bem_max_iterations));

        f.push_back(text("run", "phi", &RunConfig::run, &R::phi));
        f.push_back(number("run", "x0", &RunConfig::run, &R::x0));
        f.push_back(integer("run", "seed", &RunConfig::run, &R::seed));
        f.push_back(integer("run", "n_steps", &RunConfig::run, &R::n_steps));
        f.push_back(integer("run", "n_traj", &RunConfig::run, &R::n_traj));
        f.push_back(integer("run", "n_mc", &RunConfig::run, &R::n_mc));
        f.push_back(integer("run", "n_sub", &RunConfig::run, &R::n_sub));
        f.push_back(integer("run", "n_chains", &RunConfig::run, &R::n_chains));
        f.push_back(integer("run", "n_batches", &RunConfig::run, &R::n_batches));
        f.push_back(number("run", "burn_in_fraction", &RunConfig::run, &R::burn_in_fraction));
        f.push_back(integer("run", "thin", &RunConfig::run, &R::thin));
        f.push_back(number("run", "p", &RunConfig::run, &R::p));
        f.push_back(integer("run", "samples", &RunConfig::run, &R::samples));
        f.push_back(number("run", "T", &RunConfig::run, &R::T));
        f.push_back(number("run", "tau_fine", &RunConfig::run, &R::tau_fine));
        f.push_back(text("run", "estimator", &RunConfig::run, &R::estimator));
        f.push_back(integer("run", "pilot_steps", &RunConfig::run, &R::pilot_steps));
        f.push_back(integer("run", "min_steps", &RunConfig::run, &R::min_steps));
        f.push_back(integer("run", "max_steps", &RunConfig::run, &R::max_steps));
        f.push_back(number("run", "budget_scale", &RunConfig::run, &R::budget_scale));
        f.push_back(integer("run", "moment_steps", &RunConfig::run, &R::moment_steps));
        f.push_back(number("run", "slope_lo", &RunConfig::run, &R::slope_lo));
        f.push_back(number("run", "slope_hi", &RunConfig::run, &R::slope_hi));

        f.push_back(text("output", "dir", &RunConfig::output, &O::dir));
        f.push_back(text("output", "format", &RunConfig::output, &O::format));
        return f;
    }();
    return table;
}

// Line numbers of "[section]" headers and "key = value" lines, for messages.
std::map<std::string, int> line_index(const std::string& text) {
    std::map<std::string, int> index;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            index.emplace("[" + section + "]", n);
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos) index.emplace(section + "." + trim(t.substr(0, eq)), n);
    }
    return index;
}

int find_line(const std::map<std::string, int>& index, const std::string& key) {
    const auto it = index.find(key);
    return it == index.end() ? 0 : it->second;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(e.message(), static_cast<int>(e.line()));
    }
    const auto index = line_index(text);
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError("key '" + section + "' outside of a section",
                              find_line(index, "." + section));
        }
        const bool known_section = std::any_of(fields().begin(), fields().end(),
                                               [&](const Field& f) { return f.section == section; });
        if (!known_section) {
            throw ConfigError("unknown section [" + section + "]", find_line(index, "[" + section + "]"));
        }
        for (const auto& [key, value] : body) {
            const int line = find_line(index, section + "." + key);
            const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
                return f.section == section && f.key == key;
            });
            if (it == fields().end()) {
                throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
            }
            if (!value.empty()) {
                throw ConfigError("nested value for '" + key + "'", line);
            }
            try {
                it->set(cfg, trim(value.data()));
            } catch (const std::exception& e) {
                throw ConfigError("[" + section + "] " + key + ": " + e.what(), line);
            }
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields()) {
        const auto v = f.get(config);
        if (!v) continue;
        if (f.section != section) {
            if (!section.empty()) os << '\n';
            section = f.section;
            os << '[' << section << "]\n";
        }
        os << f.key << " = " << *v << '\n';
    }
    return os.str();
}

std::string config_digest(const RunConfig& config) {
    const std::string text = serialize_config(config);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

void validate(const RunConfig& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    try {
        (void)build_problem(c.problem);
    } catch (const ergostein::Error& e) {
        throw ConfigError(std::string("[problem] ") + e.what());
    }
    try {
        (void)parse_scheme_kind(c.scheme.kind);
    } catch (const ergostein::Error& e) {
        throw ConfigError(std::string("[scheme] ") + e.what());
    }
    if (!(c.scheme.tau > 0.0 && c.scheme.tau < 1.0)) throw ConfigError("[scheme] tau must lie in (0, 1)");
    for (double t : c.scheme.tau_grid) {
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("[scheme] tau_grid values must lie in (0, 1)");
    }
    positive(c.scheme.bem_tolerance, "[scheme] bem_tolerance");
    positive(c.scheme.bem_max_iterations, "[scheme] bem_max_iterations");
    const auto names = test_function_names();
    if (std::find(names.begin(), names.end(), c.run.phi) == names.end()) {
        throw ConfigError("[run] unknown phi '" + c.run.phi + "'");
    }
    for (auto [v, name] : {std::pair{static_cast<double>(c.run.n_steps), "[run] n_steps"},
                           std::pair{static_cast<double>(c.run.n_traj), "[run] n_traj"},
                           std::pair{static_cast<double>(c.run.n_mc), "[run] n_mc"},
                           std::pair{static_cast<double>(c.run.n_sub), "[run] n_sub"},
                           std::pair{static_cast<double>(c.run.n_chains), "[run] n_chains"},
                           std::pair{static_cast<double>(c.run.n_batches), "[run] n_batches"},
                           std::pair{static_cast<double>(c.run.thin), "[run] thin"},
                           std::pair{c.run.p, "[run] p"},
                           std::pair{static_cast<double>(c.run.samples), "[run] samples"},
                           std::pair{c.run.T, "[run] T"},
                           std::pair{c.run.tau_fine, "[run] tau_fine"},
                           std::pair{static_cast<double>(c.run.pilot_steps), "[run] pilot_steps"},
                           std::pair{static_cast<double>(c.run.min_steps), "[run] min_steps"},
                           std::pair{static_cast<double>(c.run.max_steps), "[run] max_steps"},
                           std::pair{c.run.budget_scale, "[run] budget_scale"},
                           std::pair{static_cast<double>(c.run.moment_steps), "[run] moment_steps"}}) {
        positive(v, name);
    }
    if (c.run.n_batches < 8) throw ConfigError("[run] n_batches must be >= 8");
    if (!(c.run.burn_in_fraction >= 0.0 && c.run.burn_in_fraction < 1.0)) {
        throw ConfigError("[run] burn_in_fraction must lie in [0, 1)");
    }
    if (!(c.run.tau_fine < 1.0)) throw ConfigError("[run] tau_fine must be < 1");
    if (c.run.estimator != "plain" && c.run.estimator != "stein-control" && c.run.estimator != "exact") {
        throw ConfigError("[run] estimator must be plain|stein-control|exact");
    }
    if (c.run.min_steps > c.run.max_steps) throw ConfigError("[run] min_steps exceeds max_steps");
    if (!(c.run.slope_lo < c.run.slope_hi)) throw ConfigError("[run] slope_lo must be < slope_hi");
    if (c.output.format != "json" && c.output.format != "csv") {
        throw ConfigError("[output] format must be json|csv");
    }
    if (c.output.dir.empty()) throw ConfigError("[output] dir must not be empty");
}

SdeProblem build_problem(const ProblemConfig& c) {
    SdeProblem p;
    const bool radial = c.name == "radial";
    if (!radial && (c.dim || c.a || c.c || c.nu || c.kappa)) {
        throw InvalidArgument("dim, a, c, nu and kappa apply to name = radial only");
    }
    if (c.name != "poly" && (!c.drift.empty() || !c.diffusion.empty())) {
        throw InvalidArgument("drift and diffusion apply to name = poly only");
    }
    if (radial) {
        const int dim = c.dim.value_or(1);
        if (dim < 1 || dim > kMaxDim) {
            throw InvalidArgument("dim must lie in [1, " + std::to_string(kMaxDim) + "]");
        }
        p = radial_problem("radial", dim,
                           RadialCoefficients{c.a.value_or(1.0), c.c.value_or(1.0),
                                              c.nu.value_or(1.0), c.kappa.value_or(0.0)},
                           AssumptionParams{});
    } else if (c.name == "poly") {
        if (c.drift.empty() || c.diffusion.empty()) {
            throw InvalidArgument("poly problems need drift and diffusion coefficients");
        }
        p = poly_problem("poly", c.drift, c.diffusion, AssumptionParams{});
    } else {
        p = gallery_problem(c.name);
    }
    auto& q = p.params;
    if (c.gamma) q.gamma = *c.gamma;
    if (c.L1) q.L1 = *c.L1;
    if (c.L2) q.L2 = *c.L2;
    if (c.L3) q.L3 = *c.L3;
    if (c.p_star) q.p_star = *c.p_star;
    if (c.growth_const) q.growth_const = *c.growth_const;
    if (c.theorem_study) q.theorem_study = *c.theorem_study;
    q.validate();
    return p;
}

SchemeSpec build_scheme(const SchemeConfig& c, double tau) {
    SchemeSpec s;
    s.kind = parse_scheme_kind(c.kind);
    s.tau = tau;
    s.bem.tolerance = c.bem_tolerance;
    s.bem.max_iterations = c.bem_max_iterations;
    s.validate();
    return s;
}

}  // namespace ergostein::cli
