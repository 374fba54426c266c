// Command-line front end: `run` executes batch optimisation loops and writes
// regret traces, `verify` cross-checks the score's information bound against
// Monte-Carlo oracles, `timing` measures how query cost scales.

#include "gibbon/bo_loop.hpp"
#include "gibbon/timing.hpp"
#include "gibbon/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using gibbon::RunConfig;

// "1,2,5" or "0..19" (inclusive range), mixed freely: "0..3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string tok = text.substr(pos, comma - pos);
        if (!tok.empty()) {
            const std::size_t dots = tok.find("..");
            std::size_t used = 0;
            if (dots == std::string::npos) {
                out.push_back(std::stoull(tok, &used));
                if (used != tok.size()) throw std::invalid_argument("bad seed token: " + tok);
            } else {
                const std::string a = tok.substr(0, dots), b = tok.substr(dots + 2);
                const std::uint64_t lo = std::stoull(a, &used);
                if (used != a.size()) throw std::invalid_argument("bad seed token: " + tok);
                const std::uint64_t hi = std::stoull(b, &used);
                if (used != b.size() || hi < lo) {
                    throw std::invalid_argument("bad seed range: " + tok);
                }
                for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
            }
        }
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

std::string trimmed(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// One key=value per line; blank lines and lines starting with # are skipped.
std::map<std::string, std::string> read_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        }
        kv[trimmed(t.substr(0, eq))] = trimmed(t.substr(eq + 1));
    }
    return kv;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

int to_int(const std::string& v) {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
    return x;
}

// File values fill in whatever the command line left untouched, so flags win.
void apply_config_file(const CLI::App& run, const std::string& path, RunConfig& cfg,
                       std::string& seeds_text) {
    const auto fresh = [&run](const char* flag) { return run.count(flag) == 0; };
    for (const auto& [key, value] : read_flat_config(path)) {
        try {
            if (key == "benchmark") {
                if (fresh("--benchmark")) cfg.benchmark = value;
            } else if (key == "acq") {
                if (fresh("--acq")) cfg.acquisition = value;
            } else if (key == "batch-size") {
                if (fresh("--batch-size")) cfg.batch_size = to_int(value);
            } else if (key == "budget") {
                if (fresh("--budget")) cfg.budget = to_double(value);
            } else if (key == "seeds") {
                if (fresh("--seeds")) seeds_text = value;
            } else if (key == "max-value-samples") {
                if (fresh("--max-value-samples")) cfg.max_value_samples = to_int(value);
            } else if (key == "grid-size") {
                if (fresh("--grid-size")) cfg.grid_size = to_int(value);
            } else if (key == "restarts") {
                if (fresh("--restarts")) cfg.restarts = to_int(value);
            } else if (key == "init-size") {
                if (fresh("--init-size")) cfg.init_size = to_int(value);
            } else if (key == "out") {
                if (fresh("--out")) cfg.out = value;
            } else if (key == "emit-overhead") {
                if (fresh("--emit-overhead")) cfg.emit_overhead = parse_bool(value);
            } else {
                throw std::runtime_error(path + ": unknown config key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ": " + key + ": " + e.what());
        }
    }
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string tok = text.substr(pos, comma - pos);
        if (!tok.empty()) {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("bad integer token: " + tok);
        }
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty integer list");
    return out;
}

int run_command(const RunConfig& config, const std::string& seeds_text) {
    RunConfig cfg = config;
    cfg.seeds = parse_seed_list(seeds_text);
    const std::vector<gibbon::RegretTrace> traces = gibbon::run(cfg);

    // With no output path the trace goes to stdout, so status moves to stderr.
    std::ostream& status = cfg.out.empty() ? std::cerr : std::cout;
    if (cfg.out.empty()) gibbon::write_trace_csv(std::cout, traces, cfg.emit_overhead);

    bool any_truncated = false;
    for (const gibbon::RegretTrace& tr : traces) {
        char line[160];
        std::snprintf(line, sizeof(line), "run %d seed %llu: %zu rows, final regret %.6g",
                      tr.run_id, static_cast<unsigned long long>(tr.seed), tr.rows.size(),
                      tr.rows.empty() ? 0.0 : tr.rows.back().regret);
        status << line;
        if (tr.truncated) {
            any_truncated = true;
            status << "  [truncated: " << tr.failure << "]";
        }
        status << "\n";
    }
    if (!cfg.out.empty()) status << "wrote " << traces.size() << " trace(s) to " << cfg.out << "\n";
    return any_truncated ? 2 : 0;
}

int verify_command(const std::string& batch_sizes_text, int scenarios, int samples,
                   std::uint64_t seed, double slack, const std::string& out) {
    const std::vector<int> batch_sizes = parse_int_list(batch_sizes_text);
    const std::vector<gibbon::ScenarioRecord> records =
        gibbon::verification_report(batch_sizes, scenarios, samples, seed, slack);

    bool all_pass = true;
    nlohmann::json recs = nlohmann::json::array();
    for (const gibbon::ScenarioRecord& r : records) {
        char hash[24];
        std::snprintf(hash, sizeof(hash), "0x%016llx",
                      static_cast<unsigned long long>(r.inputs_hash));
        recs.push_back({{"inputs_hash", hash},
                        {"batch_size", r.B},
                        {"lower_bound", r.lower_bound},
                        {"mc_estimate", r.mc_estimate},
                        {"std_error", r.std_error},
                        {"pass", r.pass}});
        all_pass = all_pass && r.pass;
    }
    const nlohmann::json report = {{"batch_sizes", batch_sizes},
                                   {"scenarios_per_batch_size", scenarios},
                                   {"samples", samples},
                                   {"seed", seed},
                                   {"slack_se", slack},
                                   {"estimator", gibbon::kEntropyEstimator},
                                   {"all_pass", all_pass},
                                   {"records", recs}};

    if (out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream os(out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + out);
        os << report.dump(2) << "\n";
        std::cout << (all_pass ? "all " : "NOT all ") << records.size()
                  << " scenario(s) passed; report in " << out << "\n";
    }
    return all_pass ? 0 : 2;
}

int timing_command(const std::string& axis_text, std::string values_text, int trials,
                   gibbon::ProbeOptions opts, const std::string& out) {
    const gibbon::ScalingAxis axis = axis_text == "n" ? gibbon::ScalingAxis::kTrainingSize
                                                      : gibbon::ScalingAxis::kBatchSize;
    if (values_text.empty()) values_text = axis_text == "n" ? "50,100,200,400" : "2,4,8,16";
    const gibbon::ScalingReport report =
        gibbon::scaling_probe(axis, parse_int_list(values_text), trials, opts);

    if (out.empty()) {
        gibbon::write_scaling_csv(std::cout, report);
        std::cerr << "fitted log-log slope " << report.slope << "\n";
    } else {
        gibbon::write_scaling_csv(out, report);
        std::cout << "fitted log-log slope " << report.slope << "; table in " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batch Bayesian optimisation with an information-based acquisition"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string seeds_text = "0";
    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Optimise a benchmark and write a regret trace");
    run->add_option("--config", config_path,
                    "Flat key=value file; command-line flags take precedence");
    run->add_option("--benchmark", cfg.benchmark, "Benchmark name from the registry");
    run->add_option("--acq", cfg.acquisition,
                    "gibbon | gibbon-modified | mes | ei | lp-ei | lp-mes | dpp-explore | random");
    run->add_option("--batch-size", cfg.batch_size, "Points evaluated per step");
    run->add_option("--budget", cfg.budget, "Total evaluation cost to spend");
    run->add_option("--seeds", seeds_text, "Comma list and/or inclusive ranges, e.g. 0..19");
    run->add_option("--max-value-samples", cfg.max_value_samples, "Sampled maxima per step");
    run->add_option("--grid-size", cfg.grid_size, "Gumbel grid size; 0 picks 10000*dim");
    run->add_option("--restarts", cfg.restarts, "Inner-search restarts; 0 picks the default");
    run->add_option("--init-size", cfg.init_size, "Initial design size; 0 picks the default");
    run->add_option("--out", cfg.out, "Trace CSV path; stdout when omitted");
    run->add_flag("--emit-overhead", cfg.emit_overhead,
                  "Record wall-clock overhead per row (traces stop being byte-reproducible)");

    std::string batch_sizes_text = "1,2,3";
    int scenarios = 20;
    int samples = 4000;
    std::uint64_t verify_seed = 0;
    double slack = 3.0;
    std::string verify_out;
    CLI::App* verify =
        app.add_subcommand("verify", "Check the information bound against sampling oracles; "
                                     "exits 2 if any scenario fails");
    verify->add_option("--batch-sizes", batch_sizes_text, "Scenario batch sizes (max 3)");
    verify->add_option("--scenarios", scenarios, "Random scenarios per batch size");
    verify->add_option("--samples", samples, "Monte-Carlo samples per scenario");
    verify->add_option("--seed", verify_seed, "Scenario stream seed");
    verify->add_option("--slack", slack, "Standard errors of slack on the bound check");
    verify->add_option("--out", verify_out, "JSON report path; stdout when omitted");

    std::string axis_text = "n";
    std::string values_text;
    int trials = 5;
    gibbon::ProbeOptions popts;
    std::string timing_out;
    CLI::App* timing = app.add_subcommand("timing", "Measure query-cost scaling");
    timing->add_option("--axis", axis_text, "n (training size) or B (batch size)")
        ->check(CLI::IsMember({"n", "B"}));
    timing->add_option("--values", values_text,
                       "Swept sizes; defaults 50,100,200,400 (n) or 2,4,8,16 (B)");
    timing->add_option("--trials", trials, "Timed samples per value");
    timing->add_option("--fixed-n", popts.fixed_n, "Training size while sweeping B");
    timing->add_option("--fixed-b", popts.fixed_b, "Batch size while sweeping n");
    timing->add_option("--dim", popts.dim, "Input dimension of the synthetic model");
    timing->add_option("--seed", popts.seed, "Data and batch stream seed");
    timing->add_option("--min-sample-s", popts.min_sample_s,
                       "Shortest acceptable timed sample in seconds");
    timing->add_option("--out", timing_out, "CSV path; stdout when omitted");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!config_path.empty()) apply_config_file(*run, config_path, cfg, seeds_text);
            if (cfg.benchmark.empty()) {
                throw std::runtime_error("a benchmark is required (--benchmark or benchmark=)");
            }
            return run_command(cfg, seeds_text);
        }
        if (verify->parsed()) {
            return verify_command(batch_sizes_text, scenarios, samples, verify_seed, slack,
                                  verify_out);
        }
        return timing_command(axis_text, values_text, trials, popts, timing_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
