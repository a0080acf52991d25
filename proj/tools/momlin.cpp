#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "momlin/case.hpp"
#include "momlin/errors.hpp"
#include "momlin/evaluate.hpp"
#include "momlin/linearize.hpp"
#include "momlin/moment_relax.hpp"
#include "momlin/sdpa_io.hpp"
#include "momlin/uncertainty.hpp"
#include "momlin/version.hpp"

namespace {

using nlohmann::json;

struct RunConfig {
    std::string case_path;
    std::string format = "auto"; // auto | matpower | json
    double line_limit = 0.0;     // p.u.; 0 keeps the case's own ratings
    bool drop_limits = false;    // remove all branch ratings before building
    int samples = 1000;
    std::uint64_t seed = 1;
    int order = 2; // relaxation order 2k
    bool dense = false;
    int merge_threshold = 1;
    int histogram_bins = 50;
    int threads = 1; // reserved; scenario solves run serially
    std::string outdir = ".";
    momlin::LoadModel load_base; // mean/cov/truncation before per-case weights
    momlin::SolverSettings solver;
};

class Timings {
public:
    void add(const std::string& name, double seconds) { entries_[name] = seconds; }
    json to_json() const { return entries_; }

private:
    std::map<std::string, double> entries_;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream is(path);
    if (!is) throw momlin::ParseError("cannot open config: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw momlin::ParseError("config " + path + ": " + e.what());
    }
    cfg.case_path = j.value("case", cfg.case_path);
    cfg.format = j.value("format", cfg.format);
    cfg.line_limit = j.value("line_limit", cfg.line_limit);
    cfg.drop_limits = j.value("drop_limits", cfg.drop_limits);
    cfg.samples = j.value("samples", cfg.samples);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.order = j.value("order", cfg.order);
    cfg.dense = j.value("dense", cfg.dense);
    cfg.merge_threshold = j.value("merge_threshold", cfg.merge_threshold);
    cfg.histogram_bins = j.value("histogram_bins", cfg.histogram_bins);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.outdir = j.value("outdir", cfg.outdir);
    if (j.contains("load_model")) {
        const json& lm = j["load_model"];
        auto read_vec2 = [&](const char* key, Eigen::Vector2d& v) {
            if (!lm.contains(key)) return;
            const auto& a = lm[key];
            if (!a.is_array() || a.size() != 2)
                throw momlin::ParseError(std::string("load_model.") + key +
                                         " must be an array of two numbers");
            v << a[0].get<double>(), a[1].get<double>();
        };
        read_vec2("mean", cfg.load_base.mean);
        read_vec2("lo", cfg.load_base.lo);
        read_vec2("hi", cfg.load_base.hi);
        if (lm.contains("cov")) {
            const auto& c = lm["cov"];
            if (!c.is_array() || c.size() != 2 || !c[0].is_array() || c[0].size() != 2 ||
                !c[1].is_array() || c[1].size() != 2)
                throw momlin::ParseError("load_model.cov must be a 2x2 array");
            cfg.load_base.cov << c[0][0].get<double>(), c[0][1].get<double>(),
                c[1][0].get<double>(), c[1][1].get<double>();
        }
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        cfg.solver.tol_feas = s.value("tol_feas", cfg.solver.tol_feas);
        cfg.solver.tol_gap = s.value("tol_gap", cfg.solver.tol_gap);
        cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        cfg.solver.verbose = s.value("verbose", cfg.solver.verbose);
    }
}

json config_echo(const RunConfig& cfg) {
    json lm;
    lm["mean"] = {cfg.load_base.mean[0], cfg.load_base.mean[1]};
    lm["cov"] = {{cfg.load_base.cov(0, 0), cfg.load_base.cov(0, 1)},
                 {cfg.load_base.cov(1, 0), cfg.load_base.cov(1, 1)}};
    lm["lo"] = {cfg.load_base.lo[0], cfg.load_base.lo[1]};
    lm["hi"] = {cfg.load_base.hi[0], cfg.load_base.hi[1]};
    return json{{"case", cfg.case_path},
                {"format", cfg.format},
                {"line_limit", cfg.line_limit},
                {"drop_limits", cfg.drop_limits},
                {"samples", cfg.samples},
                {"seed", cfg.seed},
                {"order", cfg.order},
                {"dense", cfg.dense},
                {"merge_threshold", cfg.merge_threshold},
                {"histogram_bins", cfg.histogram_bins},
                {"threads", cfg.threads},
                {"outdir", cfg.outdir},
                {"load_model", lm},
                {"solver",
                 {{"tol_feas", cfg.solver.tol_feas},
                  {"tol_gap", cfg.solver.tol_gap},
                  {"max_iter", cfg.solver.max_iter},
                  {"verbose", cfg.solver.verbose}}}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw momlin::ParseError("cannot write " + path);
    os << text;
    if (!os) throw momlin::ParseError("failed writing " + path);
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const Timings& timings, const std::vector<std::string>& outputs) {
    json j;
    j["command"] = command;
    j["version"] = momlin::version_string;
    j["config"] = config_echo(cfg);
    j["timings_seconds"] = timings.to_json();
    j["outputs"] = outputs;
    write_text(cfg.outdir + "/manifest_" + command + ".json", j.dump(2) + "\n");
}

momlin::NetworkCase load_network(const RunConfig& cfg) {
    if (cfg.case_path.empty()) throw momlin::ParseError("no case file given");
    momlin::NetworkCase net;
    if (cfg.format == "auto") {
        net = momlin::load_case(cfg.case_path);
    } else {
        std::ifstream is(cfg.case_path);
        if (!is) throw momlin::ParseError("cannot open case: " + cfg.case_path);
        std::ostringstream text;
        text << is.rdbuf();
        const momlin::CaseFormat f = cfg.format == "json"
                                         ? momlin::CaseFormat::json
                                         : momlin::CaseFormat::matpower_subset;
        net = momlin::parse_case(text.str(), f);
        if (net.name.empty())
            net.name = std::filesystem::path(cfg.case_path).stem().string();
    }
    if (cfg.drop_limits) net = momlin::clear_line_limits(net);
    if (cfg.line_limit > 0.0) net = momlin::set_uniform_line_limit(net, cfg.line_limit);
    return net;
}

momlin::LoadModel make_load_model(const RunConfig& cfg, const momlin::NetworkCase& net) {
    momlin::LoadModel m = momlin::LoadModel::standard_profile(net);
    m.mean = cfg.load_base.mean;
    m.cov = cfg.load_base.cov;
    m.lo = cfg.load_base.lo;
    m.hi = cfg.load_base.hi;
    return m;
}

momlin::RelaxationOptions relax_options(const RunConfig& cfg) {
    if (cfg.order != 2 && cfg.order != 4)
        throw momlin::ValidationError("--order is the relaxation order 2k: 2 or 4");
    momlin::RelaxationOptions opt;
    opt.order = cfg.order / 2;
    opt.dense = cfg.dense;
    opt.clique_merge_threshold = cfg.merge_threshold;
    return opt;
}

json relaxation_summary(const momlin::MomentRelaxation& relax,
                        const momlin::RelaxSolution& sol,
                        const momlin::PolynomialProgram& prog) {
    json j;
    j["case"] = prog.net.name;
    j["order"] = 2 * relax.order;
    j["mode"] = relax.cliques.cliques.size() == 1 ? "dense" : "sparse";
    j["status"] = momlin::to_string(sol.status);
    j["objective"] = sol.objective;
    j["num_moments"] = relax.stats.num_moments;
    j["num_equalities"] = relax.stats.num_equalities;
    j["num_nonneg"] = relax.stats.num_nonneg;
    j["psd_dims"] = relax.stats.psd_dims;
    j["iterations"] = sol.stats.iterations;
    json first = json::object();
    const Eigen::VectorXd x = extract_first_moment(relax, sol);
    for (int i = 0; i < x.size(); ++i) first[prog.vars.name(i)] = x[i];
    j["first_moment"] = std::move(first);
    json moments = json::object();
    for (std::size_t m = 0; m < relax.keys.size(); ++m)
        moments[relax.keys[m].str([&](int id) { return prog.vars.name(id); })] =
            sol.values[static_cast<int>(m)];
    j["moments"] = std::move(moments);
    return j;
}

int cmd_relax(const RunConfig& cfg, const std::string& sdpa_out) {
    Timings timings;
    std::vector<std::string> outputs;
    const momlin::NetworkCase net = load_network(cfg);
    const momlin::LoadModel model = make_load_model(cfg, net);
    const momlin::PolynomialProgram prog = momlin::build_opf(net, model);
    const momlin::ScenarioSet scen = momlin::sample_factors(model, cfg.samples, cfg.seed);
    const momlin::MomentVector z = momlin::raw_moments(scen, cfg.order);

    const momlin::MomentRelaxation relax =
        momlin::build_relaxation(prog, z, relax_options(cfg));
    timings.add("relaxation_build", relax.stats.build_seconds);

    if (!sdpa_out.empty()) {
        momlin::export_sdpa(relax.problem, sdpa_out);
        outputs.push_back(sdpa_out);
    }

    const momlin::RelaxSolution sol = momlin::solve_relaxation(relax, cfg.solver);
    timings.add("relaxation_solve", sol.stats.solve_seconds);

    const std::string sol_path = cfg.outdir + "/relaxation.json";
    write_text(sol_path, relaxation_summary(relax, sol, prog).dump(2) + "\n");
    outputs.push_back(sol_path);
    const std::string clique_path = cfg.outdir + "/cliques.json";
    write_text(clique_path, relax.cliques.to_json() + "\n");
    outputs.push_back(clique_path);
    write_manifest(cfg, "relax", timings, outputs);

    std::printf("%s order 2k=%d (%s): objective %.6f, status %s, %d iterations, %.2fs\n",
                net.name.c_str(), cfg.order, cfg.dense ? "dense" : "sparse",
                sol.objective, momlin::to_string(sol.status).c_str(),
                sol.stats.iterations, sol.stats.solve_seconds);
    return momlin::solution_usable(sol.status) ? 0 : 3;
}

int cmd_linearize(const RunConfig& cfg, const std::string& profile,
                  std::string out_file) {
    Timings timings;
    const auto t0 = std::chrono::steady_clock::now();
    const momlin::NetworkCase net = load_network(cfg);
    const momlin::LoadModel model = make_load_model(cfg, net);
    const momlin::PolynomialProgram prog = momlin::build_opf(net, model);

    momlin::LinearizationPoint point;
    if (profile == "flat") {
        point = momlin::flat_point(prog);
    } else if (profile == "noload") {
        point = momlin::noload_point(prog);
    } else if (profile == "moment") {
        const momlin::ScenarioSet scen =
            momlin::sample_factors(model, cfg.samples, cfg.seed);
        const momlin::MomentVector z = momlin::raw_moments(scen, cfg.order);
        const momlin::MomentRelaxation relax =
            momlin::build_relaxation(prog, z, relax_options(cfg));
        const momlin::RelaxSolution sol = momlin::solve_relaxation(relax, cfg.solver);
        timings.add("relaxation_solve", sol.stats.solve_seconds);
        if (!momlin::solution_usable(sol.status)) {
            std::fprintf(stderr, "error: relaxation ended with status %s\n",
                         momlin::to_string(sol.status).c_str());
            return 3;
        }
        point = momlin::moment_point(relax, sol);
    } else {
        throw momlin::ValidationError("unknown profile: " + profile);
    }

    if (out_file.empty()) out_file = cfg.outdir + "/point-" + profile + ".json";
    write_text(out_file, momlin::point_json(prog, point));
    timings.add("total", seconds_since(t0));
    write_manifest(cfg, "linearize", timings, {out_file});
    std::printf("%s point written to %s\n", point.label().c_str(), out_file.c_str());
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& point_files) {
    Timings timings;
    const auto t0 = std::chrono::steady_clock::now();
    const momlin::NetworkCase net = load_network(cfg);
    const momlin::LoadModel model = make_load_model(cfg, net);
    const momlin::PolynomialProgram prog = momlin::build_opf(net, model);

    std::vector<momlin::LinearizationPoint> points;
    for (const auto& pf : point_files) {
        std::ifstream is(pf);
        if (!is) throw momlin::ParseError("cannot open point file: " + pf);
        std::ostringstream text;
        text << is.rdbuf();
        points.push_back(momlin::point_from_json(prog, text.str()));
    }

    const momlin::ScenarioSet scen = momlin::sample_factors(model, cfg.samples, cfg.seed);
    momlin::MonteCarloOptions opts;
    opts.histogram_bins = cfg.histogram_bins;
    opts.solver = cfg.solver;
    const momlin::EvaluationReport rep =
        momlin::run_monte_carlo(prog, points, scen, opts);
    timings.add("monte_carlo", seconds_since(t0));

    const std::string csv_path = cfg.outdir + "/report.csv";
    const std::string json_path = cfg.outdir + "/report.json";
    const std::string hist_path = cfg.outdir + "/histograms.csv";
    write_text(csv_path, momlin::report_csv(rep));
    write_text(json_path, momlin::report_json(rep));
    write_text(hist_path, momlin::histogram_csv(rep));
    write_manifest(cfg, "evaluate", timings, {csv_path, json_path, hist_path});

    std::printf("%-16s %10s %10s %10s %10s %10s %7s\n", "profile", "E(eps_p)",
                "sd(eps_p)", "E(eps_q)", "sd(eps_q)", "E(cost)", "failed");
    for (const auto& st : rep.profiles)
        std::printf("%-16s %10.5f %10.5f %10.5f %10.5f %10.2f %7d\n", st.name.c_str(),
                    st.mean_eps_p, st.std_eps_p, st.mean_eps_q, st.std_eps_q,
                    st.mean_cost, st.failed);
    return 0;
}

int cmd_export_sdpa(const RunConfig& cfg, std::string out_file) {
    Timings timings;
    const momlin::NetworkCase net = load_network(cfg);
    const momlin::LoadModel model = make_load_model(cfg, net);
    const momlin::PolynomialProgram prog = momlin::build_opf(net, model);
    const momlin::ScenarioSet scen = momlin::sample_factors(model, cfg.samples, cfg.seed);
    const momlin::MomentVector z = momlin::raw_moments(scen, cfg.order);
    const momlin::MomentRelaxation relax =
        momlin::build_relaxation(prog, z, relax_options(cfg));
    timings.add("relaxation_build", relax.stats.build_seconds);
    if (out_file.empty()) out_file = cfg.outdir + "/" + net.name + ".dat-s";
    momlin::export_sdpa(relax.problem, out_file);
    write_manifest(cfg, "export-sdpa", timings, {out_file});
    std::printf("wrote %s (%d moment variables)\n", out_file.c_str(),
                relax.stats.num_moments);
    return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& report_path) {
    std::ifstream is(report_path);
    if (!is) throw momlin::ParseError("cannot open report: " + report_path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw momlin::ParseError("report " + report_path + ": " + e.what());
    }
    momlin::EvaluationReport rep;
    rep.case_name = j.value("case", "");
    rep.scenarios = j.value("scenarios", 0);
    for (const auto& p : j.at("profiles")) {
        momlin::ProfileStats st;
        st.name = p.value("name", "");
        st.solved = p.value("solved", 0);
        st.failed = p.value("failed", 0);
        st.mean_eps_p = p.at("eps_p").value("mean", 0.0);
        st.std_eps_p = p.at("eps_p").value("std", 0.0);
        st.mean_eps_q = p.at("eps_q").value("mean", 0.0);
        st.std_eps_q = p.at("eps_q").value("std", 0.0);
        st.mean_cost = p.value("cost_mean", 0.0);
        rep.profiles.push_back(std::move(st));
    }

    const auto comparisons = momlin::compare_profiles(rep);
    json out;
    out["case"] = rep.case_name;
    for (const auto& cmp : comparisons) {
        json entry;
        for (int i : cmp.order) {
            entry.push_back(json{{"profile", rep.profiles[i].name},
                                 {"ratio_to_best", cmp.ratio[i]}});
        }
        out[cmp.metric] = std::move(entry);
        std::printf("%s ranking:\n", cmp.metric.c_str());
        for (int i : cmp.order)
            std::printf("  %-16s ratio to best %8.3f\n", rep.profiles[i].name.c_str(),
                        cmp.ratio[i]);
    }
    const std::string out_path = cfg.outdir + "/comparison.json";
    write_text(out_path, out.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    // config file values load first so explicit flags can override them
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(argv[i + 1], cfg);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return 2;
            }
        }
    }

    CLI::App app{"demand-aware linearization of AC optimal power flow via moment "
                 "relaxations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", momlin::version_string);

    std::string config_path, profile = "flat", sdpa_out, out_file, report_path;
    std::vector<std::string> point_files;

    auto add_common = [&](CLI::App* sub, bool with_relax) {
        sub->add_option("--config", config_path, "JSON config file (flags override it)");
        sub->add_option("--case", cfg.case_path, "case file (.m or .json)");
        sub->add_option("--format", cfg.format, "case format: auto|matpower|json")
            ->check(CLI::IsMember({"auto", "matpower", "json"}));
        sub->add_option("--limit", cfg.line_limit,
                        "uniform apparent-power line limit in p.u. (0 = keep case)");
        sub->add_flag("--drop-limits", cfg.drop_limits, "remove all branch ratings");
        sub->add_option("--samples", cfg.samples, "number of demand scenarios")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed, "RNG seed for the scenario draws");
        sub->add_option("--out", cfg.outdir, "output directory");
        sub->add_option("--threads", cfg.threads,
                        "worker threads (scenario solves currently run serially)");
        if (with_relax) {
            sub->add_option("--order", cfg.order, "relaxation order 2k: 2 or 4")
                ->check(CLI::IsMember({2, 4}));
            sub->add_flag("--dense", cfg.dense, "single-clique (dense) relaxation");
            sub->add_option("--merge-cliques", cfg.merge_threshold,
                            "merge adjacent cliques up to this joint size")
                ->check(CLI::PositiveNumber);
        }
    };

    CLI::App* relax = app.add_subcommand("relax", "solve the moment relaxation");
    add_common(relax, true);
    relax->add_option("--export-sdpa", sdpa_out, "also write the SDP in sparse SDPA format");

    CLI::App* linearize =
        app.add_subcommand("linearize", "write a linearization point file");
    add_common(linearize, true);
    linearize->add_option("--profile", profile, "moment|flat|noload")
        ->check(CLI::IsMember({"moment", "flat", "noload"}));
    linearize->add_option("--out-file", out_file, "point file path");

    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Monte-Carlo evaluation of linearized models");
    add_common(evaluate, false);
    evaluate->add_option("--point", point_files, "linearization point file (repeatable)")
        ->required();
    evaluate->add_option("--bins", cfg.histogram_bins, "histogram bin count")
        ->check(CLI::PositiveNumber);

    CLI::App* exports = app.add_subcommand("export-sdpa", "write the moment SDP only");
    add_common(exports, true);
    exports->add_option("--out-file", out_file, "output .dat-s path");

    CLI::App* report = app.add_subcommand("report", "rank profiles from a report.json");
    report->add_option("--report", report_path, "report.json produced by evaluate")
        ->required();
    report->add_option("--out", cfg.outdir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        std::filesystem::create_directories(cfg.outdir);
        if (relax->parsed()) return cmd_relax(cfg, sdpa_out);
        if (linearize->parsed()) return cmd_linearize(cfg, profile, out_file);
        if (evaluate->parsed()) return cmd_evaluate(cfg, point_files);
        if (exports->parsed()) return cmd_export_sdpa(cfg, out_file);
        if (report->parsed()) return cmd_report(cfg, report_path);
    } catch (const momlin::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const momlin::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const momlin::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
