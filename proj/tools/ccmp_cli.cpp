#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ccmp/bench.hpp"
#include "ccmp/cbs.hpp"

namespace
{
    struct CommonFlags
    {
        std::string scenario_path;
        std::string checker;
        int grid = 0;
        int sides = 0;
        std::string alloc;
        double p_safe = 0.0;
        long iterations = 0;
        long merge_bound = -1;
        std::uint64_t seed = 1;
        double max_time = 180.0;
        bool centralized = false;
    };

    void add_scenario_flags(CLI::App *cmd, CommonFlags &f, bool with_planner_knobs)
    {
        cmd->add_option("--scenario", f.scenario_path, "scenario file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--checker", f.checker, "collision checker")
            ->check(CLI::IsMember({"m1", "m21", "m22"}));
        cmd->add_option("--grid", f.grid, "grid divisions d for m22");
        cmd->add_option("--sides", f.sides, "collision polytope sides");
        cmd->add_option("--alloc", f.alloc, "risk allocation mode")
            ->check(CLI::IsMember({"equal", "adaptive"}));
        cmd->add_option("--psafe", f.p_safe, "per-robot safety probability");
        if (with_planner_knobs)
        {
            cmd->add_option("-N", f.iterations, "low-level iterations per replan");
            cmd->add_option("-B", f.merge_bound, "conflict count triggering a merge");
            cmd->add_option("--seed", f.seed, "planner seed");
            cmd->add_option("--max-time", f.max_time, "planning time limit in seconds");
            cmd->add_flag("--centralized", f.centralized,
                          "plan in the joint space instead of CC-K-CBS");
        }
    }

    ccmp::Scenario load_with_overrides(const CommonFlags &f)
    {
        ccmp::Scenario s = ccmp::load_scenario(f.scenario_path);
        if (!f.checker.empty())
            s.checker_method = f.checker == "m1"    ? ccmp::CheckMethod::M1
                               : f.checker == "m21" ? ccmp::CheckMethod::M21
                                                    : ccmp::CheckMethod::M22;
        if (f.grid > 0)
            s.grid_divisions = f.grid;
        if (f.sides > 0)
            s.polytope_sides = f.sides;
        if (!f.alloc.empty())
            s.allocation = ccmp::allocation_from_string(f.alloc);
        if (f.p_safe > 0.0)
            s.p_safe = f.p_safe;
        ccmp::validate_scenario(s);
        return s;
    }

    ccmp::CbsConfig cbs_config(const CommonFlags &f)
    {
        ccmp::CbsConfig cfg;
        cfg.seed = f.seed;
        cfg.max_time_s = f.max_time;
        if (f.iterations > 0)
            cfg.low_level_iterations = f.iterations;
        if (f.merge_bound >= 0)
            cfg.merge_bound = f.merge_bound;
        return cfg;
    }

    int run_plan(const CommonFlags &f, const std::string &out_path,
                 const std::string &plot_path)
    {
        const ccmp::Scenario s = load_with_overrides(f);
        const ccmp::CbsConfig cfg = cbs_config(f);
        const ccmp::PlanResult r = f.centralized ? ccmp::centralized_plan(s, cfg)
                                                 : ccmp::cc_kcbs(s, cfg);
        std::cerr << "status: " << ccmp::to_string(r.status)
                  << "  wall_time_s: " << r.metrics.wall_time_s
                  << "  ct_nodes: " << r.metrics.ct_nodes
                  << "  conflicts: " << r.metrics.conflicts << "\n";
        if (!out_path.empty())
            ccmp::save_result(out_path, r);
        if (!plot_path.empty() && r.status == ccmp::PlanStatus::Success)
            ccmp::plot_plan(r, s, plot_path);
        switch (r.status)
        {
        case ccmp::PlanStatus::Success:
            return 0;
        case ccmp::PlanStatus::Timeout:
            return 2;
        default:
            return 3;
        }
    }

    int run_mc_validate(const CommonFlags &f, const std::string &result_path, int runs,
                        std::uint64_t seed)
    {
        const ccmp::Scenario s = load_with_overrides(f);
        const ccmp::PlanResult r = ccmp::load_result(result_path);
        if (r.status != ccmp::PlanStatus::Success)
        {
            std::cerr << "mc-validate: result status is " << ccmp::to_string(r.status)
                      << ", nothing to validate\n";
            return 1;
        }
        const ccmp::McValidation mv = ccmp::mc_validate(s, r, runs, seed);
        ccmp::Json j;
        j["runs"] = mv.runs;
        j["bound"] = 1.0 - s.p_safe;
        j["worst_fraction"] = mv.worst_fraction;
        j["worst_se"] = mv.worst_se;
        for (std::size_t i = 0; i < mv.per_robot_fraction.size(); ++i)
        {
            ccmp::Json row;
            row["name"] = s.robots[i].name;
            row["fraction"] = mv.per_robot_fraction[i];
            row["se"] = mv.per_robot_se[i];
            j["robots"].push_back(row);
        }
        std::cout << j.dump(2) << "\n";
        for (std::size_t i = 0; i < mv.per_robot_fraction.size(); ++i)
            std::cerr << s.robots[i].name << ": collision fraction "
                      << mv.per_robot_fraction[i] << " +- " << 1.96 * mv.per_robot_se[i]
                      << " (95% CI)\n";
        std::cerr << "worst fraction " << mv.worst_fraction << ", bound "
                  << 1.0 - s.p_safe << "\n";
        return mv.worst_fraction <= 1.0 - s.p_safe ? 0 : 4;
    }

    int run_bench_checkers(int pairs, long mc_samples, std::uint64_t seed, double p_safe,
                           int sides, const std::string &out_path)
    {
        ccmp::CheckerBenchConfig cfg;
        cfg.n_pairs = pairs;
        cfg.mc_samples = mc_samples;
        cfg.seed = seed;
        if (p_safe > 0.0)
            cfg.p_safe = p_safe;
        if (sides > 0)
            cfg.polytope_sides = sides;
        const ccmp::CheckerBenchResult r = ccmp::run_checker_benchmark(cfg);
        if (out_path.empty())
        {
            ccmp::write_checker_csv(r, std::cout);
        }
        else
        {
            std::ofstream out(out_path);
            if (!out)
                throw std::runtime_error("bench-checkers: cannot open '" + out_path + "'");
            ccmp::write_checker_csv(r, out);
        }
        std::cerr << "method      space   R_z     C_z     median_ns\n";
        char line[128];
        for (const auto &s : r.summary)
        {
            std::snprintf(line, sizeof(line), "%-11s %-7s %.4f  %+.4f  %.0f\n",
                          s.method.c_str(), s.space_size.c_str(), s.rejection_rate,
                          s.conservatism, s.median_ns);
            std::cerr << line;
        }
        return 0;
    }

    int run_bench_planner(const CommonFlags &f, int runs, const std::string &out_path)
    {
        const ccmp::Scenario s = load_with_overrides(f);
        const ccmp::PlannerBenchStats stats = ccmp::run_planner_benchmark(
            s, f.scenario_path, runs, f.seed, f.max_time, f.centralized);
        std::ostringstream csv;
        csv << "seed,status,wall_time_s,ct_nodes,conflicts\n";
        for (const auto &row : stats.rows)
            csv << row.seed << "," << ccmp::to_string(row.status) << "," << row.wall_time_s
                << "," << row.ct_nodes << "," << row.conflicts << "\n";
        if (out_path.empty())
        {
            std::cout << csv.str();
        }
        else
        {
            std::ofstream out(out_path);
            if (!out)
                throw std::runtime_error("bench-planner: cannot open '" + out_path + "'");
            out << csv.str();
        }
        std::cerr << "success rate " << stats.success_rate << " (" << stats.successes << "/"
                  << stats.runs << "), time over successes " << stats.mean_time_s << " +- "
                  << stats.sd_time_s << " s\n";
        return 0;
    }

    int run_plot(const CommonFlags &f, const std::string &result_path,
                 const std::string &out_path)
    {
        const ccmp::Scenario s = load_with_overrides(f);
        const ccmp::PlanResult r = ccmp::load_result(result_path);
        ccmp::plot_plan(r, s, out_path);
        std::cerr << "wrote " << out_path << "\n";
        return 0;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"chance-constrained multi-robot motion planning toolkit"};
    app.require_subcommand(1);

    CommonFlags plan_flags;
    std::string plan_out, plan_plot;
    CLI::App *plan = app.add_subcommand("plan", "plan a scenario");
    add_scenario_flags(plan, plan_flags, true);
    plan->add_option("--out", plan_out, "result file to write");
    plan->add_option("--plot", plan_plot, "plot file to write on success");

    CommonFlags mc_flags;
    std::string mc_result;
    int mc_runs = 500;
    std::uint64_t mc_seed = 1;
    CLI::App *mcv = app.add_subcommand("mc-validate",
                                       "closed-loop Monte Carlo validation of a result");
    add_scenario_flags(mcv, mc_flags, false);
    mcv->add_option("--result", mc_result, "result file to validate")
        ->required()
        ->check(CLI::ExistingFile);
    mcv->add_option("--runs", mc_runs, "rollouts per robot");
    mcv->add_option("--seed", mc_seed, "rollout seed");

    int bc_pairs = 1000;
    long bc_mc_samples = 100000;
    std::uint64_t bc_seed = 1;
    double bc_psafe = 0.0;
    int bc_sides = 0;
    std::string bc_out;
    CLI::App *bc = app.add_subcommand("bench-checkers", "collision checker benchmark");
    bc->add_option("--runs", bc_pairs, "belief pairs per space");
    bc->add_option("--mc-samples", bc_mc_samples, "oracle samples per pair");
    bc->add_option("--seed", bc_seed, "sampling seed");
    bc->add_option("--psafe", bc_psafe, "per-pair safety probability");
    bc->add_option("--sides", bc_sides, "collision polytope sides");
    bc->add_option("--out", bc_out, "CSV file (stdout when omitted)");

    CommonFlags bp_flags;
    int bp_runs = 50;
    std::string bp_out;
    CLI::App *bp = app.add_subcommand("bench-planner", "planner seed-sweep benchmark");
    add_scenario_flags(bp, bp_flags, true);
    bp->add_option("--runs", bp_runs, "number of seeds to sweep");
    bp->add_option("--out", bp_out, "CSV file (stdout when omitted)");

    CommonFlags plot_flags;
    std::string plot_result, plot_out;
    CLI::App *plot = app.add_subcommand("plot", "render a result to a vector plot");
    add_scenario_flags(plot, plot_flags, false);
    plot->add_option("--result", plot_result, "result file to draw")
        ->required()
        ->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "plot file to write")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (plan->parsed())
            return run_plan(plan_flags, plan_out, plan_plot);
        if (mcv->parsed())
            return run_mc_validate(mc_flags, mc_result, mc_runs, mc_seed);
        if (bc->parsed())
            return run_bench_checkers(bc_pairs, bc_mc_samples, bc_seed, bc_psafe, bc_sides,
                                      bc_out);
        if (bp->parsed())
            return run_bench_planner(bp_flags, bp_runs, bp_out);
        if (plot->parsed())
            return run_plot(plot_flags, plot_result, plot_out);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
