#ifndef CCMP_SCENARIO_HPP_
#define CCMP_SCENARIO_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccmp/chance.hpp"
#include "ccmp/dynamics.hpp"
#include "ccmp/gaussian.hpp"
#include "ccmp/geometry.hpp"

namespace ccmp
{
    using Json = nlohmann::ordered_json;

    enum class DynamicsKind
    {
        Linear2D,
        Unicycle2
    };

    inline std::string to_string(DynamicsKind k)
    {
        return k == DynamicsKind::Linear2D ? "linear2d" : "unicycle2";
    }

    inline DynamicsKind dynamics_from_string(const std::string &s)
    {
        if (s == "linear2d")
            return DynamicsKind::Linear2D;
        if (s == "unicycle2")
            return DynamicsKind::Unicycle2;
        throw std::runtime_error("scenario parse: unknown dynamics '" + s + "'");
    }

    inline std::string to_string(AllocationMode m)
    {
        return m == AllocationMode::Equal ? "equal" : "adaptive";
    }

    inline AllocationMode allocation_from_string(const std::string &s)
    {
        if (s == "equal")
            return AllocationMode::Equal;
        if (s == "adaptive")
            return AllocationMode::Adaptive;
        throw std::runtime_error("scenario parse: unknown allocation '" + s + "'");
    }

    inline CheckMethod method_from_string(const std::string &s)
    {
        if (s == "m1")
            return CheckMethod::M1;
        if (s == "m21")
            return CheckMethod::M21;
        if (s == "m22")
            return CheckMethod::M22;
        throw std::runtime_error("scenario parse: unknown checker method '" + s + "'");
    }

    /// Axis-aligned workspace with static convex obstacles.
    struct Environment
    {
        Vec2 bounds_lo = Vec2::Zero();
        Vec2 bounds_hi = Vec2::Ones();
        std::vector<Polytope> obstacles;
    };

    /// One robot: dynamics kind, rigid body, start belief, goal disk, noise
    /// magnitudes, and sampling bounds for the low-level planner.
    struct RobotSpec
    {
        std::string name;
        DynamicsKind dynamics = DynamicsKind::Linear2D;
        Body body = Body::square(0.25);
        VectorXd start_mean;
        MatrixXd start_cov;
        Vec2 goal_center = Vec2::Zero();
        double goal_radius = 0.5;
        double noise_q = 0.1;
        double noise_r = 0.1;
        double control_bound = 1.0;  // per-axis |u| limit
        double velocity_bound = 1.0; // per-axis bound on non-position states

        int state_dim() const { return dynamics == DynamicsKind::Linear2D ? 2 : 4; }
        int control_dim() const { return 2; }
    };

    /// Full declarative problem input.
    struct Scenario
    {
        Environment env;
        std::vector<RobotSpec> robots;
        double dt = 1.0;
        double p_safe = 0.9;
        CheckMethod checker_method = CheckMethod::M22;
        int polytope_sides = 8;
        int grid_divisions = 5;
        AllocationMode allocation = AllocationMode::Equal;

        CheckerConfig checker_config() const
        {
            return CheckerConfig(checker_method, polytope_sides, grid_divisions, p_safe);
        }
    };

    inline LinearSystem make_system(const RobotSpec &robot, double dt)
    {
        if (robot.dynamics == DynamicsKind::Linear2D)
            return LinearSystem::linear2d(robot.noise_q, robot.noise_r, dt);
        return UnicycleModel::make(dt, robot.noise_q, robot.noise_r).sys;
    }

    inline void validate_scenario(const Scenario &s)
    {
        const auto fail = [](const std::string &rule) {
            throw std::runtime_error("scenario invalid: " + rule);
        };
        if (s.robots.empty())
            fail("at least one robot required");
        if (!(s.p_safe > 0.5 && s.p_safe < 1.0))
            fail("p_safe must lie in (0.5, 1)");
        if (s.dt <= 0.0)
            fail("dt must be positive");
        if (!(s.env.bounds_lo.x() < s.env.bounds_hi.x() &&
              s.env.bounds_lo.y() < s.env.bounds_hi.y()))
            fail("workspace bounds degenerate");
        for (const auto &obs : s.env.obstacles)
            for (const auto &v : obs.vertices())
                if (v.x() < s.env.bounds_lo.x() - 1e-9 || v.x() > s.env.bounds_hi.x() + 1e-9 ||
                    v.y() < s.env.bounds_lo.y() - 1e-9 || v.y() > s.env.bounds_hi.y() + 1e-9)
                    fail("obstacle outside workspace bounds");
        for (const auto &r : s.robots)
        {
            if (r.start_mean.size() != r.state_dim())
                fail("robot '" + r.name + "': start_mean dimension mismatch");
            if (r.start_cov.rows() != r.state_dim() || r.start_cov.cols() != r.state_dim())
                fail("robot '" + r.name + "': start_cov dimension mismatch");
            const Vec2 p(r.start_mean(0), r.start_mean(1));
            if (p.x() < s.env.bounds_lo.x() || p.x() > s.env.bounds_hi.x() ||
                p.y() < s.env.bounds_lo.y() || p.y() > s.env.bounds_hi.y())
                fail("robot '" + r.name + "': start outside workspace bounds");
            if (r.goal_radius <= 0.0)
                fail("robot '" + r.name + "': goal radius must be positive");
            if (r.goal_center.x() - r.goal_radius < s.env.bounds_lo.x() ||
                r.goal_center.x() + r.goal_radius > s.env.bounds_hi.x() ||
                r.goal_center.y() - r.goal_radius < s.env.bounds_lo.y() ||
                r.goal_center.y() + r.goal_radius > s.env.bounds_hi.y())
                fail("robot '" + r.name + "': goal disk outside workspace bounds");
            if (r.control_bound <= 0.0 || r.velocity_bound <= 0.0)
                fail("robot '" + r.name + "': bounds must be positive");
        }
    }

    namespace detail
    {
        inline Json vecToJson(const VectorXd &v)
        {
            Json a = Json::array();
            for (int i = 0; i < v.size(); ++i)
                a.push_back(v(i));
            return a;
        }

        inline Json matToJson(const MatrixXd &m)
        {
            Json rows = Json::array();
            for (int i = 0; i < m.rows(); ++i)
            {
                Json row = Json::array();
                for (int j = 0; j < m.cols(); ++j)
                    row.push_back(m(i, j));
                rows.push_back(row);
            }
            return rows;
        }

        inline VectorXd vecFromJson(const Json &a)
        {
            VectorXd v(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                v(static_cast<int>(i)) = a.at(i).get<double>();
            return v;
        }

        inline MatrixXd matFromJson(const Json &rows)
        {
            if (rows.empty())
                throw std::runtime_error("scenario parse: empty matrix");
            MatrixXd m(rows.size(), rows.at(0).size());
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                const Json &row = rows.at(i);
                if (static_cast<Eigen::Index>(row.size()) != m.cols())
                    throw std::runtime_error("scenario parse: ragged matrix");
                for (std::size_t j = 0; j < row.size(); ++j)
                    m(static_cast<int>(i), static_cast<int>(j)) = row.at(j).get<double>();
            }
            return m;
        }

        inline const Json &field(const Json &j, const char *key, const char *where)
        {
            const auto it = j.find(key);
            if (it == j.end())
                throw std::runtime_error(std::string("scenario parse: missing field '") + key +
                                         "' in " + where);
            return *it;
        }
    } // namespace detail

    inline Json polytope_to_json(const Polytope &p)
    {
        Json hs = Json::array();
        for (const auto &h : p.halfplanes())
            hs.push_back(Json{{"normal", Json::array({h.normal.x(), h.normal.y()})},
                              {"offset", h.offset}});
        return Json{{"halfplanes", hs}};
    }

    inline Polytope polytope_from_json(const Json &j)
    {
        std::vector<HalfPlane> hs;
        for (const auto &hj : detail::field(j, "halfplanes", "polytope"))
        {
            const auto &n = detail::field(hj, "normal", "halfplane");
            hs.push_back({Vec2(n.at(0).get<double>(), n.at(1).get<double>()),
                          detail::field(hj, "offset", "halfplane").get<double>()});
        }
        return Polytope(std::move(hs));
    }

    inline Json scenario_to_json(const Scenario &s)
    {
        Json j;
        j["schema_version"] = 1;
        j["dt"] = s.dt;
        j["p_safe"] = s.p_safe;
        j["checker"] = Json{{"method", to_string(s.checker_method)},
                            {"sides", s.polytope_sides},
                            {"grid", s.grid_divisions}};
        j["allocation"] = to_string(s.allocation);
        Json env;
        env["bounds"] = Json{{"lo", Json::array({s.env.bounds_lo.x(), s.env.bounds_lo.y()})},
                             {"hi", Json::array({s.env.bounds_hi.x(), s.env.bounds_hi.y()})}};
        Json obstacles = Json::array();
        for (const auto &o : s.env.obstacles)
            obstacles.push_back(polytope_to_json(o));
        env["obstacles"] = obstacles;
        j["environment"] = env;
        Json robots = Json::array();
        for (const auto &r : s.robots)
        {
            Json rj;
            rj["name"] = r.name;
            rj["dynamics"] = to_string(r.dynamics);
            Json verts = Json::array();
            for (const auto &v : r.body.vertices())
                verts.push_back(Json::array({v.x(), v.y()}));
            rj["body"] = verts;
            rj["start_mean"] = detail::vecToJson(r.start_mean);
            rj["start_cov"] = detail::matToJson(r.start_cov);
            rj["goal"] = Json{{"center", Json::array({r.goal_center.x(), r.goal_center.y()})},
                              {"radius", r.goal_radius}};
            rj["noise_q"] = r.noise_q;
            rj["noise_r"] = r.noise_r;
            rj["control_bound"] = r.control_bound;
            rj["velocity_bound"] = r.velocity_bound;
            robots.push_back(rj);
        }
        j["robots"] = robots;
        return j;
    }

    inline Scenario scenario_from_json(const Json &j)
    {
        using detail::field;
        const int version = field(j, "schema_version", "scenario").get<int>();
        if (version != 1)
            throw std::runtime_error("scenario parse: unsupported schema_version " +
                                     std::to_string(version));
        Scenario s;
        s.dt = field(j, "dt", "scenario").get<double>();
        s.p_safe = field(j, "p_safe", "scenario").get<double>();
        const Json &cj = field(j, "checker", "scenario");
        s.checker_method = method_from_string(field(cj, "method", "checker").get<std::string>());
        s.polytope_sides = field(cj, "sides", "checker").get<int>();
        s.grid_divisions = field(cj, "grid", "checker").get<int>();
        s.allocation = allocation_from_string(field(j, "allocation", "scenario").get<std::string>());
        const Json &ej = field(j, "environment", "scenario");
        const Json &bj = field(ej, "bounds", "environment");
        const Json &lo = field(bj, "lo", "bounds");
        const Json &hi = field(bj, "hi", "bounds");
        s.env.bounds_lo = Vec2(lo.at(0).get<double>(), lo.at(1).get<double>());
        s.env.bounds_hi = Vec2(hi.at(0).get<double>(), hi.at(1).get<double>());
        for (const auto &oj : field(ej, "obstacles", "environment"))
            s.env.obstacles.push_back(polytope_from_json(oj));
        for (const auto &rj : field(j, "robots", "scenario"))
        {
            RobotSpec r;
            r.name = field(rj, "name", "robot").get<std::string>();
            r.dynamics = dynamics_from_string(field(rj, "dynamics", "robot").get<std::string>());
            std::vector<Vec2> verts;
            for (const auto &vj : field(rj, "body", "robot"))
                verts.emplace_back(vj.at(0).get<double>(), vj.at(1).get<double>());
            r.body = Body(std::move(verts));
            r.start_mean = detail::vecFromJson(field(rj, "start_mean", "robot"));
            r.start_cov = detail::matFromJson(field(rj, "start_cov", "robot"));
            const Json &gj = field(rj, "goal", "robot");
            const Json &gc = field(gj, "center", "goal");
            r.goal_center = Vec2(gc.at(0).get<double>(), gc.at(1).get<double>());
            r.goal_radius = field(gj, "radius", "goal").get<double>();
            r.noise_q = field(rj, "noise_q", "robot").get<double>();
            r.noise_r = field(rj, "noise_r", "robot").get<double>();
            r.control_bound = field(rj, "control_bound", "robot").get<double>();
            r.velocity_bound = field(rj, "velocity_bound", "robot").get<double>();
            s.robots.push_back(std::move(r));
        }
        validate_scenario(s);
        return s;
    }

    inline Scenario load_scenario(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("load_scenario: cannot open '" + path + "'");
        Json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw std::runtime_error("load_scenario: parse error in '" + path + "': " + e.what());
        }
        return scenario_from_json(j);
    }

    inline void save_scenario(const std::string &path, const Scenario &s)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("save_scenario: cannot open '" + path + "'");
        out << scenario_to_json(s).dump(2) << "\n";
    }

    enum class PlanStatus
    {
        Success,
        Timeout,
        Infeasible
    };

    inline std::string to_string(PlanStatus s)
    {
        switch (s)
        {
        case PlanStatus::Success:
            return "success";
        case PlanStatus::Timeout:
            return "timeout";
        default:
            return "infeasible";
        }
    }

    inline PlanStatus status_from_string(const std::string &s)
    {
        if (s == "success")
            return PlanStatus::Success;
        if (s == "timeout")
            return PlanStatus::Timeout;
        if (s == "infeasible")
            return PlanStatus::Infeasible;
        throw std::runtime_error("result parse: unknown status '" + s + "'");
    }

    struct PlanMetrics
    {
        double wall_time_s = 0.0;
        long ct_nodes = 0;
        long conflicts = 0;
        double mc_collision_fraction = -1.0; // negative when not measured
    };

    struct RobotPlanRecord
    {
        std::string name;
        MotionPlan plan;
    };

    struct PlanResult
    {
        PlanStatus status = PlanStatus::Infeasible;
        std::vector<RobotPlanRecord> robots;
        PlanMetrics metrics;
    };

    inline Json result_to_json(const PlanResult &r)
    {
        Json j;
        j["schema_version"] = 1;
        j["status"] = to_string(r.status);
        Json metrics;
        metrics["wall_time_s"] = r.metrics.wall_time_s;
        metrics["ct_nodes"] = r.metrics.ct_nodes;
        metrics["conflicts"] = r.metrics.conflicts;
        if (r.metrics.mc_collision_fraction >= 0.0)
            metrics["mc_collision_fraction"] = r.metrics.mc_collision_fraction;
        j["metrics"] = metrics;
        Json robots = Json::array();
        for (const auto &rp : r.robots)
        {
            Json rj;
            rj["name"] = rp.name;
            Json controls = Json::array();
            for (const auto &u : rp.plan.controls)
                controls.push_back(detail::vecToJson(u));
            rj["controls"] = controls;
            Json states = Json::array();
            for (const auto &x : rp.plan.nominal_states)
                states.push_back(detail::vecToJson(x));
            rj["nominal_states"] = states;
            Json gammas = Json::array();
            for (const auto &b : rp.plan.beliefs)
                gammas.push_back(detail::matToJson(b.gamma));
            rj["gamma"] = gammas;
            robots.push_back(rj);
        }
        j["robots"] = robots;
        return j;
    }

    inline void save_result(const std::string &path, const PlanResult &r)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("save_result: cannot open '" + path + "'");
        out << result_to_json(r).dump(2) << "\n";
    }

    /// Loads a persisted result. Sigma/Lambda splits are not persisted, so the
    /// reloaded beliefs carry Gamma only (sigma = gamma, lambda = 0); callers
    /// that need the split re-propagate from the scenario.
    inline PlanResult load_result(const std::string &path)
    {
        using detail::field;
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("load_result: cannot open '" + path + "'");
        Json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw std::runtime_error("load_result: parse error in '" + path + "': " + e.what());
        }
        if (field(j, "schema_version", "result").get<int>() != 1)
            throw std::runtime_error("load_result: unsupported schema_version");
        PlanResult r;
        r.status = status_from_string(field(j, "status", "result").get<std::string>());
        const Json &metrics = field(j, "metrics", "result");
        r.metrics.wall_time_s = field(metrics, "wall_time_s", "metrics").get<double>();
        r.metrics.ct_nodes = field(metrics, "ct_nodes", "metrics").get<long>();
        r.metrics.conflicts = field(metrics, "conflicts", "metrics").get<long>();
        if (metrics.contains("mc_collision_fraction"))
            r.metrics.mc_collision_fraction = metrics["mc_collision_fraction"].get<double>();
        for (const auto &rj : field(j, "robots", "result"))
        {
            RobotPlanRecord rp;
            rp.name = field(rj, "name", "robot record").get<std::string>();
            for (const auto &uj : field(rj, "controls", "robot record"))
                rp.plan.controls.push_back(detail::vecFromJson(uj));
            for (const auto &xj : field(rj, "nominal_states", "robot record"))
                rp.plan.nominal_states.push_back(detail::vecFromJson(xj));
            for (const auto &gj : field(rj, "gamma", "robot record"))
            {
                ExpectedBeliefState b;
                b.gamma = detail::matFromJson(gj);
                b.sigma = b.gamma;
                b.lambda = MatrixXd::Zero(b.gamma.rows(), b.gamma.cols());
                rp.plan.beliefs.push_back(std::move(b));
            }
            r.robots.push_back(std::move(rp));
        }
        return r;
    }

    namespace detail
    {
        inline std::string fmt(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            return buf;
        }
    } // namespace detail

    /// Deterministic SVG rendering: obstacles, goal disks, nominal
    /// trajectories, and the p_safe covariance ellipse at every 5th step.
    inline std::string plot_plan_svg(const PlanResult &result, const Scenario &scenario)
    {
        static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                        "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
        const double scale = 60.0, margin = 12.0;
        const Vec2 lo = scenario.env.bounds_lo, hi = scenario.env.bounds_hi;
        const auto X = [&](double x) { return detail::fmt((x - lo.x()) * scale + margin); };
        const auto Y = [&](double y) { return detail::fmt((hi.y() - y) * scale + margin); };
        const double width = (hi.x() - lo.x()) * scale + 2 * margin;
        const double height = (hi.y() - lo.y()) * scale + 2 * margin;

        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(width)
            << "\" height=\"" << detail::fmt(height) << "\">\n";
        svg << "<rect x=\"" << X(lo.x()) << "\" y=\"" << Y(hi.y()) << "\" width=\""
            << detail::fmt((hi.x() - lo.x()) * scale) << "\" height=\""
            << detail::fmt((hi.y() - lo.y()) * scale)
            << "\" fill=\"white\" stroke=\"black\"/>\n";
        for (const auto &obs : scenario.env.obstacles)
        {
            svg << "<polygon points=\"";
            bool first = true;
            for (const auto &v : obs.vertices())
            {
                if (!first)
                    svg << " ";
                first = false;
                svg << X(v.x()) << "," << Y(v.y());
            }
            svg << "\" fill=\"#b0b0b0\" stroke=\"#606060\"/>\n";
        }
        const double t_chi = chi2_quantile(scenario.p_safe, 2);
        for (std::size_t i = 0; i < result.robots.size(); ++i)
        {
            const char *color = palette[i % 10];
            if (i < scenario.robots.size())
            {
                const auto &r = scenario.robots[i];
                svg << "<circle cx=\"" << X(r.goal_center.x()) << "\" cy=\""
                    << Y(r.goal_center.y()) << "\" r=\"" << detail::fmt(r.goal_radius * scale)
                    << "\" fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n";
            }
            const auto &plan = result.robots[i].plan;
            if (plan.nominal_states.empty())
                continue;
            svg << "<polyline points=\"";
            for (std::size_t k = 0; k < plan.nominal_states.size(); ++k)
            {
                if (k > 0)
                    svg << " ";
                svg << X(plan.nominal_states[k](0)) << "," << Y(plan.nominal_states[k](1));
            }
            svg << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
            for (std::size_t k = 0; k < plan.beliefs.size(); k += 5)
            {
                Mat2 g;
                g << plan.beliefs[k].gamma(0, 0), plan.beliefs[k].gamma(0, 1),
                    plan.beliefs[k].gamma(1, 0), plan.beliefs[k].gamma(1, 1);
                Eigen::SelfAdjointEigenSolver<Mat2> es(g);
                const double l0 = std::max(0.0, es.eigenvalues()(0));
                const double l1 = std::max(0.0, es.eigenvalues()(1));
                const Vec2 axis = es.eigenvectors().col(1);
                const double angle_deg = -std::atan2(axis.y(), axis.x()) * 180.0 / M_PI;
                const std::string cx = X(plan.nominal_states[k](0));
                const std::string cy = Y(plan.nominal_states[k](1));
                svg << "<ellipse cx=\"" << cx << "\" cy=\"" << cy << "\" rx=\""
                    << detail::fmt(std::sqrt(t_chi * l1) * scale) << "\" ry=\""
                    << detail::fmt(std::sqrt(t_chi * l0) * scale) << "\" transform=\"rotate("
                    << detail::fmt(angle_deg) << " " << cx << " " << cy
                    << ")\" fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.5\"/>\n";
            }
        }
        svg << "</svg>\n";
        return svg.str();
    }

    inline void plot_plan(const PlanResult &result, const Scenario &scenario,
                          const std::string &path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("plot_plan: cannot open '" + path + "'");
        out << plot_plan_svg(result, scenario);
    }

    namespace detail
    {
        /// Platform-independent uniform double in [lo, hi).
        inline double uniformIn(std::mt19937_64 &rng, double lo, double hi)
        {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return lo + (hi - lo) * u;
        }
    } // namespace detail

    /// Benchmark workspace: 8x8, obstacle free, robots on a circle swapping
    /// with their antipodes.
    inline Scenario make_env8(int n_robots, DynamicsKind kind = DynamicsKind::Linear2D,
                              double p_safe = 0.9)
    {
        if (n_robots < 1 || n_robots > 10)
            throw std::invalid_argument("make_env8: supports 1 to 10 robots");
        Scenario s;
        s.env.bounds_lo = Vec2(0, 0);
        s.env.bounds_hi = Vec2(8, 8);
        s.p_safe = p_safe;
        s.dt = 1.0;
        const Vec2 center(4, 4);
        const double ring = 3.0;
        for (int i = 0; i < n_robots; ++i)
        {
            RobotSpec r;
            r.name = "robot" + std::to_string(i);
            r.dynamics = kind;
            r.body = Body::square(0.25);
            const double ang = 2.0 * M_PI * i / n_robots;
            const Vec2 start = center + ring * Vec2(std::cos(ang), std::sin(ang));
            const Vec2 goal = center - ring * Vec2(std::cos(ang), std::sin(ang));
            if (kind == DynamicsKind::Linear2D)
            {
                r.start_mean = VectorXd(2);
                r.start_mean << start.x(), start.y();
                r.start_cov = 0.01 * MatrixXd::Identity(2, 2);
            }
            else
            {
                r.start_mean = VectorXd(4);
                const Vec2 dir = (goal - start).normalized();
                r.start_mean << start.x(), start.y(), 0.5 * dir.x(), 0.5 * dir.y();
                r.start_cov = 0.01 * MatrixXd::Identity(4, 4);
            }
            r.goal_center = goal;
            r.goal_radius = 0.6;
            s.robots.push_back(std::move(r));
        }
        validate_scenario(s);
        return s;
    }

    /// Benchmark workspace: 8x8 split into four horizontal corridors by
    /// full-width walls. Each corridor hosts one robot pair swapping ends
    /// head on, so a pass requires a tight lateral dodge inside the corridor.
    inline Scenario make_env8_corridors(int n_robots, DynamicsKind kind = DynamicsKind::Linear2D,
                                        double p_safe = 0.9)
    {
        if (n_robots < 1 || n_robots > 8)
            throw std::invalid_argument("make_env8_corridors: supports 1 to 8 robots");
        Scenario s;
        s.env.bounds_lo = Vec2(0, 0);
        s.env.bounds_hi = Vec2(8, 8);
        s.p_safe = p_safe;
        s.dt = 1.0;
        s.env.obstacles.push_back(Polytope::box(Vec2(0.0, 0.0), Vec2(8.0, 0.05)));
        s.env.obstacles.push_back(Polytope::box(Vec2(0.0, 1.85), Vec2(8.0, 1.95)));
        s.env.obstacles.push_back(Polytope::box(Vec2(0.0, 3.75), Vec2(8.0, 3.85)));
        s.env.obstacles.push_back(Polytope::box(Vec2(0.0, 5.85), Vec2(8.0, 5.95)));
        s.env.obstacles.push_back(Polytope::box(Vec2(0.0, 7.95), Vec2(8.0, 8.0)));
        const double corridor_center[4] = {0.95, 2.85, 4.85, 6.95};
        for (int i = 0; i < n_robots; ++i)
        {
            RobotSpec r;
            r.name = "robot" + std::to_string(i);
            r.dynamics = kind;
            r.body = Body::square(0.25);
            r.control_bound = 0.5;
            r.velocity_bound = 0.5;
            const int pair = i / 2;
            const double yc = corridor_center[pair];
            const bool second = (i % 2) != 0;
            // the two narrow corridors switch to same-direction traffic once
            // the wide corridors fill up, keeping head-on passes where the
            // corridor width can accommodate them
            const bool comoving = (pair < 2) && (n_robots > 4);
            Vec2 start, goal;
            if (comoving)
            {
                start = Vec2(second ? 3.4 : 1.0, yc);
                goal = Vec2(second ? 7.0 : 4.6, yc);
            }
            else
            {
                start = Vec2(second ? 7.0 : 1.0, yc);
                goal = Vec2(second ? 1.0 : 7.0, yc);
            }
            if (kind == DynamicsKind::Linear2D)
            {
                r.start_mean = VectorXd(2);
                r.start_mean << start.x(), start.y();
                r.start_cov = 0.01 * MatrixXd::Identity(2, 2);
            }
            else
            {
                r.start_mean = VectorXd(4);
                const Vec2 dir = (goal - start).normalized();
                r.start_mean << start.x(), start.y(), 0.25 * dir.x(), 0.25 * dir.y();
                r.start_cov = 0.01 * MatrixXd::Identity(4, 4);
            }
            r.goal_center = goal;
            r.goal_radius = 0.6;
            s.robots.push_back(std::move(r));
        }
        validate_scenario(s);
        return s;
    }

    /// Benchmark workspace: 32x32 with 50 random square obstacles that avoid
    /// every start contour and goal disk. Reproducible from the seed.
    inline Scenario make_env32obs(int n_robots, std::uint64_t seed,
                                  DynamicsKind kind = DynamicsKind::Linear2D,
                                  double p_safe = 0.9)
    {
        if (n_robots < 1 || n_robots > 20)
            throw std::invalid_argument("make_env32obs: supports 1 to 20 robots");
        Scenario s;
        s.env.bounds_lo = Vec2(0, 0);
        s.env.bounds_hi = Vec2(32, 32);
        s.p_safe = p_safe;
        s.dt = 1.0;
        const Vec2 center(16, 16);
        const double ring = 13.0;
        for (int i = 0; i < n_robots; ++i)
        {
            RobotSpec r;
            r.name = "robot" + std::to_string(i);
            r.dynamics = kind;
            r.body = Body::square(0.25);
            const double ang = 2.0 * M_PI * i / n_robots;
            const Vec2 start = center + ring * Vec2(std::cos(ang), std::sin(ang));
            const Vec2 goal = center - ring * Vec2(std::cos(ang), std::sin(ang));
            if (kind == DynamicsKind::Linear2D)
            {
                r.start_mean = VectorXd(2);
                r.start_mean << start.x(), start.y();
                r.start_cov = 0.01 * MatrixXd::Identity(2, 2);
            }
            else
            {
                r.start_mean = VectorXd(4);
                const Vec2 dir = (goal - start).normalized();
                r.start_mean << start.x(), start.y(), 0.5 * dir.x(), 0.5 * dir.y();
                r.start_cov = 0.01 * MatrixXd::Identity(4, 4);
            }
            r.goal_center = goal;
            r.goal_radius = 0.6;
            s.robots.push_back(std::move(r));
        }

        std::mt19937_64 rng(seed);
        const double clearance = 1.0;
        int placed = 0;
        int attempts = 0;
        while (placed < 50 && attempts < 100000)
        {
            ++attempts;
            const double side = detail::uniformIn(rng, 1.0, 2.5);
            const double cx = detail::uniformIn(rng, side / 2, 32.0 - side / 2);
            const double cy = detail::uniformIn(rng, side / 2, 32.0 - side / 2);
            const Vec2 olo(cx - side / 2, cy - side / 2), ohi(cx + side / 2, cy + side / 2);
            bool ok = true;
            for (const auto &r : s.robots)
            {
                const Vec2 start(r.start_mean(0), r.start_mean(1));
                const std::vector<Vec2> corners = {olo, Vec2(ohi.x(), olo.y()), ohi,
                                                   Vec2(olo.x(), ohi.y())};
                if (point_polygon_distance(start, corners) < clearance ||
                    point_polygon_distance(r.goal_center, corners) < r.goal_radius + clearance)
                {
                    ok = false;
                    break;
                }
            }
            if (ok)
            {
                s.env.obstacles.push_back(Polytope::box(olo, ohi));
                ++placed;
            }
        }
        if (placed < 50)
            throw std::runtime_error("make_env32obs: could not place 50 obstacles");
        validate_scenario(s);
        return s;
    }
} // namespace ccmp

#endif
