#ifndef CCMP_LOWLEVEL_HPP_
#define CCMP_LOWLEVEL_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "ccmp/chance.hpp"
#include "ccmp/dynamics.hpp"
#include "ccmp/gaussian.hpp"
#include "ccmp/geometry.hpp"
#include "ccmp/scenario.hpp"

namespace ccmp
{
    /// Time-indexed moving obstacle: another robot's belief trajectory over a
    /// conflict interval, with the risk share for this pair.
    struct BeliefConstraint
    {
        int constraining_robot = -1;
        int t_start = 0;
        int t_end = 0;
        std::vector<WorkspaceMarginal> beliefs; // one per step in [t_start, t_end]
        Body body = Body::square(0.25);
        double p_c = 0.05;

        BeliefConstraint() = default;
        BeliefConstraint(int robot, int ts, int te, std::vector<WorkspaceMarginal> bels, Body b,
                         double pc)
            : constraining_robot(robot), t_start(ts), t_end(te), beliefs(std::move(bels)),
              body(std::move(b)), p_c(pc)
        {
            if (t_end < t_start)
                throw std::invalid_argument("BeliefConstraint: empty interval");
            if (static_cast<int>(beliefs.size()) != t_end - t_start + 1)
                throw std::invalid_argument("BeliefConstraint: beliefs do not cover the interval");
        }

        const WorkspaceMarginal *at(int timestep) const
        {
            if (timestep < t_start || timestep > t_end)
                return nullptr;
            return &beliefs[timestep - t_start];
        }
    };

    /// One rigid body inside a (possibly composed) planning agent, with its
    /// slice of the agent state and its own goal disk.
    struct AgentComponent
    {
        Body body = Body::square(0.25);
        std::vector<int> position_indices = {0, 1};
        GoalRegion goal;
    };

    /// A planning problem for the low-level search: one robot, or several
    /// robots composed block-diagonally into a meta system.
    struct PlanningAgent
    {
        LinearSystem sys;
        GaussianBelief start;
        std::vector<AgentComponent> components;
    };

    struct PlannerBudget
    {
        long max_iterations = 100000;
        double max_time_s = 10.0;
        std::uint64_t rng_seed = 1;
    };

    struct PlannerConfig
    {
        double goal_bias = 0.05;
        int min_edge_steps = 1;
        int max_edge_steps = 10;
        double delta_select = 0.2;
        double delta_prune = 0.1;
        bool sst_pruning = true;
        VectorXd state_lo, state_hi;
        VectorXd control_lo, control_hi;
    };

    /// Sampling bounds for one robot: positions over the workspace, remaining
    /// state dimensions and controls within the robot's symmetric bounds.
    inline PlannerConfig make_planner_config(const Environment &env, const RobotSpec &robot)
    {
        PlannerConfig cfg;
        const int n = robot.state_dim();
        cfg.state_lo = VectorXd::Constant(n, -robot.velocity_bound);
        cfg.state_hi = VectorXd::Constant(n, robot.velocity_bound);
        cfg.state_lo(0) = env.bounds_lo.x();
        cfg.state_lo(1) = env.bounds_lo.y();
        cfg.state_hi(0) = env.bounds_hi.x();
        cfg.state_hi(1) = env.bounds_hi.y();
        cfg.control_lo = VectorXd::Constant(robot.control_dim(), -robot.control_bound);
        cfg.control_hi = VectorXd::Constant(robot.control_dim(), robot.control_bound);
        return cfg;
    }

    /// Risk context shared by every validity check of one plan() call.
    struct CheckerContext
    {
        CheckerConfig checker;
        double p_c_per_obstacle = 0.0;
        // internal component pairs (a, b, risk share) of a composed agent
        std::vector<std::tuple<int, int, double>> internal_pairs;

        ObstacleCheckMode obstacle_mode() const
        {
            return checker.method == CheckMethod::M1 ? ObstacleCheckMode::ContourBound
                                                     : ObstacleCheckMode::LinearConstraint;
        }
    };

    namespace detail
    {
        /// Obstacle test with the p_c dependent constants precomputed.
        class ObstacleKernel
        {
        public:
            ObstacleKernel(const Polytope &obstacle, const Body &body, double p_c_obs,
                           ObstacleCheckMode mode)
                : mode_(mode)
            {
                if (mode_ == ObstacleCheckMode::LinearConstraint)
                {
                    if (!(p_c_obs > 0.0 && p_c_obs < 0.5))
                        throw std::domain_error("ObstacleKernel: p_c must lie in (0, 0.5)");
                    erf_term_ = M_SQRT2 * inverse_erf(1.0 - 2.0 * p_c_obs);
                    std::vector<HalfPlane> inflated;
                    inflated.reserve(obstacle.halfplanes().size());
                    for (const auto &h : obstacle.halfplanes())
                        inflated.push_back({h.normal, h.offset + body.radius_bound()});
                    inflated_ = Polytope(std::move(inflated), false);
                }
                else
                {
                    t_chi_ = chi2_quantile(1.0 - p_c_obs, 2);
                    body_radius_ = body.radius_bound();
                    vertices_ = obstacle.vertices();
                }
            }

            bool valid(const WorkspaceMarginal &bel) const
            {
                if (mode_ == ObstacleCheckMode::LinearConstraint)
                {
                    for (const auto &h : inflated_.halfplanes())
                    {
                        const double spread = std::sqrt(h.normal.dot(bel.cov * h.normal));
                        if (h.normal.dot(bel.mean) >= h.offset + erf_term_ * spread)
                            return true;
                    }
                    return false;
                }
                const double bound =
                    std::sqrt(t_chi_ * lambdaMax2x2(bel.cov)) + body_radius_;
                return point_polygon_distance(bel.mean, vertices_) > bound;
            }

        private:
            ObstacleCheckMode mode_;
            Polytope inflated_;
            double erf_term_ = 0.0;
            double t_chi_ = 0.0;
            double body_radius_ = 0.0;
            std::vector<Vec2> vertices_;
        };
    } // namespace detail

    /// All per-step validity machinery of one planning problem, with the
    /// constants hoisted out of the per-node path.
    class StateValidator
    {
    public:
        StateValidator(const PlanningAgent &agent, const Environment &env,
                       const std::vector<BeliefConstraint> &constraints, const CheckerContext &ctx)
            : agent_(&agent), constraints_(&constraints)
        {
            const std::size_t n_comp = agent.components.size();
            for (std::size_t c = 0; c < n_comp; ++c)
            {
                for (const auto &obs : env.obstacles)
                    obstacle_kernels_.emplace_back(
                        static_cast<int>(c),
                        detail::ObstacleKernel(obs, agent.components[c].body,
                                               ctx.p_c_per_obstacle, ctx.obstacle_mode()));
                for (const auto &bc : constraints)
                    constraint_checkers_.emplace_back(
                        PairChecker(ctx.checker, agent.components[c].body, bc.body, bc.p_c));
            }
            for (const auto &[a, b, share] : ctx.internal_pairs)
            {
                internal_.emplace_back(a, b,
                                       PairChecker(ctx.checker, agent.components[a].body,
                                                   agent.components[b].body, share));
            }
        }

        /// Conjunction of static-obstacle checks, interval-gated belief
        /// constraints, and internal pairwise checks at one timestep.
        bool valid(const GaussianBelief &bel, int timestep) const
        {
            const std::size_t n_comp = agent_->components.size();
            std::vector<WorkspaceMarginal> marginals;
            marginals.reserve(n_comp);
            for (const auto &comp : agent_->components)
                marginals.push_back(marginal_workspace(bel, comp.position_indices));

            for (const auto &[c, kernel] : obstacle_kernels_)
                if (!kernel.valid(marginals[c]))
                    return false;

            const std::size_t n_cstr = constraints_->size();
            for (std::size_t c = 0; c < n_comp; ++c)
                for (std::size_t k = 0; k < n_cstr; ++k)
                {
                    const WorkspaceMarginal *other = (*constraints_)[k].at(timestep);
                    if (other == nullptr)
                        continue;
                    if (constraint_checkers_[c * n_cstr + k].check(marginals[c], *other) !=
                        Verdict::Valid)
                        return false;
                }

            for (const auto &[a, b, checker] : internal_)
                if (checker.check(marginals[a], marginals[b]) != Verdict::Valid)
                    return false;
            return true;
        }

        bool at_goal(const GaussianBelief &bel, double p_safe) const
        {
            if (t_chi_goal_ < 0.0)
                t_chi_goal_ = chi2_quantile(p_safe, 2);
            for (const auto &comp : agent_->components)
            {
                const WorkspaceMarginal m = marginal_workspace(bel, comp.position_indices);
                const double contour = std::sqrt(t_chi_goal_ * detail::lambdaMax2x2(m.cov));
                if ((m.mean - comp.goal.center).norm() + contour > comp.goal.radius)
                    return false;
            }
            return true;
        }

    private:
        const PlanningAgent *agent_;
        const std::vector<BeliefConstraint> *constraints_;
        std::vector<std::pair<int, detail::ObstacleKernel>> obstacle_kernels_;
        std::vector<PairChecker> constraint_checkers_; // component-major
        std::vector<std::tuple<int, int, PairChecker>> internal_;
        mutable double t_chi_goal_ = -1.0;
    };

    struct TreeNode
    {
        VectorXd nominal;
        ExpectedBeliefState expected;
        double gamma_trace = 0.0;
        int parent = -1;
        VectorXd incoming_control;
        int edge_steps = 0;
        int timestep = 0;
        double cost = 0.0;
        bool active = true;
    };

    enum class LowLevelStatus
    {
        Success,
        BudgetExhausted,
        StartInvalid
    };

    struct LowLevelResult
    {
        LowLevelStatus status = LowLevelStatus::BudgetExhausted;
        MotionPlan plan;
        long iterations = 0;
        std::size_t tree_size = 0;
    };

    namespace detail
    {
        struct Witness
        {
            VectorXd state;
            int timestep = 0;
            int representative = -1;
        };
    } // namespace detail

    /// Belief-space SST: samples zero-covariance targets, extends the nearest
    /// tree node (2-Wasserstein) with a random piecewise-constant control, and
    /// keeps a sparse tree through witness-based pruning. Deterministic per
    /// seed.
    inline LowLevelResult plan(const PlanningAgent &agent, const Environment &env,
                               const std::vector<BeliefConstraint> &constraints,
                               const CheckerContext &ctx, const PlannerConfig &cfg,
                               const PlannerBudget &budget, double p_safe)
    {
        const auto t_begin = std::chrono::steady_clock::now();
        const StateValidator validator(agent, env, constraints, ctx);
        const int n = agent.sys.n();
        const int p = agent.sys.p();
        if (cfg.state_lo.size() != n || cfg.state_hi.size() != n || cfg.control_lo.size() != p ||
            cfg.control_hi.size() != p)
            throw std::invalid_argument("plan: config bounds do not match system dimensions");

        LowLevelResult result;
        if (!validator.valid(GaussianBelief(agent.start.mean, agent.start.cov), 0))
        {
            result.status = LowLevelStatus::StartInvalid;
            return result;
        }

        std::vector<TreeNode> nodes;
        std::vector<detail::Witness> witnesses;
        {
            TreeNode root;
            root.nominal = agent.start.mean;
            root.expected = ExpectedBeliefState::initial(agent.start.cov);
            root.gamma_trace = root.expected.gamma.trace();
            nodes.push_back(std::move(root));
            witnesses.push_back({agent.start.mean, 0, 0});
        }

        // with time-indexed constraints a later visit to the same state is not
        // dominated by an earlier one, so witnesses then carry the timestep
        const bool time_indexed = !constraints.empty();

        if (validator.at_goal(GaussianBelief(nodes[0].nominal, nodes[0].expected.gamma), p_safe))
        {
            result.status = LowLevelStatus::Success;
            result.plan.nominal_states.push_back(nodes[0].nominal);
            result.plan.beliefs.push_back(nodes[0].expected);
            result.tree_size = 1;
            return result;
        }

        std::mt19937_64 rng(budget.rng_seed);
        VectorXd goal_target = VectorXd::Zero(n);
        for (const auto &comp : agent.components)
        {
            goal_target(comp.position_indices[0]) = comp.goal.center.x();
            goal_target(comp.position_indices[1]) = comp.goal.center.y();
        }

        const double select2 = cfg.delta_select * cfg.delta_select;
        for (long it = 0; it < budget.max_iterations; ++it)
        {
            if ((it & 63) == 0)
            {
                const double elapsed =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
                        .count();
                if (elapsed > budget.max_time_s)
                    break;
            }
            result.iterations = it + 1;

            VectorXd target(n);
            if (detail::uniformIn(rng, 0.0, 1.0) < cfg.goal_bias)
                target = goal_target;
            else
                for (int d = 0; d < n; ++d)
                    target(d) = detail::uniformIn(rng, cfg.state_lo(d), cfg.state_hi(d));

            // nearest active node by 2-Wasserstein against the zero-covariance
            // target: distance^2 = |mean - target|^2 + trace(Gamma); within the
            // selection radius prefer the lowest-cost node
            int selected = -1;
            double best_dist2 = std::numeric_limits<double>::infinity();
            double best_cost = std::numeric_limits<double>::infinity();
            bool best_in_ball = false;
            for (std::size_t idx = 0; idx < nodes.size(); ++idx)
            {
                if (!nodes[idx].active)
                    continue;
                const double d2 =
                    (nodes[idx].nominal - target).squaredNorm() + nodes[idx].gamma_trace;
                const bool in_ball = d2 <= select2;
                if (in_ball)
                {
                    if (!best_in_ball || nodes[idx].cost < best_cost)
                    {
                        selected = static_cast<int>(idx);
                        best_cost = nodes[idx].cost;
                        best_in_ball = true;
                    }
                }
                else if (!best_in_ball && d2 < best_dist2)
                {
                    selected = static_cast<int>(idx);
                    best_dist2 = d2;
                }
            }
            if (selected < 0)
                continue;

            VectorXd u(p);
            for (int d = 0; d < p; ++d)
                u(d) = detail::uniformIn(rng, cfg.control_lo(d), cfg.control_hi(d));
            const int steps =
                cfg.min_edge_steps +
                static_cast<int>(detail::uniformIn(
                    rng, 0.0, static_cast<double>(cfg.max_edge_steps - cfg.min_edge_steps + 1)));

            VectorXd x = nodes[selected].nominal;
            ExpectedBeliefState ebs = nodes[selected].expected;
            bool edge_ok = true;
            int taken = 0;
            bool reached_goal = false;
            for (int sstep = 0; sstep < steps; ++sstep)
            {
                x = propagate_nominal(agent.sys, x, u);
                ebs = expected_belief_step(agent.sys, ebs);
                bool in_bounds = true;
                for (int d = 0; d < n; ++d)
                    if (x(d) < cfg.state_lo(d) || x(d) > cfg.state_hi(d))
                    {
                        in_bounds = false;
                        break;
                    }
                if (!in_bounds ||
                    !validator.valid(GaussianBelief(x, ebs.gamma),
                                     nodes[selected].timestep + sstep + 1))
                {
                    edge_ok = false;
                    break;
                }
                taken = sstep + 1;
                if (validator.at_goal(GaussianBelief(x, ebs.gamma), p_safe))
                {
                    // stop the edge at the first step inside the goal
                    reached_goal = true;
                    break;
                }
            }
            if (!edge_ok || taken == 0)
                continue;
            const int used_steps = taken;

            const double new_cost = nodes[selected].cost + used_steps * agent.sys.dt;

            const int new_timestep = nodes[selected].timestep + used_steps;
            int witness_idx = -1;
            if (cfg.sst_pruning)
            {
                double best_w = cfg.delta_prune;
                for (std::size_t widx = 0; widx < witnesses.size(); ++widx)
                {
                    if (time_indexed && witnesses[widx].timestep != new_timestep)
                        continue;
                    const double d = (witnesses[widx].state - x).norm();
                    if (d <= best_w)
                    {
                        best_w = d;
                        witness_idx = static_cast<int>(widx);
                    }
                }
                if (witness_idx >= 0)
                {
                    const int rep = witnesses[witness_idx].representative;
                    if (rep >= 0 && nodes[rep].cost <= new_cost)
                        continue; // dominated by the existing representative
                }
            }

            TreeNode node;
            node.nominal = x;
            node.expected = ebs;
            node.gamma_trace = ebs.gamma.trace();
            node.parent = selected;
            node.incoming_control = u;
            node.edge_steps = used_steps;
            node.timestep = nodes[selected].timestep + used_steps;
            node.cost = new_cost;
            const int node_idx = static_cast<int>(nodes.size());
            nodes.push_back(std::move(node));

            if (cfg.sst_pruning)
            {
                if (witness_idx < 0)
                    witnesses.push_back({x, time_indexed ? new_timestep : 0, node_idx});
                else
                {
                    const int rep = witnesses[witness_idx].representative;
                    if (rep >= 0)
                        nodes[rep].active = false;
                    witnesses[witness_idx].representative = node_idx;
                }
            }

            if (reached_goal)
            {
                // rebuild the control tape root-to-goal, then re-propagate so
                // the returned plan satisfies the MotionPlan invariants exactly
                std::vector<std::pair<VectorXd, int>> edges;
                for (int cur = node_idx; nodes[cur].parent >= 0; cur = nodes[cur].parent)
                    edges.emplace_back(nodes[cur].incoming_control, nodes[cur].edge_steps);
                std::vector<VectorXd> controls;
                for (auto eit = edges.rbegin(); eit != edges.rend(); ++eit)
                    for (int sstep = 0; sstep < eit->second; ++sstep)
                        controls.push_back(eit->first);
                result.plan = rollout_plan(agent.sys, agent.start, controls);
                result.status = LowLevelStatus::Success;
                result.tree_size = nodes.size();
                return result;
            }
        }

        result.status = LowLevelStatus::BudgetExhausted;
        result.tree_size = nodes.size();
        return result;
    }

    /// Single-robot convenience wrapper over the component machinery.
    inline PlanningAgent make_agent(const RobotSpec &robot, double dt)
    {
        PlanningAgent agent{make_system(robot, dt), GaussianBelief(robot.start_mean,
                                                                   robot.start_cov),
                            {}};
        agent.components.push_back(
            {robot.body, {0, 1}, GoalRegion{robot.goal_center, robot.goal_radius}});
        return agent;
    }
} // namespace ccmp

#endif
