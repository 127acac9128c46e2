#ifndef CCMP_CBS_HPP_
#define CCMP_CBS_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccmp/chance.hpp"
#include "ccmp/dynamics.hpp"
#include "ccmp/lowlevel.hpp"
#include "ccmp/scenario.hpp"

namespace ccmp
{
    /// Pairwise chance-constraint violation between two robots' plans.
    struct Conflict
    {
        int robot_i = -1;
        int robot_j = -1;
        int t_start = 0;
        int t_end = 0;
    };

    /// Conflict-tree node: per-agent plans and constraint sets. A node either
    /// has a complete plan set or exactly one agent awaiting replan.
    struct CTNode
    {
        std::vector<MotionPlan> plans;
        std::vector<std::vector<BeliefConstraint>> constraints;
        long conflict_count = 0;
        long id = 0;
        int pending_agent = -1;
        int replan_failures = 0;
    };

    /// Bookkeeping for the merge-and-restart trigger.
    struct MergeState
    {
        std::map<std::pair<int, int>, long> counts;
        long bound = 4;
    };

    /// Increments the pair's conflict counter; true once it exceeds the bound.
    inline bool should_merge(MergeState &state, const Conflict &conflict)
    {
        const auto key = conflict.robot_i < conflict.robot_j
                             ? std::make_pair(conflict.robot_i, conflict.robot_j)
                             : std::make_pair(conflict.robot_j, conflict.robot_i);
        return ++state.counts[key] > state.bound;
    }

    struct CbsConfig
    {
        long low_level_iterations = 60000; // N
        double low_level_time_s = 15.0;
        long merge_bound = 1000000000; // B; effectively never merge by default
        double max_time_s = 180.0;
        std::uint64_t seed = 1;
        int replan_failure_cap = 5;
        std::ostream *trace = nullptr;
    };

    /// Block-diagonal composition of several systems into one meta system with
    /// the concatenated start belief.
    inline std::pair<LinearSystem, GaussianBelief>
    compose_meta(const std::vector<LinearSystem> &systems,
                 const std::vector<GaussianBelief> &starts)
    {
        if (systems.size() < 2 || systems.size() != starts.size())
            throw std::invalid_argument("compose_meta: need >= 2 systems with matching starts");
        int n = 0, p = 0, m = 0;
        for (const auto &s : systems)
        {
            n += s.n();
            p += s.p();
            m += s.m();
        }
        MatrixXd A = MatrixXd::Zero(n, n), B = MatrixXd::Zero(n, p), C = MatrixXd::Zero(m, n);
        MatrixXd Q = MatrixXd::Zero(n, n), R = MatrixXd::Zero(m, m), K = MatrixXd::Zero(p, n);
        VectorXd mean(n);
        MatrixXd cov = MatrixXd::Zero(n, n);
        std::vector<int> pos_idx;
        int on = 0, op = 0, om = 0;
        for (std::size_t s = 0; s < systems.size(); ++s)
        {
            const auto &sys = systems[s];
            if (sys.dt != systems[0].dt)
                throw std::invalid_argument("compose_meta: mismatched timesteps");
            A.block(on, on, sys.n(), sys.n()) = sys.A;
            B.block(on, op, sys.n(), sys.p()) = sys.B;
            C.block(om, on, sys.m(), sys.n()) = sys.C;
            Q.block(on, on, sys.n(), sys.n()) = sys.Q;
            R.block(om, om, sys.m(), sys.m()) = sys.R;
            K.block(op, on, sys.p(), sys.n()) = sys.K_gain;
            mean.segment(on, sys.n()) = starts[s].mean;
            cov.block(on, on, sys.n(), sys.n()) = starts[s].cov;
            for (int idx : sys.position_indices)
                pos_idx.push_back(on + idx);
            on += sys.n();
            op += sys.p();
            om += sys.m();
        }
        return {LinearSystem(std::move(A), std::move(B), std::move(C), std::move(Q), std::move(R),
                             std::move(K), systems[0].dt, std::move(pos_idx)),
                GaussianBelief(std::move(mean), std::move(cov))};
    }

    namespace detail
    {
        inline std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9E3779B97F4A7C15ull;
            x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
            x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
            return x ^ (x >> 31);
        }

        /// One search agent: a single robot or a merged meta robot, with its
        /// planner bounds and the scenario robots it contains.
        struct SearchAgent
        {
            PlanningAgent agent;
            PlannerConfig cfg;
            std::vector<int> robot_ids;
            std::vector<int> state_offsets;   // per component
            std::vector<int> control_offsets; // per component
        };

        inline SearchAgent make_search_agent(const Scenario &scenario, int robot_id)
        {
            const RobotSpec &r = scenario.robots[robot_id];
            SearchAgent sa{make_agent(r, scenario.dt), make_planner_config(scenario.env, r),
                           {robot_id},
                           {0},
                           {0}};
            return sa;
        }

        inline SearchAgent merge_search_agents(const Scenario &scenario, const SearchAgent &a,
                                               const SearchAgent &b)
        {
            auto [sys, start] = compose_meta({a.agent.sys, b.agent.sys},
                                             {a.agent.start, b.agent.start});
            SearchAgent sa{PlanningAgent{std::move(sys), std::move(start), {}}, PlannerConfig{}, {},
                           {}, {}};
            const int n_a = a.agent.sys.n(), p_a = a.agent.sys.p();
            for (std::size_t c = 0; c < a.agent.components.size(); ++c)
            {
                sa.agent.components.push_back(a.agent.components[c]);
                sa.robot_ids.push_back(a.robot_ids[c]);
                sa.state_offsets.push_back(a.state_offsets[c]);
                sa.control_offsets.push_back(a.control_offsets[c]);
            }
            for (std::size_t c = 0; c < b.agent.components.size(); ++c)
            {
                AgentComponent comp = b.agent.components[c];
                for (int &idx : comp.position_indices)
                    idx += n_a;
                sa.agent.components.push_back(std::move(comp));
                sa.robot_ids.push_back(b.robot_ids[c]);
                sa.state_offsets.push_back(b.state_offsets[c] + n_a);
                sa.control_offsets.push_back(b.control_offsets[c] + p_a);
            }
            sa.cfg = a.cfg;
            const int n = sa.agent.sys.n(), p = sa.agent.sys.p();
            sa.cfg.state_lo = VectorXd(n);
            sa.cfg.state_hi = VectorXd(n);
            sa.cfg.control_lo = VectorXd(p);
            sa.cfg.control_hi = VectorXd(p);
            sa.cfg.state_lo << a.cfg.state_lo, b.cfg.state_lo;
            sa.cfg.state_hi << a.cfg.state_hi, b.cfg.state_hi;
            sa.cfg.control_lo << a.cfg.control_lo, b.cfg.control_lo;
            sa.cfg.control_hi << a.cfg.control_hi, b.cfg.control_hi;
            (void)scenario;
            return sa;
        }

        /// Workspace marginal of one component of an agent plan at a step,
        /// holding the terminal belief past the plan's horizon.
        inline WorkspaceMarginal component_marginal(const MotionPlan &plan,
                                                    const AgentComponent &comp, int k)
        {
            const int kk = std::min(k, plan.horizon());
            return marginal_workspace(
                GaussianBelief(plan.nominal_states[kk], plan.beliefs[kk].gamma),
                comp.position_indices);
        }

        struct RobotRef
        {
            int agent = -1;
            int comp = -1;
        };
    } // namespace detail

    /// Steps all plans in lockstep and returns the earliest pairwise
    /// chance-constraint violation with its maximal consecutive interval, or
    /// nothing when every pair passes everywhere.
    inline std::optional<Conflict>
    validate_plan(const std::vector<detail::SearchAgent> &agents,
                  const std::vector<MotionPlan> &plans, const Scenario &scenario,
                  const RiskAllocation &alloc)
    {
        const CheckerConfig checker = scenario.checker_config();
        struct PairInfo
        {
            detail::RobotRef a, b;
            int id_a, id_b;
            std::optional<PairChecker> fixed;
        };
        std::vector<PairInfo> pairs;
        std::vector<detail::RobotRef> refs;
        for (std::size_t ai = 0; ai < agents.size(); ++ai)
            for (std::size_t c = 0; c < agents[ai].robot_ids.size(); ++c)
                refs.push_back({static_cast<int>(ai), static_cast<int>(c)});
        for (std::size_t x = 0; x < refs.size(); ++x)
            for (std::size_t y = x + 1; y < refs.size(); ++y)
            {
                if (refs[x].agent == refs[y].agent)
                    continue; // internal pairs are enforced by the low level
                PairInfo info{refs[x], refs[y],
                              agents[refs[x].agent].robot_ids[refs[x].comp],
                              agents[refs[y].agent].robot_ids[refs[y].comp], std::nullopt};
                if (scenario.allocation == AllocationMode::Equal)
                    info.fixed.emplace(checker,
                                       agents[refs[x].agent].agent.components[refs[x].comp].body,
                                       agents[refs[y].agent].agent.components[refs[y].comp].body,
                                       alloc.pair_share(info.id_a, info.id_b));
                pairs.push_back(std::move(info));
            }
        if (pairs.empty())
            return std::nullopt;

        int t_max = 0;
        for (const auto &p : plans)
            t_max = std::max(t_max, p.horizon());

        double v_agents = 0.0, v_obstacles = 0.0;
        if (scenario.allocation == AllocationMode::Adaptive)
        {
            for (const auto &r : scenario.robots)
                v_agents += r.body.area();
            for (const auto &o : scenario.env.obstacles)
            {
                const auto verts = o.vertices();
                double area = 0.0;
                for (std::size_t i = 0; i < verts.size(); ++i)
                {
                    const Vec2 &p0 = verts[i];
                    const Vec2 &p1 = verts[(i + 1) % verts.size()];
                    area += p0.x() * p1.y() - p1.x() * p0.y();
                }
                v_obstacles += 0.5 * std::abs(area);
            }
        }

        const auto violating_at = [&](const PairInfo &info, int k) -> bool {
            const WorkspaceMarginal ma = detail::component_marginal(
                plans[info.a.agent], agents[info.a.agent].agent.components[info.a.comp], k);
            const WorkspaceMarginal mb = detail::component_marginal(
                plans[info.b.agent], agents[info.b.agent].agent.components[info.b.comp], k);
            if (info.fixed)
                return info.fixed->check(ma, mb) != Verdict::Valid;
            // adaptive: share for this pair from robot a's distances this step
            const double d_ab = std::max((ma.mean - mb.mean).norm(), 1e-9);
            double inv_sum = 0.0;
            for (const auto &other : pairs)
            {
                if (other.id_a != info.id_a && other.id_b != info.id_a)
                    continue;
                const WorkspaceMarginal mo = detail::component_marginal(
                    plans[other.b.agent], agents[other.b.agent].agent.components[other.b.comp],
                    k);
                const WorkspaceMarginal ms = detail::component_marginal(
                    plans[other.a.agent], agents[other.a.agent].agent.components[other.a.comp],
                    k);
                inv_sum += 1.0 / std::max((ms.mean - mo.mean).norm(), 1e-9);
            }
            const AdaptivePairShares shares = allocate_adaptive(
                alloc.p_coll, std::max(v_agents, 1e-12), v_obstacles, {d_ab});
            const double p_c = shares.p_c_agents / (d_ab * std::max(inv_sum, 1e-12));
            const Body &body_a = agents[info.a.agent].agent.components[info.a.comp].body;
            const Body &body_b = agents[info.b.agent].agent.components[info.b.comp].body;
            return pairwise_check(checker, ma, body_a, mb, body_b,
                                  std::min(p_c, 0.499)) != Verdict::Valid;
        };

        for (int k = 0; k <= t_max; ++k)
            for (const auto &info : pairs)
                if (violating_at(info, k))
                {
                    int t_end = k;
                    while (t_end < t_max && violating_at(info, t_end + 1))
                        ++t_end;
                    return Conflict{info.id_a, info.id_b, k, t_end};
                }
        return std::nullopt;
    }

    /// Belief constraint on the target built from the other robot's expected
    /// beliefs over the conflict interval, padded with the terminal belief.
    inline BeliefConstraint create_constraint(const Conflict &conflict, int target_robot,
                                              const std::vector<detail::SearchAgent> &agents,
                                              const std::vector<MotionPlan> &plans,
                                              double pair_p_c)
    {
        const int other_robot =
            target_robot == conflict.robot_i ? conflict.robot_j : conflict.robot_i;
        if (target_robot != conflict.robot_i && target_robot != conflict.robot_j)
            throw std::invalid_argument("create_constraint: target not part of the conflict");
        detail::RobotRef other;
        for (std::size_t ai = 0; ai < agents.size(); ++ai)
            for (std::size_t c = 0; c < agents[ai].robot_ids.size(); ++c)
                if (agents[ai].robot_ids[c] == other_robot)
                    other = {static_cast<int>(ai), static_cast<int>(c)};
        std::vector<WorkspaceMarginal> beliefs;
        beliefs.reserve(conflict.t_end - conflict.t_start + 1);
        for (int k = conflict.t_start; k <= conflict.t_end; ++k)
            beliefs.push_back(detail::component_marginal(
                plans[other.agent], agents[other.agent].agent.components[other.comp], k));
        return BeliefConstraint(other_robot, conflict.t_start, conflict.t_end, std::move(beliefs),
                                agents[other.agent].agent.components[other.comp].body, pair_p_c);
    }

    namespace detail
    {
        inline CheckerContext make_checker_context(const Scenario &scenario,
                                                   const SearchAgent &sa,
                                                   const RiskAllocation &alloc)
        {
            CheckerContext ctx;
            ctx.checker = scenario.checker_config();
            const int n_obs = static_cast<int>(scenario.env.obstacles.size());
            if (n_obs > 0)
                ctx.p_c_per_obstacle = alloc.p_c_obstacles / n_obs;
            for (std::size_t a = 0; a < sa.robot_ids.size(); ++a)
                for (std::size_t b = a + 1; b < sa.robot_ids.size(); ++b)
                    ctx.internal_pairs.emplace_back(
                        static_cast<int>(a), static_cast<int>(b),
                        alloc.pair_share(sa.robot_ids[a], sa.robot_ids[b]));
            return ctx;
        }

        /// Cuts one robot's rows out of a meta plan.
        inline MotionPlan slice_plan(const MotionPlan &plan, int state_offset, int state_dim,
                                     int control_offset, int control_dim)
        {
            MotionPlan out;
            out.controls.reserve(plan.controls.size());
            for (const auto &u : plan.controls)
                out.controls.push_back(u.segment(control_offset, control_dim));
            out.nominal_states.reserve(plan.nominal_states.size());
            for (const auto &x : plan.nominal_states)
                out.nominal_states.push_back(x.segment(state_offset, state_dim));
            out.beliefs.reserve(plan.beliefs.size());
            for (const auto &b : plan.beliefs)
            {
                ExpectedBeliefState e;
                e.sigma = b.sigma.block(state_offset, state_offset, state_dim, state_dim);
                e.lambda = b.lambda.block(state_offset, state_offset, state_dim, state_dim);
                e.gamma = b.gamma.block(state_offset, state_offset, state_dim, state_dim);
                out.beliefs.push_back(std::move(e));
            }
            return out;
        }

        inline PlanResult assemble_result(const Scenario &scenario,
                                          const std::vector<SearchAgent> &agents,
                                          const std::vector<MotionPlan> &plans)
        {
            PlanResult result;
            result.status = PlanStatus::Success;
            result.robots.resize(scenario.robots.size());
            for (std::size_t ai = 0; ai < agents.size(); ++ai)
                for (std::size_t c = 0; c < agents[ai].robot_ids.size(); ++c)
                {
                    const int rid = agents[ai].robot_ids[c];
                    const int dim = scenario.robots[rid].state_dim();
                    const int cdim = scenario.robots[rid].control_dim();
                    result.robots[rid].name = scenario.robots[rid].name;
                    result.robots[rid].plan =
                        slice_plan(plans[ai], agents[ai].state_offsets[c], dim,
                                   agents[ai].control_offsets[c], cdim);
                }
            return result;
        }

        inline void trace_line(std::ostream *out, const std::string &line)
        {
            if (out != nullptr)
                (*out) << line << "\n";
        }

        inline PlanResult cc_kcbs_on_agents(const Scenario &scenario,
                                            std::vector<SearchAgent> agents,
                                            const CbsConfig &config,
                                            std::chrono::steady_clock::time_point deadline,
                                            PlanMetrics &metrics)
        {
            const RiskAllocation alloc =
                allocate_equal(1.0 - scenario.p_safe,
                               static_cast<int>(scenario.env.obstacles.size()),
                               std::max(2, static_cast<int>(scenario.robots.size())));
            const auto time_left = [&]() {
                return std::chrono::duration<double>(deadline - std::chrono::steady_clock::now())
                    .count();
            };
            const auto replan_budget = [&](std::uint64_t node_id, int agent_idx) {
                PlannerBudget b;
                b.max_iterations = config.low_level_iterations;
                b.max_time_s = std::min(config.low_level_time_s, std::max(0.0, time_left()));
                b.rng_seed = splitmix64(config.seed ^ (node_id * 0x51ED2701u + 977u * agent_idx));
                return b;
            };

            std::vector<CTNode> nodes;
            long next_id = 0;
            CTNode root;
            root.id = next_id++;
            root.constraints.resize(agents.size());
            for (std::size_t ai = 0; ai < agents.size(); ++ai)
            {
                const CheckerContext ctx = make_checker_context(scenario, agents[ai], alloc);
                const LowLevelResult r =
                    plan(agents[ai].agent, scenario.env, {}, ctx, agents[ai].cfg,
                         replan_budget(root.id, static_cast<int>(ai)), scenario.p_safe);
                trace_line(config.trace,
                           "{\"event\":\"init\",\"agent\":" + std::to_string(ai) +
                               ",\"ok\":" + (r.status == LowLevelStatus::Success ? "true"
                                                                                 : "false") +
                               "}");
                if (r.status != LowLevelStatus::Success)
                {
                    PlanResult fail;
                    fail.status = time_left() <= 0.0 ? PlanStatus::Timeout : PlanStatus::Infeasible;
                    fail.metrics = metrics;
                    return fail;
                }
                root.plans.push_back(r.plan);
            }

            using QueueKey = std::pair<long, long>; // (conflict_count, id)
            std::priority_queue<std::pair<QueueKey, long>, std::vector<std::pair<QueueKey, long>>,
                                std::greater<>>
                queue;
            nodes.push_back(std::move(root));
            queue.push({{nodes[0].conflict_count, nodes[0].id}, 0});
            ++metrics.ct_nodes;
            MergeState merge_state;
            merge_state.bound = config.merge_bound;

            while (!queue.empty())
            {
                if (time_left() <= 0.0)
                {
                    PlanResult fail;
                    fail.status = PlanStatus::Timeout;
                    fail.metrics = metrics;
                    return fail;
                }
                const long idx = queue.top().second;
                queue.pop();
                CTNode &node = nodes[idx];

                if (node.pending_agent >= 0)
                {
                    const int ai = node.pending_agent;
                    const CheckerContext ctx = make_checker_context(scenario, agents[ai], alloc);
                    const LowLevelResult r = plan(
                        agents[ai].agent, scenario.env, node.constraints[ai], ctx, agents[ai].cfg,
                        replan_budget(static_cast<std::uint64_t>(node.id) * 1000 +
                                          static_cast<std::uint64_t>(node.replan_failures),
                                      ai),
                        scenario.p_safe);
                    trace_line(config.trace, "{\"event\":\"replan\",\"id\":" +
                                                 std::to_string(node.id) + ",\"agent\":" +
                                                 std::to_string(ai) + ",\"ok\":" +
                                                 (r.status == LowLevelStatus::Success ? "true"
                                                                                      : "false") +
                                                 "}");
                    if (r.status == LowLevelStatus::Success)
                    {
                        node.plans[ai] = r.plan;
                        node.pending_agent = -1;
                        queue.push({{node.conflict_count, node.id}, idx});
                    }
                    else if (++node.replan_failures <= config.replan_failure_cap)
                    {
                        ++node.conflict_count; // deprioritize the retry
                        queue.push({{node.conflict_count, node.id}, idx});
                    }
                    continue;
                }

                const std::optional<Conflict> conflict =
                    validate_plan(agents, node.plans, scenario, alloc);
                if (!conflict)
                {
                    PlanResult ok = assemble_result(scenario, agents, node.plans);
                    ok.metrics = metrics;
                    return ok;
                }
                ++metrics.conflicts;
                trace_line(config.trace,
                           "{\"event\":\"conflict\",\"id\":" + std::to_string(node.id) +
                               ",\"pair\":[" + std::to_string(conflict->robot_i) + "," +
                               std::to_string(conflict->robot_j) + "],\"interval\":[" +
                               std::to_string(conflict->t_start) + "," +
                               std::to_string(conflict->t_end) + "]}");

                if (should_merge(merge_state, *conflict))
                {
                    // merge the two agents and restart on the reduced team
                    int agent_i = -1, agent_j = -1;
                    for (std::size_t ai = 0; ai < agents.size(); ++ai)
                        for (int rid : agents[ai].robot_ids)
                        {
                            if (rid == conflict->robot_i)
                                agent_i = static_cast<int>(ai);
                            if (rid == conflict->robot_j)
                                agent_j = static_cast<int>(ai);
                        }
                    trace_line(config.trace, "{\"event\":\"merge\",\"agents\":[" +
                                                 std::to_string(agent_i) + "," +
                                                 std::to_string(agent_j) + "]}");
                    std::vector<SearchAgent> merged;
                    for (std::size_t ai = 0; ai < agents.size(); ++ai)
                        if (static_cast<int>(ai) != agent_i && static_cast<int>(ai) != agent_j)
                            merged.push_back(std::move(agents[ai]));
                    merged.push_back(
                        merge_search_agents(scenario, agents[agent_i], agents[agent_j]));
                    return cc_kcbs_on_agents(scenario, std::move(merged), config, deadline,
                                             metrics);
                }

                // nodes may reallocate below, so branch from copies
                const std::vector<MotionPlan> parent_plans = node.plans;
                const std::vector<std::vector<BeliefConstraint>> parent_constraints =
                    node.constraints;
                const long parent_conflicts = node.conflict_count;
                const long parent_id = node.id;
                for (const int target : {conflict->robot_i, conflict->robot_j})
                {
                    int target_agent = -1;
                    for (std::size_t ai = 0; ai < agents.size(); ++ai)
                        for (int rid : agents[ai].robot_ids)
                            if (rid == target)
                                target_agent = static_cast<int>(ai);
                    CTNode child;
                    child.id = next_id++;
                    child.plans = parent_plans;
                    child.constraints = parent_constraints;
                    child.conflict_count = parent_conflicts + 1;
                    child.pending_agent = target_agent;
                    child.plans[target_agent] = MotionPlan{};
                    child.constraints[target_agent].push_back(create_constraint(
                        *conflict, target, agents, parent_plans,
                        alloc.pair_share(conflict->robot_i, conflict->robot_j)));
                    trace_line(config.trace,
                               "{\"event\":\"branch\",\"id\":" + std::to_string(child.id) +
                                   ",\"parent\":" + std::to_string(parent_id) +
                                   ",\"agent\":" + std::to_string(target_agent) + "}");
                    const long cidx = static_cast<long>(nodes.size());
                    nodes.push_back(std::move(child));
                    queue.push({{nodes[cidx].conflict_count, nodes[cidx].id}, cidx});
                    ++metrics.ct_nodes;
                }
            }
            PlanResult fail;
            fail.status = PlanStatus::Infeasible;
            fail.metrics = metrics;
            return fail;
        }
    } // namespace detail

    /// Two-level chance-constrained conflict-based search.
    inline PlanResult cc_kcbs(const Scenario &scenario, const CbsConfig &config)
    {
        validate_scenario(scenario);
        const auto t0 = std::chrono::steady_clock::now();
        const auto deadline =
            t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(config.max_time_s));
        std::vector<detail::SearchAgent> agents;
        for (std::size_t i = 0; i < scenario.robots.size(); ++i)
            agents.push_back(detail::make_search_agent(scenario, static_cast<int>(i)));
        PlanMetrics metrics;
        PlanResult result =
            detail::cc_kcbs_on_agents(scenario, std::move(agents), config, deadline, metrics);
        result.metrics.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    }

    /// Single-shot centralized planner over the full meta composition.
    inline PlanResult centralized_plan(const Scenario &scenario, const CbsConfig &config)
    {
        validate_scenario(scenario);
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<detail::SearchAgent> agents;
        for (std::size_t i = 0; i < scenario.robots.size(); ++i)
            agents.push_back(detail::make_search_agent(scenario, static_cast<int>(i)));
        detail::SearchAgent all = agents[0];
        for (std::size_t i = 1; i < agents.size(); ++i)
            all = detail::merge_search_agents(scenario, all, agents[i]);
        const RiskAllocation alloc = allocate_equal(
            1.0 - scenario.p_safe, static_cast<int>(scenario.env.obstacles.size()),
            std::max(2, static_cast<int>(scenario.robots.size())));
        const CheckerContext ctx = detail::make_checker_context(scenario, all, alloc);
        PlannerBudget budget;
        budget.max_iterations = config.low_level_iterations;
        budget.max_time_s = config.max_time_s;
        budget.rng_seed = config.seed;
        const LowLevelResult r =
            plan(all.agent, scenario.env, {}, ctx, all.cfg, budget, scenario.p_safe);
        PlanMetrics metrics;
        PlanResult result;
        if (r.status == LowLevelStatus::Success)
            result = detail::assemble_result(scenario, {all}, {r.plan});
        else
            result.status = PlanStatus::Timeout;
        result.metrics = metrics;
        result.metrics.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    }
} // namespace ccmp

#endif
