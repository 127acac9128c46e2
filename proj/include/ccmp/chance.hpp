#ifndef CCMP_CHANCE_HPP_
#define CCMP_CHANCE_HPP_

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccmp/gaussian.hpp"
#include "ccmp/geometry.hpp"

namespace ccmp
{
    enum class Verdict
    {
        Valid,
        PossiblyColliding
    };

    enum class CheckMethod
    {
        M1,
        M21,
        M22
    };

    inline std::string to_string(CheckMethod m)
    {
        switch (m)
        {
        case CheckMethod::M1:
            return "m1";
        case CheckMethod::M21:
            return "m21";
        default:
            return "m22";
        }
    }

    enum class AllocationMode
    {
        Equal,
        Adaptive
    };

    enum class ObstacleCheckMode
    {
        LinearConstraint,
        ContourBound
    };

    struct CheckerConfig
    {
        CheckMethod method = CheckMethod::M22;
        int polytope_sides = 8;
        int grid_divisions = 5;
        double p_safe = 0.95;

        CheckerConfig() = default;
        CheckerConfig(CheckMethod m, int sides, int grid, double psafe)
            : method(m), polytope_sides(sides), grid_divisions(grid), p_safe(psafe)
        {
            if (polytope_sides < 4)
                throw std::invalid_argument("CheckerConfig: polytope_sides must be >= 4");
            if (grid_divisions < 1)
                throw std::invalid_argument("CheckerConfig: grid_divisions must be >= 1");
        }
    };

    /// Division of the total allowable collision probability among obstacles
    /// and robot pairs.
    struct RiskAllocation
    {
        double p_coll = 0.0;
        double p_c_obstacles = 0.0;
        std::map<std::pair<int, int>, double> pairwise;

        double pair_share(int i, int j) const
        {
            const auto key = i < j ? std::make_pair(i, j) : std::make_pair(j, i);
            const auto it = pairwise.find(key);
            if (it == pairwise.end())
                throw std::out_of_range("RiskAllocation: unknown robot pair");
            return it->second;
        }
    };

    inline double body_radius(const Body &body) { return body.radius_bound(); }

    /// Radius of the disk bounding the p_safe probability contour of a 2D
    /// marginal: sqrt(t_chi * lambda_max).
    inline double contour_radius(const WorkspaceMarginal &marginal, double p_safe)
    {
        if (!(p_safe > 0.0 && p_safe < 1.0))
            throw std::domain_error("contour_radius: p_safe must lie in (0,1)");
        Eigen::SelfAdjointEigenSolver<Mat2> es(marginal.cov, Eigen::EigenvaluesOnly);
        const double lambda_max = std::max(0.0, es.eigenvalues().maxCoeff());
        return std::sqrt(chi2_quantile(p_safe, 2) * lambda_max);
    }

    /// Safety-contour check: inflated bounding disks must not intersect.
    inline Verdict m1_check(const WorkspaceMarginal &bel_i, const Body &body_i,
                            const WorkspaceMarginal &bel_j, const Body &body_j, double p_safe)
    {
        const double bound = contour_radius(bel_i, p_safe) + body_i.radius_bound() +
                             contour_radius(bel_j, p_safe) + body_j.radius_bound();
        return (bel_i.mean - bel_j.mean).norm() > bound ? Verdict::Valid
                                                        : Verdict::PossiblyColliding;
    }

    /// Distribution of the difference of two independent marginals.
    inline WorkspaceMarginal difference_belief(const WorkspaceMarginal &bel_i,
                                               const WorkspaceMarginal &bel_j)
    {
        return WorkspaceMarginal(bel_i.mean - bel_j.mean, bel_i.cov + bel_j.cov);
    }

    /// Regular polytope circumscribing the disk of radius R_i + R_j that
    /// bounds the pairwise collision set of the two bodies.
    inline Polytope collision_polytope(const Body &body_i, const Body &body_j, int sides)
    {
        if (sides < 4)
            throw std::invalid_argument("collision_polytope: need at least 4 sides");
        return Polytope::circumscribed_ngon(body_i.radius_bound() + body_j.radius_bound(), sides);
    }

    /// Deterministic linear-constraint check: some half plane keeps all but
    /// p_c of the difference mass outside the polytope.
    inline Verdict m21_check(const WorkspaceMarginal &diff, const Polytope &poly, double p_c)
    {
        if (!(p_c > 0.0 && p_c < 0.5))
            throw std::domain_error("m21_check: p_c must lie in (0, 0.5)");
        const double erf_term = M_SQRT2 * inverse_erf(1.0 - 2.0 * p_c);
        for (const auto &h : poly.halfplanes())
        {
            const double spread = std::sqrt(h.normal.dot(diff.cov * h.normal));
            if (h.normal.dot(diff.mean) >= h.offset + erf_term * spread)
                return Verdict::Valid;
        }
        return Verdict::PossiblyColliding;
    }

    struct GridCheckResult
    {
        double p_poly = 0.0;
        Verdict verdict = Verdict::PossiblyColliding;
    };

    namespace detail
    {
        /// Upper bound on the standard-normal mass of a convex polygon piece:
        /// the mass of its bounding box, with pieces that underfill the box
        /// quartered recursively up to the given depth.
        inline double covering_mass(const std::vector<Vec2> &piece, int depth)
        {
            Vec2 plo(1e300, 1e300), phi(-1e300, -1e300);
            for (const auto &v : piece)
            {
                plo = plo.cwiseMin(v);
                phi = phi.cwiseMax(v);
            }
            const double rect = (std_normal_cdf(phi.x()) - std_normal_cdf(plo.x())) *
                                (std_normal_cdf(phi.y()) - std_normal_cdf(plo.y()));
            if (depth == 0 || rect <= 0.0)
                return rect;
            double area2 = 0.0;
            for (std::size_t i = 0; i < piece.size(); ++i)
            {
                const Vec2 &a = piece[i];
                const Vec2 &b = piece[(i + 1) % piece.size()];
                area2 += a.x() * b.y() - b.x() * a.y();
            }
            const double box2 = 2.0 * (phi.x() - plo.x()) * (phi.y() - plo.y());
            if (std::abs(area2) >= (1.0 - 1e-9) * box2)
                return rect;
            const Vec2 mid = 0.5 * (plo + phi);
            double sum = 0.0;
            const Vec2 los[4] = {plo, Vec2(mid.x(), plo.y()), Vec2(plo.x(), mid.y()), mid};
            const Vec2 his[4] = {mid, Vec2(phi.x(), mid.y()), Vec2(mid.x(), phi.y()), phi};
            for (int q = 0; q < 4; ++q)
            {
                const auto sub = clip_polygon_aabb(piece, los[q], his[q]);
                if (!sub.empty())
                    sum += covering_mass(sub, depth - 1);
            }
            return std::min(sum, rect);
        }
    } // namespace detail

    /// Grid integration: whitens the difference distribution, covers the
    /// whitened polytope's bounding box with a d x d grid, and sums the
    /// standard-normal mass of every cell touching the polytope.
    inline GridCheckResult m22_check(const WorkspaceMarginal &diff, const Polytope &poly, double p_c,
                                     int divisions)
    {
        if (divisions < 1)
            throw std::invalid_argument("m22_check: divisions must be >= 1");
        const WhitenResult white = whiten(diff, poly);
        const std::vector<Vec2> verts = white.polytope.vertices();
        Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
        for (const auto &v : verts)
        {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        const double dx = (hi.x() - lo.x()) / divisions;
        const double dy = (hi.y() - lo.y()) / divisions;

        // Each covering rectangle is the bounding box of the polytope clipped
        // to its grid cell; the union still covers the polytope, so p_poly
        // over-approximates the true mass. Boundary pieces that do not fill
        // their bounding box are recursively quartered a bounded number of
        // times to shave the covering slack.
        double p_poly = 0.0;
        for (int ix = 0; ix < divisions; ++ix)
            for (int iy = 0; iy < divisions; ++iy)
            {
                const Vec2 cell_lo(lo.x() + ix * dx, lo.y() + iy * dy);
                const Vec2 cell_hi(lo.x() + (ix + 1) * dx, lo.y() + (iy + 1) * dy);
                const auto piece = clip_polygon_aabb(verts, cell_lo, cell_hi);
                if (piece.empty())
                    continue;
                p_poly += detail::covering_mass(piece, 3);
            }
        return GridCheckResult{p_poly, p_poly <= p_c ? Verdict::Valid : Verdict::PossiblyColliding};
    }

    struct McEstimate
    {
        double probability = 0.0;
        double std_error = 0.0;
        long hits = 0;
        long samples = 0;
    };

    /// Monte Carlo ground truth: samples positions from both marginals and
    /// counts exact body intersections. Heading is fixed per body.
    inline McEstimate mc_collision_probability(const WorkspaceMarginal &bel_i, const Body &body_i,
                                               const WorkspaceMarginal &bel_j, const Body &body_j,
                                               long n, std::uint64_t seed)
    {
        if (n < 1)
            throw std::invalid_argument("mc_collision_probability: need n >= 1");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        const Mat2 sqrt_i = detail::psdSqrt(bel_i.cov);
        const Mat2 sqrt_j = detail::psdSqrt(bel_j.cov);

        long hits = 0;
        for (long s = 0; s < n; ++s)
        {
            const Vec2 zi(stdnorm(rng), stdnorm(rng));
            const Vec2 zj(stdnorm(rng), stdnorm(rng));
            const Vec2 pi = bel_i.mean + sqrt_i * zi;
            const Vec2 pj = bel_j.mean + sqrt_j * zj;
            // cheap reject before the SAT test
            const double d = (pi - pj).norm();
            if (d > body_i.radius_bound() + body_j.radius_bound())
                continue;
            if (polygons_intersect(body_i.vertices(), pi, body_j.vertices(), pj))
                ++hits;
        }
        McEstimate est;
        est.hits = hits;
        est.samples = n;
        est.probability = static_cast<double>(hits) / static_cast<double>(n);
        est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / n);
        return est;
    }

    /// Robot-obstacle chance check. LinearConstraint inflates the obstacle's
    /// half planes by the body radius and applies the linear-constraint bound;
    /// ContourBound tests the inflated contour disk against the obstacle.
    inline Verdict static_obstacle_check(const WorkspaceMarginal &bel, const Body &body,
                                         const Polytope &obstacle, double p_c_obs,
                                         ObstacleCheckMode mode)
    {
        if (mode == ObstacleCheckMode::LinearConstraint)
        {
            std::vector<HalfPlane> inflated;
            inflated.reserve(obstacle.halfplanes().size());
            for (const auto &h : obstacle.halfplanes())
                inflated.push_back({h.normal, h.offset + body.radius_bound()});
            return m21_check(bel, Polytope(std::move(inflated), false), p_c_obs);
        }
        const double bound = contour_radius(bel, 1.0 - p_c_obs) + body.radius_bound();
        const double dist = point_polygon_distance(bel.mean, obstacle.vertices());
        return dist > bound ? Verdict::Valid : Verdict::PossiblyColliding;
    }

    struct GoalRegion
    {
        Vec2 center;
        double radius = 0.0;
    };

    /// Goal chance check: the p_safe contour disk must fit in the goal disk.
    inline Verdict goal_check(const GaussianBelief &bel, const std::vector<int> &position_indices,
                              const GoalRegion &goal, double p_safe)
    {
        if (goal.radius <= 0.0)
            throw std::invalid_argument("goal_check: goal radius must be positive");
        const WorkspaceMarginal marginal = marginal_workspace(bel, position_indices);
        const double needed =
            (marginal.mean - goal.center).norm() + contour_radius(marginal, p_safe);
        return needed <= goal.radius ? Verdict::Valid : Verdict::PossiblyColliding;
    }

    /// Equal split of p_coll over obstacles and the other robots.
    inline RiskAllocation allocate_equal(double p_coll, int n_obstacles, int n_agents)
    {
        if (!(p_coll > 0.0 && p_coll < 1.0))
            throw std::invalid_argument("allocate_equal: p_coll must lie in (0,1)");
        if (n_agents < 1)
            throw std::invalid_argument("allocate_equal: need at least one agent");
        RiskAllocation alloc;
        alloc.p_coll = p_coll;
        const int sources = n_obstacles + n_agents - 1;
        const double share = sources > 0 ? p_coll / sources : p_coll;
        alloc.p_c_obstacles = n_obstacles * share;
        for (int i = 0; i < n_agents; ++i)
            for (int j = i + 1; j < n_agents; ++j)
                alloc.pairwise[{i, j}] = share;
        return alloc;
    }

    /// Volume-weighted split between robots and obstacles, then a
    /// distance-weighted split of the robot budget for one robot against the
    /// others. Shares are normalized to sum to the robot budget.
    struct AdaptivePairShares
    {
        double p_c_agents = 0.0;
        double p_c_obstacles = 0.0;
        std::vector<double> shares; // aligned with the distances input
    };

    inline AdaptivePairShares allocate_adaptive(double p_coll, double volume_agents,
                                                double volume_obstacles,
                                                const std::vector<double> &distances)
    {
        if (volume_agents <= 0.0)
            throw std::invalid_argument("allocate_adaptive: agent volume must be positive");
        if (volume_obstacles < 0.0)
            throw std::invalid_argument("allocate_adaptive: negative obstacle volume");
        AdaptivePairShares out;
        out.p_c_agents = volume_agents * p_coll / (volume_agents + volume_obstacles);
        out.p_c_obstacles = volume_obstacles * p_coll / (volume_agents + volume_obstacles);
        double inv_sum = 0.0;
        for (double d : distances)
        {
            if (d <= 0.0)
                throw std::domain_error("allocate_adaptive: degenerate distance");
            inv_sum += 1.0 / d;
        }
        out.shares.reserve(distances.size());
        for (double d : distances)
            out.shares.push_back(out.p_c_agents / (d * inv_sum));
        return out;
    }

    namespace detail
    {
        inline double lambdaMax2x2(const Mat2 &m)
        {
            const double tr = m(0, 0) + m(1, 1);
            const double disc = std::sqrt(std::max(
                0.0, (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) + 4.0 * m(0, 1) * m(1, 0)));
            return 0.5 * (tr + disc);
        }
    } // namespace detail

    /// Robot-robot checker for one pair with the p_safe / p_c dependent
    /// constants hoisted out of the per-call path. This is the kernel the
    /// planners and benchmarks run millions of times.
    class PairChecker
    {
    public:
        PairChecker(const CheckerConfig &cfg, const Body &body_i, const Body &body_j, double p_c)
            : cfg_(cfg), p_c_(p_c),
              sum_body_radius_(body_i.radius_bound() + body_j.radius_bound()),
              t_chi_(chi2_quantile(cfg.p_safe, 2))
        {
            if (cfg_.method != CheckMethod::M1)
            {
                poly_ = collision_polytope(body_i, body_j, cfg_.polytope_sides);
                if (cfg_.method == CheckMethod::M21)
                {
                    if (!(p_c > 0.0 && p_c < 0.5))
                        throw std::domain_error("PairChecker: p_c must lie in (0, 0.5)");
                    erf_term_ = M_SQRT2 * inverse_erf(1.0 - 2.0 * p_c);
                }
            }
        }

        Verdict check(const WorkspaceMarginal &bel_i, const WorkspaceMarginal &bel_j) const
        {
            switch (cfg_.method)
            {
            case CheckMethod::M1:
            {
                const double bound = std::sqrt(t_chi_ * detail::lambdaMax2x2(bel_i.cov)) +
                                     std::sqrt(t_chi_ * detail::lambdaMax2x2(bel_j.cov)) +
                                     sum_body_radius_;
                return (bel_i.mean - bel_j.mean).norm() > bound ? Verdict::Valid
                                                                : Verdict::PossiblyColliding;
            }
            case CheckMethod::M21:
            {
                const Vec2 mean = bel_i.mean - bel_j.mean;
                const Mat2 cov = bel_i.cov + bel_j.cov;
                for (const auto &h : poly_.halfplanes())
                {
                    const double spread = std::sqrt(h.normal.dot(cov * h.normal));
                    if (h.normal.dot(mean) >= h.offset + erf_term_ * spread)
                        return Verdict::Valid;
                }
                return Verdict::PossiblyColliding;
            }
            default:
                return m22_check(difference_belief(bel_i, bel_j), poly_, p_c_,
                                 cfg_.grid_divisions)
                    .verdict;
            }
        }

        double pair_risk() const { return p_c_; }

    private:
        CheckerConfig cfg_;
        double p_c_;
        double sum_body_radius_;
        double t_chi_;
        double erf_term_ = 0.0;
        Polytope poly_;
    };

    /// Dispatch over the three robot-robot checkers.
    inline Verdict pairwise_check(const CheckerConfig &cfg, const WorkspaceMarginal &bel_i,
                                  const Body &body_i, const WorkspaceMarginal &bel_j,
                                  const Body &body_j, double p_c)
    {
        switch (cfg.method)
        {
        case CheckMethod::M1:
            return m1_check(bel_i, body_i, bel_j, body_j, cfg.p_safe);
        case CheckMethod::M21:
            return m21_check(difference_belief(bel_i, bel_j),
                             collision_polytope(body_i, body_j, cfg.polytope_sides), p_c);
        default:
            return m22_check(difference_belief(bel_i, bel_j),
                             collision_polytope(body_i, body_j, cfg.polytope_sides), p_c,
                             cfg.grid_divisions)
                .verdict;
        }
    }
} // namespace ccmp

#endif
