#ifndef CCMP_GEOMETRY_HPP_
#define CCMP_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ccmp
{
    using Vec2 = Eigen::Vector2d;
    using Mat2 = Eigen::Matrix2d;

    /// A single linear constraint normal^T x <= offset with unit normal.
    struct HalfPlane
    {
        Vec2 normal;
        double offset;
    };

    /// Bounded convex region given as an intersection of half planes.
    class Polytope
    {
    public:
        Polytope() = default;

        explicit Polytope(std::vector<HalfPlane> halfplanes, bool validate = true)
            : halfplanes_(std::move(halfplanes))
        {
            for (auto &h : halfplanes_)
            {
                const double len = h.normal.norm();
                if (len < 1e-12)
                    throw std::invalid_argument("Polytope: zero-length normal");
                if (std::abs(len - 1.0) > 1e-12)
                {
                    h.normal /= len;
                    h.offset /= len;
                }
            }
            if (validate)
            {
                if (!bounded())
                    throw std::invalid_argument("Polytope: unbounded half-plane set");
                if (vertices().size() < 3)
                    throw std::invalid_argument("Polytope: empty or degenerate interior");
            }
        }

        const std::vector<HalfPlane> &halfplanes() const { return halfplanes_; }

        bool contains(const Vec2 &x, double tol = 1e-9) const
        {
            for (const auto &h : halfplanes_)
                if (h.normal.dot(x) > h.offset + tol)
                    return false;
            return true;
        }

        /// The recession cone is empty iff the outward normals leave no angular
        /// gap of pi or more.
        bool bounded() const
        {
            if (halfplanes_.size() < 3)
                return false;
            std::vector<double> angles;
            angles.reserve(halfplanes_.size());
            for (const auto &h : halfplanes_)
                angles.push_back(std::atan2(h.normal.y(), h.normal.x()));
            std::sort(angles.begin(), angles.end());
            double max_gap = angles.front() + 2.0 * M_PI - angles.back();
            for (std::size_t i = 1; i < angles.size(); ++i)
                max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
            return max_gap < M_PI - 1e-12;
        }

        /// Enumerates vertices by pairwise half-plane intersection, CCW order.
        std::vector<Vec2> vertices() const
        {
            std::vector<Vec2> verts;
            const std::size_t n = halfplanes_.size();
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b)
                {
                    Mat2 m;
                    m.row(0) = halfplanes_[a].normal.transpose();
                    m.row(1) = halfplanes_[b].normal.transpose();
                    const double det = m.determinant();
                    if (std::abs(det) < 1e-12)
                        continue;
                    const Vec2 p = m.inverse() * Vec2(halfplanes_[a].offset, halfplanes_[b].offset);
                    if (contains(p, 1e-8))
                        verts.push_back(p);
                }
            if (verts.empty())
                return verts;
            Vec2 centroid = Vec2::Zero();
            for (const auto &v : verts)
                centroid += v;
            centroid /= static_cast<double>(verts.size());
            std::sort(verts.begin(), verts.end(), [&](const Vec2 &p, const Vec2 &q) {
                return std::atan2(p.y() - centroid.y(), p.x() - centroid.x()) <
                       std::atan2(q.y() - centroid.y(), q.x() - centroid.x());
            });
            // drop duplicates from triple intersections
            std::vector<Vec2> out;
            for (const auto &v : verts)
                if (out.empty() || (v - out.back()).norm() > 1e-9)
                    out.push_back(v);
            if (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-9)
                out.pop_back();
            return out;
        }

        /// Axis-aligned rectangle [lo.x,hi.x] x [lo.y,hi.y].
        static Polytope box(const Vec2 &lo, const Vec2 &hi)
        {
            if (!(lo.x() < hi.x() && lo.y() < hi.y()))
                throw std::invalid_argument("Polytope::box: degenerate bounds");
            std::vector<HalfPlane> hs = {
                {Vec2(1, 0), hi.x()}, {Vec2(-1, 0), -lo.x()},
                {Vec2(0, 1), hi.y()}, {Vec2(0, -1), -lo.y()}};
            return Polytope(std::move(hs));
        }

        /// Regular n-gon of tangent half planes around the origin-centered disk
        /// of the given radius. The disk is inscribed: inradius = radius.
        static Polytope circumscribed_ngon(double radius, int sides)
        {
            if (sides < 3 || radius <= 0.0)
                throw std::invalid_argument("Polytope::circumscribed_ngon: bad arguments");
            std::vector<HalfPlane> hs;
            hs.reserve(sides);
            for (int h = 0; h < sides; ++h)
            {
                const double ang = 2.0 * M_PI * h / sides;
                hs.push_back({Vec2(std::cos(ang), std::sin(ang)), radius});
            }
            return Polytope(std::move(hs));
        }

    private:
        std::vector<HalfPlane> halfplanes_;
    };

    /// Rigid robot body: convex CCW polygon in the body frame.
    class Body
    {
    public:
        explicit Body(std::vector<Vec2> vertices) : vertices_(std::move(vertices))
        {
            if (vertices_.size() < 2)
                throw std::invalid_argument("Body: need at least 2 vertices");
            if (vertices_.size() >= 3)
                validateConvexCcw();
            double max_d2 = 0.0;
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                for (std::size_t j = i + 1; j < vertices_.size(); ++j)
                    max_d2 = std::max(max_d2, (vertices_[i] - vertices_[j]).squaredNorm());
            radius_bound_ = 0.5 * std::sqrt(max_d2);
        }

        static Body square(double width)
        {
            const double h = 0.5 * width;
            return Body({Vec2(-h, -h), Vec2(h, -h), Vec2(h, h), Vec2(-h, h)});
        }

        const std::vector<Vec2> &vertices() const { return vertices_; }

        /// Half the largest pairwise vertex distance.
        double radius_bound() const { return radius_bound_; }

        double area() const
        {
            double a = 0.0;
            const std::size_t n = vertices_.size();
            for (std::size_t i = 0; i < n; ++i)
            {
                const Vec2 &p = vertices_[i];
                const Vec2 &q = vertices_[(i + 1) % n];
                a += p.x() * q.y() - q.x() * p.y();
            }
            return 0.5 * a;
        }

    private:
        void validateConvexCcw() const
        {
            const std::size_t n = vertices_.size();
            for (std::size_t i = 0; i < n; ++i)
            {
                const Vec2 e1 = vertices_[(i + 1) % n] - vertices_[i];
                const Vec2 e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
                const double cross = e1.x() * e2.y() - e1.y() * e2.x();
                if (cross < -1e-12)
                    throw std::invalid_argument("Body: vertices not convex CCW");
            }
        }

        std::vector<Vec2> vertices_;
        double radius_bound_ = 0.0;
    };

    namespace detail
    {
        inline bool separatesAlong(const Vec2 &axis, const std::vector<Vec2> &pa, const Vec2 &oa,
                                   const std::vector<Vec2> &pb, const Vec2 &ob)
        {
            double amin = std::numeric_limits<double>::infinity(), amax = -amin;
            for (const auto &v : pa)
            {
                const double d = axis.dot(v + oa);
                amin = std::min(amin, d);
                amax = std::max(amax, d);
            }
            double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
            for (const auto &v : pb)
            {
                const double d = axis.dot(v + ob);
                bmin = std::min(bmin, d);
                bmax = std::max(bmax, d);
            }
            return amax < bmin || bmax < amin;
        }
    } // namespace detail

    /// Separating-axis intersection test for two convex polygons given in body
    /// frame plus translation.
    inline bool polygons_intersect(const std::vector<Vec2> &pa, const Vec2 &oa,
                                   const std::vector<Vec2> &pb, const Vec2 &ob)
    {
        const auto edge_axes = [&](const std::vector<Vec2> &poly) -> bool {
            const std::size_t n = poly.size();
            for (std::size_t i = 0; i < n; ++i)
            {
                const Vec2 e = poly[(i + 1) % n] - poly[i];
                const Vec2 axis(-e.y(), e.x());
                if (axis.squaredNorm() < 1e-24)
                    continue;
                if (detail::separatesAlong(axis, pa, oa, pb, ob))
                    return true;
            }
            return false;
        };
        if (edge_axes(pa) || edge_axes(pb))
            return false;
        return true;
    }

    /// Euclidean distance from a point to a convex polygon (0 inside).
    inline double point_polygon_distance(const Vec2 &p, const std::vector<Vec2> &poly)
    {
        const std::size_t n = poly.size();
        bool inside = n >= 3;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec2 &a = poly[i];
            const Vec2 &b = poly[(i + 1) % n];
            const Vec2 e = b - a;
            const double cross = e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
            if (cross < 0.0)
                inside = false;
            const double len2 = e.squaredNorm();
            double t = len2 > 0.0 ? e.dot(p - a) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            best = std::min(best, (p - (a + t * e)).norm());
        }
        return inside ? 0.0 : best;
    }

    /// Separating-axis test between a convex polygon and an axis-aligned cell.
    inline bool polygon_intersects_aabb(const std::vector<Vec2> &poly, const Vec2 &lo, const Vec2 &hi)
    {
        const std::vector<Vec2> cell = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
        return polygons_intersect(poly, Vec2::Zero(), cell, Vec2::Zero());
    }

    /// Sutherland-Hodgman clip of a convex polygon against normal^T x <= offset.
    inline std::vector<Vec2> clip_polygon(const std::vector<Vec2> &poly, const Vec2 &normal,
                                          double offset)
    {
        std::vector<Vec2> out;
        out.reserve(poly.size() + 1);
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec2 &a = poly[i];
            const Vec2 &b = poly[(i + 1) % n];
            const double da = normal.dot(a) - offset;
            const double db = normal.dot(b) - offset;
            if (da <= 0.0)
                out.push_back(a);
            if ((da < 0.0 && db > 0.0) || (db < 0.0 && da > 0.0))
                out.push_back(a + (da / (da - db)) * (b - a));
        }
        return out;
    }

    /// Convex polygon clipped to an axis-aligned rectangle.
    inline std::vector<Vec2> clip_polygon_aabb(std::vector<Vec2> poly, const Vec2 &lo, const Vec2 &hi)
    {
        poly = clip_polygon(poly, Vec2(1, 0), hi.x());
        if (poly.empty())
            return poly;
        poly = clip_polygon(poly, Vec2(-1, 0), -lo.x());
        if (poly.empty())
            return poly;
        poly = clip_polygon(poly, Vec2(0, 1), hi.y());
        if (poly.empty())
            return poly;
        return clip_polygon(poly, Vec2(0, -1), -lo.y());
    }
} // namespace ccmp

#endif
