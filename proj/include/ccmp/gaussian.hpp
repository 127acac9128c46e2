#ifndef CCMP_GAUSSIAN_HPP_
#define CCMP_GAUSSIAN_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ccmp/geometry.hpp"

namespace ccmp
{
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    namespace detail
    {
        inline void checkCovariance(const MatrixXd &cov, double eig_floor = -1e-9)
        {
            if (cov.rows() != cov.cols())
                throw std::invalid_argument("covariance must be square");
            const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
            if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
                throw std::invalid_argument("covariance must be symmetric");
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < eig_floor)
                throw std::invalid_argument("covariance must be positive semi-definite");
        }

        /// Symmetric PSD square root with eigenvalue clamping.
        inline MatrixXd psdSqrt(const MatrixXd &m, double clamp = 0.0)
        {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
            VectorXd d = es.eigenvalues().cwiseMax(clamp);
            return es.eigenvectors() * d.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
        }
    } // namespace detail

    /// Gaussian state distribution: mean and symmetric PSD covariance.
    struct GaussianBelief
    {
        VectorXd mean;
        MatrixXd cov;

        GaussianBelief(VectorXd mean_in, MatrixXd cov_in)
            : mean(std::move(mean_in)), cov(std::move(cov_in))
        {
            if (cov.rows() != mean.size())
                throw std::invalid_argument("GaussianBelief: mean/cov dimension mismatch");
            detail::checkCovariance(cov);
        }

        int dim() const { return static_cast<int>(mean.size()); }
    };

    /// 2D workspace marginal of a belief.
    struct WorkspaceMarginal
    {
        Vec2 mean;
        Mat2 cov;

        WorkspaceMarginal(const Vec2 &mean_in, const Mat2 &cov_in) : mean(mean_in), cov(cov_in)
        {
            detail::checkCovariance(cov);
        }
    };

    /// Sub-mean and sub-covariance at the given pair of state indices.
    inline WorkspaceMarginal marginal_workspace(const GaussianBelief &belief,
                                                const std::vector<int> &position_indices)
    {
        if (position_indices.size() != 2)
            throw std::invalid_argument("marginal_workspace: need exactly 2 position indices");
        for (int idx : position_indices)
            if (idx < 0 || idx >= belief.dim())
                throw std::out_of_range("marginal_workspace: position index out of range");
        const int i = position_indices[0], j = position_indices[1];
        Vec2 m(belief.mean(i), belief.mean(j));
        Mat2 c;
        c << belief.cov(i, i), belief.cov(i, j), belief.cov(j, i), belief.cov(j, j);
        return WorkspaceMarginal(m, c);
    }

    namespace detail
    {
        /// Regularized lower incomplete gamma P(a, x), series + continued fraction.
        inline double regularizedGammaP(double a, double x)
        {
            if (x <= 0.0)
                return 0.0;
            const double gln = std::lgamma(a);
            if (x < a + 1.0)
            {
                double ap = a, sum = 1.0 / a, del = sum;
                for (int n = 0; n < 500; ++n)
                {
                    ap += 1.0;
                    del *= x / ap;
                    sum += del;
                    if (std::abs(del) < std::abs(sum) * 1e-16)
                        break;
                }
                return sum * std::exp(-x + a * std::log(x) - gln);
            }
            // Lentz continued fraction for Q(a,x)
            const double tiny = 1e-300;
            double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
            for (int i = 1; i <= 500; ++i)
            {
                const double an = -i * (i - a);
                b += 2.0;
                d = an * d + b;
                if (std::abs(d) < tiny)
                    d = tiny;
                c = b + an / c;
                if (std::abs(c) < tiny)
                    c = tiny;
                d = 1.0 / d;
                const double del = d * c;
                h *= del;
                if (std::abs(del - 1.0) < 1e-16)
                    break;
            }
            return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
        }
    } // namespace detail

    /// Chi-squared CDF with the given degrees of freedom.
    inline double chi2_cdf(double x, int dof)
    {
        if (dof < 1)
            throw std::invalid_argument("chi2_cdf: dof must be positive");
        return detail::regularizedGammaP(0.5 * dof, 0.5 * std::max(x, 0.0));
    }

    /// Inverse chi-squared CDF by bisection on the regularized incomplete gamma.
    inline double chi2_quantile(double p, int dof)
    {
        if (dof < 1)
            throw std::invalid_argument("chi2_quantile: dof must be positive");
        if (!(p > 0.0 && p < 1.0))
            throw std::domain_error("chi2_quantile: p must lie in (0,1)");
        if (dof == 2)
            return -2.0 * std::log1p(-p);
        double lo = 0.0, hi = 1.0;
        while (chi2_cdf(hi, dof) < p)
        {
            hi *= 2.0;
            if (hi > 1e12)
                break;
        }
        for (int it = 0; it < 200; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if (chi2_cdf(mid, dof) < p)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-13 * std::max(1.0, hi))
                break;
        }
        return 0.5 * (lo + hi);
    }

    inline double std_normal_cdf(double z)
    {
        if (!std::isfinite(z))
            throw std::domain_error("std_normal_cdf: non-finite input");
        return 0.5 * std::erfc(-z * M_SQRT1_2);
    }

    /// Inverse error function, Newton refinement of a bisection bracket.
    inline double inverse_erf(double y)
    {
        if (!(y > -1.0 && y < 1.0))
            throw std::domain_error("inverse_erf: argument must lie in (-1,1)");
        if (y == 0.0)
            return 0.0;
        double lo = 0.0, hi = 1.0;
        const double ay = std::abs(y);
        while (std::erf(hi) < ay)
            hi *= 2.0;
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it)
        {
            const double f = std::erf(x) - ay;
            if (f > 0.0)
                hi = x;
            else
                lo = x;
            const double deriv = 2.0 / std::sqrt(M_PI) * std::exp(-x * x);
            double next = x - f / deriv;
            if (!(next > lo && next < hi))
                next = 0.5 * (lo + hi);
            if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x)))
            {
                x = next;
                break;
            }
            x = next;
        }
        return y < 0.0 ? -x : x;
    }

    /// Invertible record of a whitening map y = M^-1 (x - mean), M M^T = cov.
    struct WhitenTransform
    {
        Vec2 mean;
        Mat2 sqrt_cov;     // symmetric M
        Mat2 sqrt_cov_inv; // M^-1

        Vec2 toWhite(const Vec2 &x) const { return sqrt_cov_inv * (x - mean); }
        Vec2 fromWhite(const Vec2 &y) const { return sqrt_cov * y + mean; }
    };

    struct WhitenResult
    {
        Polytope polytope;
        WhitenTransform transform;
    };

    /// Maps a polytope into the frame where the marginal is standard normal.
    /// The square root comes from a symmetric eigendecomposition with the
    /// eigenvalues clamped at 1e-12.
    inline WhitenResult whiten(const WorkspaceMarginal &dist, const Polytope &poly)
    {
        Eigen::SelfAdjointEigenSolver<Mat2> es(dist.cov);
        if (es.eigenvalues().minCoeff() <= 1e-12)
            throw std::domain_error("whiten: degenerate covariance");
        const Mat2 sqrt_cov = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                              es.eigenvectors().transpose();
        WhitenTransform t{dist.mean, sqrt_cov, sqrt_cov.inverse()};

        // c^T x <= d with x = M y + mean becomes (M c)^T y <= d - c^T mean.
        std::vector<HalfPlane> mapped;
        mapped.reserve(poly.halfplanes().size());
        for (const auto &h : poly.halfplanes())
        {
            const Vec2 n = sqrt_cov * h.normal;
            const double len = n.norm();
            mapped.push_back({n / len, (h.offset - h.normal.dot(dist.mean)) / len});
        }
        return WhitenResult{Polytope(std::move(mapped), false), t};
    }

    /// 2-Wasserstein distance between Gaussians.
    inline double belief_distance(const GaussianBelief &a, const GaussianBelief &b)
    {
        if (a.dim() != b.dim())
            throw std::invalid_argument("belief_distance: dimension mismatch");
        const MatrixXd sqrt_b = detail::psdSqrt(b.cov);
        const MatrixXd cross = detail::psdSqrt(sqrt_b * a.cov * sqrt_b);
        const double bures = std::max(0.0, (a.cov + b.cov - 2.0 * cross).trace());
        return std::sqrt((a.mean - b.mean).squaredNorm() + bures);
    }
} // namespace ccmp

#endif
