#ifndef CCMP_DYNAMICS_HPP_
#define CCMP_DYNAMICS_HPP_

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ccmp/gaussian.hpp"

namespace ccmp
{
    namespace detail
    {
        inline MatrixXd symmetrize(const MatrixXd &m) { return 0.5 * (m + m.transpose()); }

        inline int matrixRank(const MatrixXd &m)
        {
            Eigen::ColPivHouseholderQR<MatrixXd> qr(m);
            qr.setThreshold(1e-9);
            return static_cast<int>(qr.rank());
        }
    } // namespace detail

    /// Discrete LQR gain by Riccati iteration to a fixed point.
    inline MatrixXd dlqr_gain(const MatrixXd &A, const MatrixXd &B, const MatrixXd &Qw,
                              const MatrixXd &Rw)
    {
        MatrixXd P = Qw;
        for (int it = 0; it < 10000; ++it)
        {
            const MatrixXd BtP = B.transpose() * P;
            const MatrixXd K = (Rw + BtP * B).ldlt().solve(BtP * A);
            const MatrixXd Pn = Qw + A.transpose() * P * (A - B * K);
            if ((Pn - P).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff()))
            {
                P = Pn;
                break;
            }
            P = Pn;
        }
        const MatrixXd BtP = B.transpose() * P;
        return (Rw + BtP * B).ldlt().solve(BtP * A);
    }

    /// Linear stochastic system x' = A x + B u + w, y = C x + v with a
    /// stabilizing feedback gain and the state indices holding workspace
    /// position.
    struct LinearSystem
    {
        MatrixXd A, B, C, Q, R, K_gain;
        double dt = 1.0;
        std::vector<int> position_indices;

        LinearSystem(MatrixXd A_in, MatrixXd B_in, MatrixXd C_in, MatrixXd Q_in, MatrixXd R_in,
                     MatrixXd K_in, double dt_in, std::vector<int> pos_idx)
            : A(std::move(A_in)), B(std::move(B_in)), C(std::move(C_in)), Q(std::move(Q_in)),
              R(std::move(R_in)), K_gain(std::move(K_in)), dt(dt_in),
              position_indices(std::move(pos_idx))
        {
            const int nn = n();
            if (A.rows() != nn || B.rows() != nn || C.cols() != nn || Q.rows() != nn ||
                Q.cols() != nn || R.rows() != C.rows() || R.cols() != C.rows() ||
                K_gain.rows() != B.cols() || K_gain.cols() != nn)
                throw std::invalid_argument("LinearSystem: inconsistent matrix dimensions");
            if (dt <= 0.0)
                throw std::invalid_argument("LinearSystem: dt must be positive");
            detail::checkCovariance(Q);
            detail::checkCovariance(R);
            for (int idx : position_indices)
                if (idx < 0 || idx >= nn)
                    throw std::invalid_argument("LinearSystem: position index out of range");

            // controllability and observability rank tests
            MatrixXd ctrb(nn, nn * p());
            MatrixXd obsv(nn * m(), nn);
            MatrixXd Apow = MatrixXd::Identity(nn, nn);
            for (int k = 0; k < nn; ++k)
            {
                ctrb.block(0, k * p(), nn, p()) = Apow * B;
                obsv.block(k * m(), 0, m(), nn) = C * Apow;
                Apow = A * Apow;
            }
            if (detail::matrixRank(ctrb) != nn)
                throw std::invalid_argument("LinearSystem: (A,B) not controllable");
            if (detail::matrixRank(obsv) != nn)
                throw std::invalid_argument("LinearSystem: (A,C) not observable");
        }

        int n() const { return static_cast<int>(A.cols()); }
        int p() const { return static_cast<int>(B.cols()); }
        int m() const { return static_cast<int>(C.rows()); }

        /// The 2D benchmark system x' = x + u + w with full-state measurement.
        static LinearSystem linear2d(double noise_q = 0.1, double noise_r = 0.1, double dt = 1.0)
        {
            const MatrixXd I = MatrixXd::Identity(2, 2);
            const MatrixXd K = dlqr_gain(I, I, I, I);
            return LinearSystem(I, I, I, noise_q * noise_q * I, noise_r * noise_r * I, K, dt,
                                {0, 1});
        }
    };

    /// Per-step covariance triple of the expected-belief recursion.
    struct ExpectedBeliefState
    {
        MatrixXd sigma;  // online KF covariance
        MatrixXd lambda; // dispersion of the estimates
        MatrixXd gamma;  // sigma + lambda

        static ExpectedBeliefState initial(const MatrixXd &sigma0)
        {
            ExpectedBeliefState s;
            s.sigma = detail::symmetrize(sigma0);
            s.lambda = MatrixXd::Zero(sigma0.rows(), sigma0.cols());
            s.gamma = s.sigma;
            return s;
        }
    };

    /// Nominal control/state sequences with the expected-belief trajectory.
    struct MotionPlan
    {
        std::vector<VectorXd> controls;       // length T
        std::vector<VectorXd> nominal_states; // length T+1
        std::vector<ExpectedBeliefState> beliefs;

        int horizon() const { return static_cast<int>(controls.size()); }

        GaussianBelief belief_at(int k) const
        {
            return GaussianBelief(nominal_states.at(k), beliefs.at(k).gamma);
        }
    };

    inline VectorXd propagate_nominal(const LinearSystem &sys, const VectorXd &x, const VectorXd &u)
    {
        if (x.size() != sys.n() || u.size() != sys.p())
            throw std::invalid_argument("propagate_nominal: dimension mismatch");
        return sys.A * x + sys.B * u;
    }

    inline VectorXd feedback_control(const LinearSystem &sys, const VectorXd &u_nom,
                                     const VectorXd &x_hat, const VectorXd &x_nom)
    {
        if (u_nom.size() != sys.p() || x_hat.size() != sys.n() || x_nom.size() != sys.n())
            throw std::invalid_argument("feedback_control: dimension mismatch");
        return u_nom - sys.K_gain * (x_hat - x_nom);
    }

    /// One step of the expected-belief covariance recursion: KF covariance
    /// update for Sigma plus closed-loop dispersion update for Lambda.
    inline ExpectedBeliefState expected_belief_step(const LinearSystem &sys,
                                                    const ExpectedBeliefState &prev)
    {
        const MatrixXd sigma_pred = detail::symmetrize(sys.A * prev.sigma * sys.A.transpose() + sys.Q);
        const MatrixXd innov = sys.C * sigma_pred * sys.C.transpose() + sys.R;
        MatrixXd L;
        if (innov.cwiseAbs().maxCoeff() < 1e-30)
        {
            // noise-free fixed point: no correction needed
            L = MatrixXd::Zero(sys.n(), sys.m());
        }
        else
        {
            Eigen::FullPivLU<MatrixXd> lu(innov);
            if (!lu.isInvertible())
                throw std::runtime_error("expected_belief_step: singular innovation covariance");
            L = sigma_pred * sys.C.transpose() * lu.inverse();
        }
        const MatrixXd gain_update = L * sys.C * sigma_pred;
        const MatrixXd Acl = sys.A - sys.B * sys.K_gain;

        ExpectedBeliefState next;
        next.sigma = detail::symmetrize(sigma_pred - gain_update);
        next.lambda = detail::symmetrize(Acl * prev.lambda * Acl.transpose() + gain_update);
        next.gamma = detail::symmetrize(next.sigma + next.lambda);
        return next;
    }

    /// Builds the full plan from an initial belief and a control sequence.
    inline MotionPlan rollout_plan(const LinearSystem &sys, const GaussianBelief &x0,
                                   const std::vector<VectorXd> &controls)
    {
        if (controls.empty())
            throw std::invalid_argument("rollout_plan: empty control sequence");
        if (x0.dim() != sys.n())
            throw std::invalid_argument("rollout_plan: start dimension mismatch");
        MotionPlan plan;
        plan.controls = controls;
        plan.nominal_states.reserve(controls.size() + 1);
        plan.beliefs.reserve(controls.size() + 1);
        plan.nominal_states.push_back(x0.mean);
        plan.beliefs.push_back(ExpectedBeliefState::initial(x0.cov));
        for (const auto &u : controls)
        {
            plan.nominal_states.push_back(propagate_nominal(sys, plan.nominal_states.back(), u));
            plan.beliefs.push_back(expected_belief_step(sys, plan.beliefs.back()));
        }
        return plan;
    }

    namespace detail
    {
        /// Correlated Gaussian sample via the PSD square root of cov.
        class GaussianSampler
        {
        public:
            explicit GaussianSampler(const MatrixXd &cov) : sqrt_(psdSqrt(cov)) {}

            VectorXd operator()(std::mt19937_64 &rng) const
            {
                VectorXd z(sqrt_.rows());
                std::normal_distribution<double> stdnorm(0.0, 1.0);
                for (int i = 0; i < z.size(); ++i)
                    z(i) = stdnorm(rng);
                return sqrt_ * z;
            }

        private:
            MatrixXd sqrt_;
        };
    } // namespace detail

    /// Simulates the true closed loop: sampled process/measurement noise, a
    /// standard KF for the estimate, and the feedback controller tracking the
    /// plan. Returns the true-state trajectory; deterministic per seed.
    inline std::vector<VectorXd> closed_loop_simulate(const LinearSystem &sys, const MotionPlan &plan,
                                                      const VectorXd &x0_sample, std::uint64_t seed)
    {
        if (x0_sample.size() != sys.n())
            throw std::invalid_argument("closed_loop_simulate: start dimension mismatch");
        std::mt19937_64 rng(seed);
        const detail::GaussianSampler sample_w(sys.Q);
        const detail::GaussianSampler sample_v(sys.R);

        std::vector<VectorXd> traj;
        traj.reserve(plan.horizon() + 1);
        VectorXd x = x0_sample;
        VectorXd x_hat = plan.nominal_states.front();
        MatrixXd sigma = plan.beliefs.front().sigma;
        traj.push_back(x);
        for (int k = 0; k < plan.horizon(); ++k)
        {
            const VectorXd u = feedback_control(sys, plan.controls[k], x_hat, plan.nominal_states[k]);
            x = sys.A * x + sys.B * u + sample_w(rng);
            const VectorXd y = sys.C * x + sample_v(rng);

            const MatrixXd sigma_pred =
                detail::symmetrize(sys.A * sigma * sys.A.transpose() + sys.Q);
            const MatrixXd innov = sys.C * sigma_pred * sys.C.transpose() + sys.R;
            const MatrixXd L =
                innov.cwiseAbs().maxCoeff() < 1e-30
                    ? MatrixXd::Zero(sys.n(), sys.m())
                    : MatrixXd(sigma_pred * sys.C.transpose() *
                               innov.ldlt().solve(MatrixXd::Identity(sys.m(), sys.m())));
            const VectorXd x_hat_pred = sys.A * x_hat + sys.B * u;
            x_hat = x_hat_pred + L * (y - sys.C * x_hat_pred);
            sigma = detail::symmetrize(sigma_pred - L * sys.C * sigma_pred);
            traj.push_back(x);
        }
        return traj;
    }

    /// Feedback-linearized 2nd-order unicycle: double integrator in
    /// (x, y, xdot, ydot) with zero-order-hold discretization. Carries the
    /// coordinate maps between unicycle states (x, y, theta, v) / inputs
    /// (omega, a) and the linearizing frame.
    struct UnicycleModel
    {
        LinearSystem sys;

        static UnicycleModel make(double dt, double noise_q, double noise_r)
        {
            if (dt <= 0.0)
                throw std::invalid_argument("UnicycleModel: dt must be positive");
            MatrixXd A = MatrixXd::Identity(4, 4);
            A(0, 2) = dt;
            A(1, 3) = dt;
            MatrixXd B = MatrixXd::Zero(4, 2);
            B(0, 0) = 0.5 * dt * dt;
            B(1, 1) = 0.5 * dt * dt;
            B(2, 0) = dt;
            B(3, 1) = dt;
            MatrixXd Q = MatrixXd::Zero(4, 4);
            Q(2, 2) = noise_q * noise_q;
            Q(3, 3) = noise_q * noise_q;
            const MatrixXd C = MatrixXd::Identity(4, 4);
            const MatrixXd R = noise_r * noise_r * MatrixXd::Identity(4, 4);
            const MatrixXd K = dlqr_gain(A, B, MatrixXd::Identity(4, 4), MatrixXd::Identity(2, 2));
            return UnicycleModel{LinearSystem(A, B, C, Q, R, K, dt, {0, 1})};
        }

        /// (x, y, theta, v) -> (x, y, v cos(theta), v sin(theta))
        static VectorXd to_linear(const VectorXd &unicycle_state)
        {
            if (unicycle_state.size() != 4)
                throw std::invalid_argument("UnicycleModel::to_linear: need 4 components");
            VectorXd z(4);
            z << unicycle_state(0), unicycle_state(1),
                unicycle_state(3) * std::cos(unicycle_state(2)),
                unicycle_state(3) * std::sin(unicycle_state(2));
            return z;
        }

        static VectorXd from_linear(const VectorXd &z)
        {
            if (z.size() != 4)
                throw std::invalid_argument("UnicycleModel::from_linear: need 4 components");
            VectorXd s(4);
            s << z(0), z(1), std::atan2(z(3), z(2)), std::hypot(z(2), z(3));
            return s;
        }

        /// Linearizing accelerations (w1, w2) from unicycle inputs (omega, a).
        static VectorXd input_to_linear(const VectorXd &unicycle_state, const VectorXd &input)
        {
            const double th = unicycle_state(2), v = unicycle_state(3);
            VectorXd w(2);
            w << input(1) * std::cos(th) - v * input(0) * std::sin(th),
                input(1) * std::sin(th) + v * input(0) * std::cos(th);
            return w;
        }

        /// Unicycle inputs (omega, a) from linearizing accelerations; the
        /// decoupling matrix is singular at v = 0.
        static VectorXd input_from_linear(const VectorXd &unicycle_state, const VectorXd &w)
        {
            const double th = unicycle_state(2), v = unicycle_state(3);
            if (std::abs(v) < 1e-9)
                throw std::domain_error("UnicycleModel::input_from_linear: singular at v = 0");
            VectorXd input(2);
            input << (-w(0) * std::sin(th) + w(1) * std::cos(th)) / v,
                w(0) * std::cos(th) + w(1) * std::sin(th);
            return input;
        }
    };

    inline UnicycleModel make_unicycle_system(double dt, double noise_q, double noise_r)
    {
        return UnicycleModel::make(dt, noise_q, noise_r);
    }
} // namespace ccmp

#endif
