#include <random>

#include "doctest.h"

#include "ccmp/dynamics.hpp"

using namespace ccmp;

namespace
{
    LinearSystem simple2d(double q = 0.1, double r = 0.1) { return LinearSystem::linear2d(q, r); }

    std::vector<VectorXd> constant_controls(const VectorXd &u, int steps)
    {
        return std::vector<VectorXd>(steps, u);
    }
} // namespace

TEST_CASE("propagate_nominal")
{
    const auto sys = simple2d();
    CHECK((propagate_nominal(sys, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1)) -
           Eigen::Vector2d(1, -1))
              .norm() < 1e-12);
    CHECK((propagate_nominal(sys, Eigen::Vector2d(2, 3), Eigen::Vector2d(0, 0)) -
           Eigen::Vector2d(2, 3))
              .norm() < 1e-12);

    // double integrator row: A=[[1,dt],[0,1]], B=(0,dt)^T
    MatrixXd A(2, 2), B(2, 1);
    A << 1, 0.1, 0, 1;
    B << 0, 0.1;
    const MatrixXd C = MatrixXd::Identity(2, 2);
    const MatrixXd Q = 0.01 * MatrixXd::Identity(2, 2);
    const MatrixXd K = dlqr_gain(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1));
    const LinearSystem di(A, B, C, Q, Q, K, 0.1, {0, 0});
    VectorXd u(1);
    u << 3.0;
    const VectorXd next = propagate_nominal(di, Eigen::Vector2d(1, 2), u);
    CHECK(next(0) == doctest::Approx(1.2));
    CHECK(next(1) == doctest::Approx(2.3));

    CHECK_THROWS_AS(propagate_nominal(sys, Eigen::Vector2d(0, 0), VectorXd::Zero(3)),
                    std::invalid_argument);
}

TEST_CASE("feedback_control")
{
    const auto sys = simple2d();
    const Eigen::Vector2d u_nom(0.2, -0.3);
    CHECK((feedback_control(sys, u_nom, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)) - u_nom)
              .norm() < 1e-12);

    // sign convention with K = I
    LinearSystem unit(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                      MatrixXd::Identity(2, 2), 0.01 * MatrixXd::Identity(2, 2),
                      0.01 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 1.0, {0, 1});
    const VectorXd out = feedback_control(unit, Eigen::Vector2d(0, 0), Eigen::Vector2d(0.1, -0.2),
                                          Eigen::Vector2d(0, 0));
    CHECK(out(0) == doctest::Approx(-0.1));
    CHECK(out(1) == doctest::Approx(0.2));

    LinearSystem half(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                      MatrixXd::Identity(2, 2), 0.01 * MatrixXd::Identity(2, 2),
                      0.01 * MatrixXd::Identity(2, 2), 0.5 * MatrixXd::Identity(2, 2), 1.0,
                      {0, 1});
    const VectorXd out2 = feedback_control(half, Eigen::Vector2d(1, 1), Eigen::Vector2d(0.2, 0),
                                           Eigen::Vector2d(0, 0));
    CHECK(out2(0) == doctest::Approx(0.9));
    CHECK(out2(1) == doctest::Approx(1.0));
}

TEST_CASE("LinearSystem validates controllability and observability")
{
    const MatrixXd I = MatrixXd::Identity(2, 2);
    // B = 0 is uncontrollable
    CHECK_THROWS_AS(LinearSystem(I, MatrixXd::Zero(2, 2), I, 0.01 * I, 0.01 * I, I, 1.0, {0, 1}),
                    std::invalid_argument);
    // C = 0 is unobservable
    CHECK_THROWS_AS(LinearSystem(I, I, MatrixXd::Zero(2, 2), 0.01 * I, 0.01 * I, I, 1.0, {0, 1}),
                    std::invalid_argument);
}

TEST_CASE("expected_belief_step noise-free fixed point")
{
    const auto sys = [] {
        const MatrixXd I = MatrixXd::Identity(2, 2);
        return LinearSystem(I, I, I, MatrixXd::Zero(2, 2), 0.01 * I, 0.618 * I, 1.0, {0, 1});
    }();
    auto state = ExpectedBeliefState::initial(MatrixXd::Zero(2, 2));
    for (int k = 0; k < 10; ++k)
    {
        state = expected_belief_step(sys, state);
        CHECK(state.sigma.norm() < 1e-15);
        CHECK(state.lambda.norm() < 1e-15);
        CHECK(state.gamma.norm() < 1e-15);
    }
}

TEST_CASE("expected_belief_step one-step hand computation")
{
    const auto sys = simple2d();
    const auto next = expected_belief_step(sys, ExpectedBeliefState::initial(
                                                    0.01 * MatrixXd::Identity(2, 2)));
    // Sigma- = 0.02 I, L = (2/3) I, Sigma1 = 0.02/3 I, Lambda1 = (2/3)*0.02 I
    CHECK(std::abs(next.sigma(0, 0) - 0.02 / 3.0) < 1e-9);
    CHECK(std::abs(next.lambda(0, 0) - 0.04 / 3.0) < 1e-9);
    CHECK(std::abs(next.gamma(0, 0) - 0.02) < 1e-9);
    CHECK(std::abs(next.sigma(0, 1)) < 1e-12);
    // after the first step from Lambda0 = 0, Gamma1 equals Sigma1^-
    CHECK((next.gamma - (sys.A * (0.01 * MatrixXd::Identity(2, 2)) * sys.A.transpose() + sys.Q))
              .norm() < 1e-9);
}

TEST_CASE("rollout_plan stationary nominal and control sums")
{
    const auto sys = simple2d();
    const GaussianBelief start(Eigen::Vector2d::Zero(), MatrixXd::Zero(2, 2));

    const auto stay = rollout_plan(sys, start, constant_controls(Eigen::Vector2d::Zero(), 15));
    double prev_trace = 0.0;
    for (int k = 0; k <= 15; ++k)
    {
        CHECK(stay.nominal_states[k].norm() < 1e-12);
        const double tr = stay.beliefs[k].gamma.trace();
        if (k > 0)
            CHECK(tr > prev_trace - 1e-12);
        prev_trace = tr;
    }

    const auto fwd = rollout_plan(sys, start, constant_controls(Eigen::Vector2d(0.1, 0), 10));
    CHECK((fwd.nominal_states[10] - Eigen::Vector2d(1, 0)).norm() < 1e-9);
}

TEST_CASE("rollout_plan nominal displacement is control-linear")
{
    const auto sys = simple2d();
    const GaussianBelief start(Eigen::Vector2d(1, 1), 0.001 * MatrixXd::Identity(2, 2));
    std::vector<VectorXd> u;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-0.3, 0.3);
    for (int k = 0; k < 12; ++k)
        u.push_back(Eigen::Vector2d(uni(rng), uni(rng)));
    std::vector<VectorXd> u2;
    for (const auto &c : u)
        u2.push_back(2.0 * c);
    const auto p1 = rollout_plan(sys, start, u);
    const auto p2 = rollout_plan(sys, start, u2);
    const VectorXd d1 = p1.nominal_states.back() - start.mean;
    const VectorXd d2 = p2.nominal_states.back() - start.mean;
    CHECK((d2 - 2.0 * d1).norm() < 1e-9);
}

TEST_CASE("Sigma/Lambda recursion matches joint-covariance oracle")
{
    // oracle: propagate the joint covariance of (x - xnom, xhat - xnom)
    // through the closed loop with the time-varying KF gain
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int trial = 0; trial < 10; ++trial)
    {
        MatrixXd A(2, 2);
        A << 0.9 + 0.05 * uni(rng), uni(rng) * 0.1, uni(rng) * 0.1, 0.9 + 0.05 * uni(rng);
        const MatrixXd B = MatrixXd::Identity(2, 2);
        const MatrixXd C = MatrixXd::Identity(2, 2);
        const MatrixXd Q = (0.01 + 0.005 * std::abs(uni(rng))) * MatrixXd::Identity(2, 2);
        const MatrixXd R = (0.01 + 0.005 * std::abs(uni(rng))) * MatrixXd::Identity(2, 2);
        const MatrixXd K = dlqr_gain(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
        const LinearSystem sys(A, B, C, Q, R, K, 1.0, {0, 1});

        const MatrixXd sigma0 = 0.02 * MatrixXd::Identity(2, 2);
        auto state = ExpectedBeliefState::initial(sigma0);

        // joint blocks: J11 = Cov(e_x), J12 = Cov(e_x, e_h), J22 = Cov(e_h)
        MatrixXd J = MatrixXd::Zero(4, 4);
        J.topLeftCorner(2, 2) = sigma0; // e_h0 = 0, e_x0 ~ N(0, Sigma0)
        MatrixXd sigma_kf = sigma0;

        for (int k = 0; k < 20; ++k)
        {
            state = expected_belief_step(sys, state);

            const MatrixXd sigma_pred = A * sigma_kf * A.transpose() + Q;
            const MatrixXd L =
                sigma_pred * C.transpose() *
                (C * sigma_pred * C.transpose() + R).inverse();
            sigma_kf = sigma_pred - L * C * sigma_pred;

            // e_x' = A e_x - B K e_h + w
            // e_h' = L C e_x' + (I - L C)(A - B K) e_h + L v
            MatrixXd F = MatrixXd::Zero(4, 4);
            const MatrixXd Acl = A - B * K;
            F.topLeftCorner(2, 2) = A;
            F.topRightCorner(2, 2) = -B * K;
            F.bottomLeftCorner(2, 2) = L * C * A;
            F.bottomRightCorner(2, 2) = -L * C * B * K + (MatrixXd::Identity(2, 2) - L * C) * Acl;
            MatrixXd G = MatrixXd::Zero(4, 4); // noise (w, v)
            G.topLeftCorner(2, 2) = MatrixXd::Identity(2, 2);
            G.bottomLeftCorner(2, 2) = L * C;
            G.bottomRightCorner(2, 2) = L;
            MatrixXd N = MatrixXd::Zero(4, 4);
            N.topLeftCorner(2, 2) = Q;
            N.bottomRightCorner(2, 2) = R;
            J = F * J * F.transpose() + G * N * G.transpose();

            const MatrixXd gamma_oracle = J.topLeftCorner(2, 2);
            const MatrixXd lambda_oracle = J.bottomRightCorner(2, 2);
            const MatrixXd sigma_oracle = J.topLeftCorner(2, 2) - J.topRightCorner(2, 2) -
                                          J.bottomLeftCorner(2, 2) + J.bottomRightCorner(2, 2);
            CHECK((state.gamma - gamma_oracle).cwiseAbs().maxCoeff() < 1e-9);
            CHECK((state.lambda - lambda_oracle).cwiseAbs().maxCoeff() < 1e-9);
            CHECK((state.sigma - sigma_oracle).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("Gamma trace converges on the benchmark 2D system")
{
    const auto sys = simple2d();
    auto state = ExpectedBeliefState::initial(0.01 * MatrixXd::Identity(2, 2));
    double tr200 = 0.0, tr201 = 0.0;
    for (int k = 1; k <= 201; ++k)
    {
        state = expected_belief_step(sys, state);
        if (k == 200)
            tr200 = state.gamma.trace();
        if (k == 201)
            tr201 = state.gamma.trace();
    }
    CHECK(std::abs(tr201 - tr200) < 1e-6);
}

TEST_CASE("closed_loop_simulate deterministic limit and per-seed determinism")
{
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const LinearSystem noiseless(I, I, I, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2), 0.618 * I,
                                 1.0, {0, 1});
    const GaussianBelief start(Eigen::Vector2d::Zero(), MatrixXd::Zero(2, 2));
    const auto plan = rollout_plan(noiseless, start, constant_controls(Eigen::Vector2d(0.1, 0.2), 8));
    const auto traj = closed_loop_simulate(noiseless, plan, start.mean, 42);
    for (int k = 0; k <= 8; ++k)
        CHECK((traj[k] - plan.nominal_states[k]).norm() < 1e-12);

    const auto sys = simple2d();
    const GaussianBelief start2(Eigen::Vector2d::Zero(), 0.01 * MatrixXd::Identity(2, 2));
    const auto plan2 = rollout_plan(sys, start2, constant_controls(Eigen::Vector2d(0.1, 0), 10));
    const auto a = closed_loop_simulate(sys, plan2, start2.mean, 99);
    const auto b = closed_loop_simulate(sys, plan2, start2.mean, 99);
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK((a[k] - b[k]).norm() == 0.0);
}

TEST_CASE("Gamma matches Monte Carlo closed-loop dispersion")
{
    const auto sys = simple2d();
    const GaussianBelief start(Eigen::Vector2d::Zero(), 0.01 * MatrixXd::Identity(2, 2));
    const int T = 20;
    const auto plan = rollout_plan(sys, start, constant_controls(Eigen::Vector2d(0.1, 0.05), T));

    const int n_roll = 5000;
    std::mt19937_64 rng(1234);
    const detail::GaussianSampler sample_x0(start.cov);
    std::vector<MatrixXd> acc(T + 1, MatrixXd::Zero(2, 2));
    std::vector<VectorXd> mean_acc(T + 1, VectorXd::Zero(2));
    std::vector<std::vector<VectorXd>> trajs;
    trajs.reserve(n_roll);
    for (int r = 0; r < n_roll; ++r)
    {
        const VectorXd x0 = start.mean + sample_x0(rng);
        trajs.push_back(closed_loop_simulate(sys, plan, x0, 10000 + r));
    }
    for (int k = 0; k <= T; ++k)
    {
        MatrixXd cov = MatrixXd::Zero(2, 2);
        for (const auto &t : trajs)
        {
            const VectorXd d = t[k] - plan.nominal_states[k];
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(n_roll);
        const MatrixXd gamma = plan.beliefs[k].gamma;
        if (k > 0)
            CHECK((cov - gamma).norm() / gamma.norm() < 0.10);
    }

    // empirical mean tracks the nominal within 3 standard errors
    for (int k = 1; k <= T; ++k)
    {
        VectorXd mean = VectorXd::Zero(2);
        for (const auto &t : trajs)
            mean += t[k];
        mean /= static_cast<double>(n_roll);
        const double se = std::sqrt(plan.beliefs[k].gamma(0, 0) / n_roll);
        CHECK((mean - plan.nominal_states[k]).cwiseAbs().maxCoeff() < 3.5 * se);
    }
}

TEST_CASE("dlqr gain for the unit system is the golden-ratio gain")
{
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const MatrixXd K = dlqr_gain(I, I, I, I);
    CHECK(K(0, 0) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-9));
    CHECK(std::abs(K(0, 1)) < 1e-9);
}

TEST_CASE("unicycle linearization")
{
    const auto model = make_unicycle_system(0.2, 0.05, 0.05);
    VectorXd s(4);
    s << 0, 0, 0, 1; // at origin, heading +x, speed 1
    const VectorXd z = UnicycleModel::to_linear(s);
    CHECK((z - (VectorXd(4) << 0, 0, 1, 0).finished()).norm() < 1e-12);

    // zero linearized input keeps motion along +x
    VectorXd x = z;
    for (int k = 0; k < 10; ++k)
    {
        x = propagate_nominal(model.sys, x, VectorXd::Zero(2));
        CHECK(std::abs(x(1)) < 1e-12);
        CHECK(std::abs(x(3)) < 1e-12);
        CHECK(x(0) > 0.0);
    }

    // state map round trip for v > 0
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    std::uniform_real_distribution<double> vel(0.05, 2.0);
    for (int trial = 0; trial < 1000; ++trial)
    {
        VectorXd u4(4);
        u4 << uni(rng), uni(rng), uni(rng), vel(rng);
        const VectorXd back = UnicycleModel::from_linear(UnicycleModel::to_linear(u4));
        CHECK(std::abs(back(0) - u4(0)) < 1e-9);
        CHECK(std::abs(back(1) - u4(1)) < 1e-9);
        CHECK(std::abs(std::remainder(back(2) - u4(2), 2 * M_PI)) < 1e-9);
        CHECK(std::abs(back(3) - u4(3)) < 1e-9);
    }

    // input map round trip and the v = 0 singularity
    VectorXd input(2);
    input << 0.3, -0.2;
    const VectorXd w = UnicycleModel::input_to_linear(s, input);
    const VectorXd input_back = UnicycleModel::input_from_linear(s, w);
    CHECK((input_back - input).norm() < 1e-12);
    VectorXd stopped(4);
    stopped << 0, 0, 0, 0;
    CHECK_THROWS_AS(UnicycleModel::input_from_linear(stopped, w), std::domain_error);
}
