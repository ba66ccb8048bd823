#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mff/ensemble.hpp"
#include "mff/parallel.hpp"
#include "oracles.hpp"

using namespace mff;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kAlpha = 1.766;

double teacher_norm_sq_formula(int d, double alpha) {
    // (1/4)(2 K(0) + 2 K(alpha)) expanded
    return (kPi + std::sin(alpha) + (kPi - alpha) * std::cos(alpha)) / (4.0 * (d + 1) * kPi);
}
}  // namespace

TEST_CASE("init_ensemble schemes") {
    Rng rng(1);
    const Ensemble zero = init_ensemble(4, 6, CInitScheme::zero(), rng);
    for (const Neuron& n : zero.neurons()) CHECK(n.c == 0.0);

    Rng rng2(2);
    const Ensemble teacher = init_ensemble(2, 16, CInitScheme::constant(1.0), rng2);
    CHECK(teacher.width() == 2);
    for (const Neuron& n : teacher.neurons()) CHECK(n.c == 1.0);

    CHECK_THROWS_AS(init_ensemble(0, 6, CInitScheme::zero(), rng), std::invalid_argument);
}

TEST_CASE("init_ensemble gaussian weights have vanishing mean") {
    Rng rng(3);
    const std::size_t m = 10000;
    const Ensemble e = init_ensemble(m, 4, CInitScheme::gaussian(), rng);
    double mean = 0.0;
    for (const Neuron& n : e.neurons()) mean += n.c;
    mean /= static_cast<double>(m);
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("evaluate special cases") {
    Rng rng(5);
    const int d = 16;
    const Ensemble zero = init_ensemble(8, d, CInitScheme::zero(), rng);
    for (int rep = 0; rep < 5; ++rep)
        CHECK(evaluate(zero, sample_uniform_sphere(d, rng)) == 0.0);

    const UnitVector x = sample_uniform_sphere(d, rng);
    const Ensemble single({Neuron{1.0, x.coords()}}, d);
    CHECK(evaluate(single, x) == doctest::Approx(1.0).epsilon(1e-14));

    // two-neuron teacher with angle 1.766 evaluated at its first feature:
    // cos(1.766) < 0 so only the aligned neuron fires
    const Ensemble teacher = make_fixed_angle_teacher(d, kAlpha);
    CHECK(evaluate(teacher, UnitVector(teacher.neuron(0).z)) ==
          doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("evaluate is exactly homogeneous in the outer weights") {
    Rng rng(7);
    const int d = 8;
    const Ensemble e = init_ensemble(12, d, CInitScheme::gaussian(), rng);
    std::vector<Neuron> scaled = e.neurons();
    for (Neuron& n : scaled) n.c *= 2.0;  // power of two: exact in floating point
    const Ensemble e2(std::move(scaled), d);
    for (int rep = 0; rep < 10; ++rep) {
        const UnitVector x = sample_uniform_sphere(d, rng);
        CHECK(evaluate(e2, x) == 2.0 * evaluate(e, x));
    }
}

TEST_CASE("q_norm values") {
    const Ensemble teacher = make_fixed_angle_teacher(16, kAlpha);
    CHECK(q_norm(teacher, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(q_norm(teacher, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

    Rng rng(9);
    const Ensemble zero = init_ensemble(5, 4, CInitScheme::zero(), rng);
    CHECK(q_norm(zero, 1.0) == 0.0);
    CHECK(q_norm(zero, 0.5) == 0.0);
    CHECK_THROWS_AS(q_norm(zero, 0.0), std::invalid_argument);
}

TEST_CASE("q_norm Cauchy-Schwarz direction") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Ensemble e = init_ensemble(16, 4, CInitScheme::gaussian(), rng);
        CHECK(q_norm(e, 2.0) >= q_norm(e, 1.0) * q_norm(e, 1.0) - 1e-12);
    }
}

TEST_CASE("population_inner teacher value matches the kernel expansion") {
    const int d = 16;
    const Ensemble teacher = make_fixed_angle_teacher(d, kAlpha);
    const double expect = teacher_norm_sq_formula(d, kAlpha);
    CHECK(population_inner(teacher, teacher) == doctest::Approx(expect).epsilon(1e-13));
    // numeric value of the expansion in this setup
    CHECK(expect == doctest::Approx(0.01804902324169879).epsilon(1e-12));
}

TEST_CASE("population_inner of a zero ensemble vanishes") {
    Rng rng(13);
    const int d = 6;
    const Ensemble zero = init_ensemble(4, d, CInitScheme::zero(), rng);
    const Ensemble other = init_ensemble(7, d, CInitScheme::gaussian(), rng);
    CHECK(population_inner(zero, other) == 0.0);
    CHECK(population_inner(zero, zero) == 0.0);
}

TEST_CASE("population_inner agrees with the spherical MC oracle") {
    const int d = 8;
    Rng rng(17);
    const Ensemble a = init_ensemble(6, d, CInitScheme::gaussian(), rng);
    const Ensemble b = init_ensemble(5, d, CInitScheme::gaussian(), rng);
    const double closed = population_inner(a, b);
    const McEstimate mc = mc_spherical_integral(
        [&](const UnitVector& x) { return evaluate(a, x) * evaluate(b, x); }, d, 100000, rng);
    CHECK(std::fabs(mc.estimate - closed) <= 4.0 * mc.stderr_est);
}

TEST_CASE("population_inner symmetry, bilinearity, positivity") {
    Rng rng(19);
    const int d = 5;
    for (int rep = 0; rep < 10; ++rep) {
        const Ensemble a = init_ensemble(6, d, CInitScheme::gaussian(), rng);
        const Ensemble b = init_ensemble(4, d, CInitScheme::gaussian(), rng);
        CHECK(population_inner(a, b) == doctest::Approx(population_inner(b, a)).epsilon(1e-12));
        CHECK(population_inner(a, a) >= -1e-12);

        std::vector<Neuron> doubled = a.neurons();
        for (Neuron& n : doubled) n.c *= 2.0;
        const Ensemble a2(std::move(doubled), d);
        CHECK(population_inner(a2, b) ==
              doctest::Approx(2.0 * population_inner(a, b)).epsilon(1e-13));
    }
}

TEST_CASE("population_inner is bit-stable across thread counts") {
    Rng rng(41);
    const int d = 10;
    const Ensemble a = init_ensemble(300, d, CInitScheme::gaussian(), rng);
    const Ensemble b = init_ensemble(170, d, CInitScheme::gaussian(), rng);
    mff::par::set_thread_count(1);
    const double serial = population_inner(a, b);
    const double self_serial = population_inner(a, a);
    mff::par::set_thread_count(4);
    CHECK(population_inner(a, b) == serial);
    CHECK(population_inner(a, a) == self_serial);
    mff::par::set_thread_count(2);
}

TEST_CASE("population_inner rejects modes without a closed form") {
    Rng rng(23);
    const Ensemble tanh_e = init_ensemble(3, 4, CInitScheme::gaussian(), rng,
                                          Activation::tanh_act, ParamMode::euclidean);
    const Ensemble relu_e = init_ensemble(3, 4, CInitScheme::gaussian(), rng);
    CHECK_THROWS_AS(population_inner(tanh_e, tanh_e), std::invalid_argument);
    CHECK_THROWS_AS(population_inner(relu_e, tanh_e), std::invalid_argument);
}

TEST_CASE("population_inner with targets") {
    const int d = 16;
    const Target circle = Target::great_circle(d);
    const Target zero = Target::zero(d);
    const Ensemble teacher_e = make_fixed_angle_teacher(d, kAlpha);
    const Target teacher = Target::teacher(teacher_e);

    CHECK(population_inner(zero, teacher) == 0.0);
    CHECK(population_inner(circle, circle) ==
          doctest::Approx(2.0 / ((d + 1) * kPi * kPi)).epsilon(1e-10));
    CHECK(population_inner(teacher, teacher) ==
          doctest::Approx(population_inner(teacher_e, teacher_e)).epsilon(1e-13));
    // ensemble against the circle measure: per-neuron circle potentials
    CHECK(population_inner(teacher_e, circle) ==
          doctest::Approx(great_circle_potential(UnitVector(teacher_e.neuron(0).z), d) * 0.5 +
                          great_circle_potential(UnitVector(teacher_e.neuron(1).z), d) * 0.5)
              .epsilon(1e-12));
}

TEST_CASE("population_l2_error cases") {
    const int d = 16;
    const Ensemble teacher_e = make_fixed_angle_teacher(d, kAlpha);
    const Target teacher = Target::teacher(teacher_e);
    CHECK(population_l2_error(teacher_e, teacher) == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(29);
    const Ensemble zero = init_ensemble(3, d, CInitScheme::zero(), rng);
    CHECK(population_l2_error(zero, teacher) ==
          doctest::Approx(teacher_norm_sq_formula(d, kAlpha)).epsilon(1e-13));

    const int d2 = 8;
    const Ensemble e = init_ensemble(5, d2, CInitScheme::gaussian(), rng);
    const Ensemble t = init_ensemble(2, d2, CInitScheme::constant(1.0), rng);
    const Target tt = Target::teacher(t);
    const double closed = population_l2_error(e, tt);
    CHECK(closed >= 0.0);
    const McEstimate mc = mc_spherical_integral(
        [&](const UnitVector& x) {
            const double r = evaluate(e, x) - evaluate(t, x);
            return r * r;
        },
        d2, 100000, rng);
    CHECK(std::fabs(mc.estimate - closed) <= 4.0 * mc.stderr_est);
}

TEST_CASE("great-circle target values") {
    const int d = 9;
    const Target circle = Target::great_circle(d);
    Rng rng(31);
    const UnitVector x = sample_uniform_sphere(d, rng);
    CHECK(circle.value(x) == doctest::Approx(std::sqrt(x[0] * x[0] + x[1] * x[1]) / kPi));
    CHECK(Target::zero(d).value(x) == 0.0);
}

TEST_CASE("ensemble CSV round trip is bit exact") {
    Rng rng(37);
    const Ensemble e = init_ensemble(17, 6, CInitScheme::gaussian(), rng);
    std::stringstream ss;
    write_ensemble_csv(ss, e);
    const Ensemble back = read_ensemble_csv(ss);
    REQUIRE(back.width() == e.width());
    CHECK(back.d() == e.d());
    for (std::size_t i = 0; i < e.width(); ++i) {
        CHECK(back.neuron(i).c == e.neuron(i).c);
        for (std::size_t k = 0; k < e.neuron(i).z.size(); ++k)
            CHECK(back.neuron(i).z[k] == e.neuron(i).z[k]);
    }
}

TEST_CASE("ensemble CSV error paths") {
    std::stringstream empty;
    CHECK_THROWS_AS(read_ensemble_csv(empty), std::runtime_error);
    std::stringstream bad("x,y,z\n1,2,3\n");
    CHECK_THROWS_AS(read_ensemble_csv(bad), std::runtime_error);
}

TEST_CASE("ensemble constructor contracts") {
    CHECK_THROWS_AS(Ensemble({}, 4), std::invalid_argument);
    // relu requires sphere mode
    CHECK_THROWS_AS(Ensemble({Neuron{1.0, {1.0, 0.0, 0.0}}}, 2, Activation::relu,
                             ParamMode::euclidean),
                    std::invalid_argument);
    // off-sphere feature rejected in sphere mode
    CHECK_THROWS_AS(Ensemble({Neuron{1.0, {2.0, 0.0, 0.0}}}, 2), std::invalid_argument);
    // tanh euclidean accepts unnormalized features
    const Ensemble ok({Neuron{1.0, {2.0, 0.0, 0.0}}}, 2, Activation::tanh_act,
                      ParamMode::euclidean);
    CHECK(ok.width() == 1);
}
