#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace folia;
using oracle::max_slot_distance;
using oracle::pauli_z;

namespace {

DirectIntegralState random_history(const TimeGrid& grid, int dim, std::uint64_t seed) {
    std::vector<AuxState> slots;
    for (int k = 0; k < grid.size(); ++k) {
        AuxState raw = random_state(dim, seed + static_cast<std::uint64_t>(k));
        slots.push_back(AuxState(raw.entries() / raw.norm()));
    }
    return DirectIntegralState(grid, std::move(slots));
}

// slots e^{−iω t_k}·v on a grid whose span is commensurate with ω
DirectIntegralState phase_history(const TimeGrid& grid, const AuxState& v, double omega) {
    std::vector<AuxState> slots;
    for (int k = 0; k < grid.size(); ++k) {
        slots.push_back(AuxState(std::exp(Complex(0, -omega * grid.time(k))) * v.entries()));
    }
    return DirectIntegralState(grid, std::move(slots));
}

} // namespace

TEST_CASE("TimeGrid", "[direct_integral]") {
    const TimeGrid grid(1.0, 4, 2.0);
    CHECK(grid.dt() == Catch::Approx(0.5));
    CHECK(grid.time(0) == Catch::Approx(1.0));
    CHECK(grid.time(3) == Catch::Approx(2.5));
    CHECK_THROWS_AS(TimeGrid(0.0, 0, 1.0), InvalidInput);
    CHECK_THROWS_AS(TimeGrid(0.0, 3, -1.0), InvalidInput);
}

TEST_CASE("integral_inner_product", "[direct_integral]") {
    const TimeGrid grid(0.0, 2, 1.0); // dt = 0.5
    const AuxState e0 = AuxState::basis(2, 0);
    const AuxState e1 = AuxState::basis(2, 1);

    SECTION("unit slots integrate to the total span") {
        const auto phi = DirectIntegralState::constant(TimeGrid(0.0, 5, 2.5), e0);
        CHECK(std::abs(integral_inner_product(phi, phi) - Complex(2.5, 0)) < 1e-12);
    }

    SECTION("slotwise-orthogonal states give zero") {
        const auto phi = DirectIntegralState::constant(grid, e0);
        const auto xi = DirectIntegralState::constant(grid, e1);
        CHECK(std::abs(integral_inner_product(phi, xi)) < 1e-15);
    }

    SECTION("two-term hand sum") {
        // overlaps 1 and i at dt = 0.5 → 0.5·(1 + i)
        const auto phi = DirectIntegralState(grid, {e0, e0});
        const auto xi = DirectIntegralState(grid, {e0, AuxState(Complex(0, 1) * e0.entries())});
        CHECK(std::abs(integral_inner_product(phi, xi) - Complex(0.5, 0.5)) < 1e-15);
    }

    SECTION("grid mismatch is rejected") {
        const auto phi = DirectIntegralState::constant(grid, e0);
        const auto xi = DirectIntegralState::constant(TimeGrid(0.0, 2, 2.0), e0);
        CHECK_THROWS_AS(integral_inner_product(phi, xi), InvalidInput);
    }
}

TEST_CASE("history_inner_product", "[direct_integral]") {
    const AuxState e0 = AuxState::basis(2, 0);

    SECTION("identical unit slots give one") {
        const auto phi = DirectIntegralState::constant(TimeGrid(0.0, 7, 1.0), e0);
        CHECK(std::abs(history_inner_product(phi, phi) - Complex(1, 0)) < 1e-14);
    }

    SECTION("one orthogonal slot annihilates the product") {
        const TimeGrid grid(0.0, 3, 1.0);
        const AuxState e1 = AuxState::basis(2, 1);
        const auto phi = DirectIntegralState(grid, {e0, e0, e0});
        const auto xi = DirectIntegralState(grid, {e0, e1, e0});
        CHECK(std::abs(history_inner_product(phi, xi)) < 1e-15);
    }

    SECTION("per-slot overlaps multiply") {
        const TimeGrid grid(0.0, 3, 1.0);
        const double half = 0.5;
        Vector tilted(2);
        tilted << half, std::sqrt(1.0 - half * half);
        const auto phi = DirectIntegralState::constant(grid, e0);
        const auto xi = DirectIntegralState::constant(grid, AuxState(tilted));
        CHECK(std::abs(history_inner_product(phi, xi) - Complex(0.125, 0)) < 1e-14);
    }

    SECTION("self product equals the product of slot norms") {
        const TimeGrid grid(0.0, 4, 1.0);
        const auto phi = random_history(grid, 3, 50);
        double expected = 1.0;
        for (int k = 0; k < 4; ++k) expected *= phi.slot(k).norm_squared();
        const Complex self = history_inner_product(phi, phi);
        CHECK(std::abs(self.imag()) < 1e-12);
        CHECK(self.real() >= 0.0);
        CHECK(std::abs(self.real() - expected) < 1e-12);
    }
}

TEST_CASE("evolve_step", "[direct_integral]") {
    const TimeGrid grid(0.0, 4, 2.0);
    const auto phi = random_history(grid, 2, 7);

    SECTION("zero generator in cyclic mode is a pure shift") {
        const auto gen = GeneratorSpec::zero(2, 4);
        const auto shifted = evolve_step(phi, gen, 1, Boundary::Cyclic);
        for (int k = 0; k < 4; ++k) {
            CHECK((shifted.slot((k + 1) % 4).entries() - phi.slot(k).entries()).norm() <
                  1e-15);
        }
    }

    SECTION("m = 0 is the identity") {
        const auto gen = GeneratorSpec::constant(random_hermitian(2, 3), 4);
        CHECK(max_slot_distance(evolve_step(phi, gen, 0, Boundary::Cyclic), phi) < 1e-15);
    }

    SECTION("negative m is rejected") {
        const auto gen = GeneratorSpec::zero(2, 4);
        CHECK_THROWS_AS(evolve_step(phi, gen, -1, Boundary::Cyclic), InvalidInput);
    }

    SECTION("relabel mode with sigma_z multiplies slots by diagonal phases") {
        const auto gen = GeneratorSpec::constant(HermitianOperator(pauli_z()), 4);
        const auto evolved = evolve_step(phi, gen, 1, Boundary::Relabel);
        const double dt = grid.dt();
        for (int k = 0; k < 4; ++k) {
            Vector expected(2);
            expected << std::exp(Complex(0, -dt)) * phi.slot(k)[0],
                std::exp(Complex(0, dt)) * phi.slot(k)[1];
            CHECK((evolved.slot(k).entries() - expected).norm() < 1e-13);
        }
    }

    SECTION("relabel m = 1 equals per-slot exponential application") {
        const auto gen = GeneratorSpec::constant(random_hermitian(2, 11), 4);
        const auto evolved = evolve_step(phi, gen, 1, Boundary::Relabel);
        for (int k = 0; k < 4; ++k) {
            const Vector direct =
                hermitian_exponential(gen.at(k), grid.dt()).entries() * phi.slot(k).entries();
            CHECK((evolved.slot(k).entries() - direct).norm() < 1e-14);
        }
    }

    SECTION("group law in cyclic mode, time-independent generator") {
        const auto gen = GeneratorSpec::constant(random_hermitian(2, 13), 4);
        const auto split = evolve_step(evolve_step(phi, gen, 1, Boundary::Cyclic), gen, 2,
                                       Boundary::Cyclic);
        const auto direct = evolve_step(phi, gen, 3, Boundary::Cyclic);
        CHECK(max_slot_distance(split, direct) < 1e-9);
    }

    SECTION("cyclic norm preservation") {
        const auto gen = GeneratorSpec::constant(random_hermitian(2, 17), 4);
        const auto evolved = evolve_step(phi, gen, 2, Boundary::Cyclic);
        const double before = std::real(integral_inner_product(phi, phi));
        const double after = std::real(integral_inner_product(evolved, evolved));
        CHECK(std::abs(after - before) < 1e-9);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(evolved.slot(k).norm() - 1.0) < 1e-10);
        }
    }

    SECTION("time-dependent generator steps through intermediate slot times") {
        std::vector<HermitianOperator> per_slot;
        for (int k = 0; k < 4; ++k) {
            per_slot.push_back(HermitianOperator(static_cast<double>(k) * pauli_z()));
        }
        const GeneratorSpec gen(per_slot);
        const double dt = grid.dt();
        const auto evolved = evolve_step(phi, gen, 2, Boundary::Cyclic);
        for (int k = 0; k < 4; ++k) {
            const Vector expected =
                hermitian_exponential(gen.at((k + 1) % 4), dt).entries() *
                (hermitian_exponential(gen.at(k), dt).entries() * phi.slot(k).entries());
            CHECK((evolved.slot((k + 2) % 4).entries() - expected).norm() < 1e-13);
        }
    }
}

TEST_CASE("apply_generator", "[direct_integral]") {
    const int n = 16;
    const TimeGrid grid(0.0, n, 2.0 * M_PI); // commensurate with integer ω
    const AuxState v = AuxState::basis(2, 0);

    SECTION("constant slots with zero Hamiltonian map to zero") {
        const auto phi = DirectIntegralState::constant(grid, v);
        const auto out = apply_generator(phi, GeneratorSpec::zero(2, n), Stencil::Forward);
        for (int k = 0; k < n; ++k) CHECK(out.slot(k).norm() < 1e-14);
    }

    SECTION("forward stencil recovers −i∂_t of a phase wave to O(dt)") {
        const double omega = 1.0;
        const auto phi = phase_history(grid, v, omega);
        const auto out = apply_generator(phi, GeneratorSpec::zero(2, n), Stencil::Forward);
        // K φ = −i∂_t φ → −ω φ for this wave
        double worst = 0.0;
        for (int k = 0; k < n; ++k) {
            worst = std::max(
                worst, (out.slot(k).entries() + omega * phi.slot(k).entries()).norm());
        }
        CHECK(worst < 1.1 * omega * omega * grid.dt()); // first-order truncation
    }

    SECTION("Schroedinger-stationary wave sits in the kernel up to O(dt)") {
        const double omega = 1.0;
        const auto phi = phase_history(grid, v, omega);
        const auto gen =
            GeneratorSpec::constant(HermitianOperator(omega * Matrix::Identity(2, 2)), n);
        const auto out = apply_generator(phi, gen, Stencil::Forward);
        double worst = 0.0;
        for (int k = 0; k < n; ++k) worst = std::max(worst, out.slot(k).norm());
        CHECK(worst < omega * omega * grid.dt());
    }

    SECTION("central stencil needs three slots") {
        const auto tiny = DirectIntegralState::constant(TimeGrid(0.0, 2, 1.0), v);
        CHECK_THROWS_AS(apply_generator(tiny, GeneratorSpec::zero(2, 2), Stencil::Central),
                        InvalidInput);
    }
}

TEST_CASE("generator_relation_check", "[direct_integral]") {
    SECTION("zero generator on constant slots has zero residual") {
        const TimeGrid grid(0.0, 8, 1.0);
        const auto phi = DirectIntegralState::constant(grid, AuxState::basis(2, 0));
        CHECK(generator_relation_check(phi, GeneratorSpec::zero(2, 8), 0.01) < 1e-10);
    }

    SECTION("residual is first order in dtau") {
        const TimeGrid grid(0.0, 12, 2.0 * M_PI);
        const auto phi = phase_history(grid, AuxState::basis(2, 0), 1.0);
        const auto gen = GeneratorSpec::constant(random_hermitian(2, 19), 12);
        const double r0 = generator_relation_check(phi, gen, 0.02);
        const double r1 = generator_relation_check(phi, gen, 0.01);
        const double r2 = generator_relation_check(phi, gen, 0.005);
        CHECK(r1 <= 0.6 * r0);
        CHECK(r2 <= 0.6 * r1);
    }

    SECTION("Schroedinger-generated path has small residual") {
        const int n = 32;
        const TimeGrid grid(0.0, n, 1.0);
        const auto h = random_hermitian(2, 23);
        const auto gen = GeneratorSpec::constant(h, n);
        const auto phi = make_schroedinger_path(AuxState::basis(2, 0), gen, grid);
        const double dtau = 1e-3;
        const double residual = generator_relation_check(phi, gen, dtau);
        const double scale = h.entries().norm();
        // combined truncation orders: O(dtau) from the step, O(dt) from the stencil
        CHECK(residual < 4.0 * scale * scale * (dtau + grid.dt()));
    }
}
