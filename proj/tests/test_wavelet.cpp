#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dualclass/random.hpp"
#include "dualclass/wavelet.hpp"
#include "oracles.hpp"

using namespace dualclass;
using std::numbers::pi;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) {
        v = rng.normal();
    }
    return x;
}

std::vector<double> wave(std::size_t n, double period, double shift = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = std::cos(2.0 * pi * (static_cast<double>(t) - shift) / period);
    }
    return x;
}

std::size_t nearest_period(const ScaleGrid& g, double period) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < g.size(); ++j) {
        if (std::fabs(std::log(g.periods()[j] / period)) < std::fabs(std::log(g.periods()[best] / period))) {
            best = j;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("morlet mother") {
    const auto z = morlet_mother(0.0);
    CHECK(z.real() == doctest::Approx(0.7511255444649425).epsilon(1e-14));
    CHECK(z.imag() == 0.0);
    CHECK(std::abs(morlet_mother(10.0)) < 1e-20);
    CHECK(std::abs(morlet_mother(-10.0)) < 1e-20);

    const double h = 1e-3;
    double energy = 0.0;
    for (int k = -8000; k <= 8000; ++k) {
        energy += std::norm(morlet_mother(k * h)) * h;
    }
    CHECK(std::fabs(energy - 1.0) < 1e-6);

    CHECK(MorletSpec{}.fourier_factor() == doctest::Approx(1.0330436477492537));
    CHECK_THROWS(MorletSpec{4.0}.validate());
}

TEST_CASE("scale grid") {
    const ScaleGrid g(2.0, 0.25, 9);
    CHECK(g.size() == 9);
    CHECK(g.scales().front() == 2.0);
    CHECK(g.scales().back() == doctest::Approx(8.0));
    CHECK(g.periods()[4] == doctest::Approx(4.0 * MorletSpec{}.fourier_factor()));
    const auto auto_grid = ScaleGrid::for_length(1024);
    CHECK(auto_grid.dj() == doctest::Approx(1.0 / 12.0));
    CHECK(auto_grid.periods().back() >= 1024.0 / 3.0);
    CHECK(auto_grid.periods()[auto_grid.size() - 2] < 1024.0 / 3.0);
    CHECK_THROWS(ScaleGrid(0.0, 0.1, 3));
}

TEST_CASE("cwt of zeros is zero") {
    const auto w = cwt(std::vector<double>(64, 0.0), ScaleGrid(2.0, 0.25, 12));
    for (auto z : w.values.values()) {
        CHECK(z == std::complex<double>(0.0, 0.0));
    }
}

TEST_CASE("cwt matches direct summation everywhere") {
    const auto x = noise(128, 3);
    const ScaleGrid grid(2.0, 0.25, 24);
    const auto fast = cwt(x, grid);
    const auto slow = oracle::cwt(x, grid.scales());
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t t = 0; t < x.size(); ++t) {
            worst = std::max(worst, std::abs(fast.values(j, t) - slow[j][t]));
        }
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("cwt of a period-32 cosine peaks at period 32") {
    const auto x = wave(512, 32.0);
    const auto grid = ScaleGrid::for_length(512);
    const auto w = cwt(x, grid);
    const auto ref = oracle::cwt(x, grid.scales());
    std::size_t best = 0;
    std::size_t best_ref = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (std::abs(w.values(j, 256)) > std::abs(w.values(best, 256))) {
            best = j;
        }
        if (std::abs(ref[j][256]) > std::abs(ref[best_ref][256])) {
            best_ref = j;
        }
    }
    CHECK(best == best_ref);
    CHECK(best == nearest_period(grid, 32.0));
}

TEST_CASE("cross wavelet") {
    const auto grid = ScaleGrid(2.0, 0.25, 16);
    const auto a = cwt(noise(100, 1), grid);
    const auto b = cwt(noise(100, 2), grid);
    const auto aa = cross_wavelet(a, a);
    for (std::size_t i = 0; i < aa.values.values().size(); ++i) {
        CHECK(aa.values.values()[i].imag() == 0.0);
        CHECK(aa.values.values()[i].real() == doctest::Approx(std::norm(a.values.values()[i])));
    }
    const auto ab = cross_wavelet(a, b);
    const auto ba = cross_wavelet(b, a);
    for (std::size_t i = 0; i < ab.values.values().size(); ++i) {
        CHECK(ab.values.values()[i] == std::conj(ba.values.values()[i]));
    }
    const auto z = cross_wavelet(a, cwt(std::vector<double>(100, 0.0), grid));
    for (auto v : z.values.values()) {
        CHECK(std::abs(v) == 0.0);
    }
}

TEST_CASE("smoothing") {
    const std::size_t n = 512;
    const ScaleGrid grid(2.0, 1.0 / 12.0, 30);

    const RealGrid constant(grid.size(), n, 2.5);
    const auto sc = smooth(constant, grid);
    for (double v : sc.values()) {
        CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    }

    RealGrid spike(grid.size(), n, 0.0);
    spike(15, 256) = 1.0;
    double mass = 0.0;
    const auto spread = smooth(spike, grid);
    for (double v : spread.values()) {
        mass += v;
    }
    CHECK(std::fabs(mass - 1.0) < 1e-10);

    Rng rng(5);
    RealGrid a(grid.size(), n);
    RealGrid b(grid.size(), n);
    RealGrid mix(grid.size(), n);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        a.values()[i] = rng.normal();
        b.values()[i] = rng.normal();
        mix.values()[i] = 1.7 * a.values()[i] - 0.4 * b.values()[i];
    }
    const auto sa = smooth(a, grid);
    const auto sb = smooth(b, grid);
    const auto sm = smooth(mix, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < sm.values().size(); ++i) {
        worst = std::max(worst, std::fabs(sm.values()[i] - (1.7 * sa.values()[i] - 0.4 * sb.values()[i])));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("coherence properties") {
    const std::size_t n = 256;
    const auto grid = ScaleGrid::for_length(n);
    const auto x = noise(n, 7);
    const auto y = noise(n, 8);
    const auto wx = cwt(x, grid);
    const auto wy = cwt(y, grid);

    const auto self = coherence(wx, wx);
    for (double v : self.rho2.values()) {
        CHECK(std::fabs(v - 1.0) < 1e-6);
    }
    for (std::size_t i = 0; i < self.phase.values().size(); ++i) {
        CHECK(std::fabs(self.phase.values()[i]) < 1e-9);
    }

    const auto xy = coherence(wx, wy);
    const auto yx = coherence(wy, wx);
    std::vector<double> scaled(x);
    std::vector<double> shifted(y);
    for (std::size_t t = 0; t < n; ++t) {
        scaled[t] *= -3.0;
        shifted[t] += 42.0;
    }
    const auto neg = coherence(cwt(scaled, grid), cwt(shifted, grid));
    for (std::size_t i = 0; i < xy.rho2.values().size(); ++i) {
        const double r = xy.rho2.values()[i];
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        CHECK(r == doctest::Approx(yx.rho2.values()[i]).epsilon(1e-12));
        CHECK(r == doctest::Approx(neg.rho2.values()[i]).epsilon(1e-9));
        const double p = xy.phase.values()[i];
        CHECK(p > -pi);
        CHECK(p <= pi);
        if (std::fabs(std::fabs(p) - pi) > 1e-9) {
            CHECK(p == doctest::Approx(-yx.phase.values()[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("independent white noise has low mean coherence") {
    const std::size_t n = 1024;
    const auto grid = ScaleGrid::for_length(n);
    CoherenceEngine engine(n, grid);
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto r = engine.rho2(noise(n, 100 + 2 * rep), noise(n, 101 + 2 * rep));
        double mean = 0.0;
        for (double v : r.values()) {
            mean += v;
        }
        total += mean / static_cast<double>(r.values().size());
    }
    CHECK(total / 20.0 < 0.5);
}

TEST_CASE("phase conventions") {
    const std::size_t n = 512;
    const auto grid = ScaleGrid::for_length(n);
    const auto f = wave(n, 32.0);
    const auto g = wave(n, 32.0, 8.0);  // sin(2 pi t / 32)
    const auto same = coherence(cwt(f, grid), cwt(f, grid));
    const auto lead = coherence(cwt(f, grid), cwt(g, grid));
    const std::size_t j = nearest_period(grid, 32.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (same.inside_coi(j, t)) {
            CHECK(std::fabs(same.phase(j, t)) < 1e-9);
            CHECK(std::fabs(lead.phase(j, t) - pi / 2.0) < 0.1);
        }
    }

    ComplexGrid z(1, 3);
    z(0, 0) = {0.0, 0.0};
    z(0, 1) = {-1.0, 0.0};
    z(0, 2) = {0.0, 2.0};
    const auto ph = phase_field(z);
    CHECK(ph.angle(0, 0) == 0.0);
    CHECK(ph.indeterminate(0, 0) == 1);
    CHECK(ph.angle(0, 1) == doctest::Approx(pi));
    CHECK(ph.angle(0, 2) == doctest::Approx(pi / 2.0));
    CHECK(ph.indeterminate(0, 2) == 0);
}

TEST_CASE("ar1 fit") {
    CHECK(std::fabs(fit_ar1(noise(10000, 21)).phi) < 0.03);
    Rng rng(22);
    const auto x = simulate_ar1({0.7, 1.0, 0.0}, 10000, rng);
    const auto fit = fit_ar1(x);
    CHECK(fit.phi == doctest::Approx(0.7).epsilon(0.03 / 0.7));
    CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS_AS(fit_ar1(std::vector<double>(50, 3.0)), std::domain_error);
}

TEST_CASE("cone of influence") {
    const std::size_t n = 512;
    const auto grid = ScaleGrid::for_length(n);
    const auto coi = cone_of_influence(n, grid);
    CHECK(coi.front() == 0.0);
    CHECK(coi.back() == 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        CHECK(coi[t] == coi[n - 1 - t]);
    }
    CHECK(coi[255] == doctest::Approx(MorletSpec{}.fourier_factor() / std::sqrt(2.0) * 255.0));
}

TEST_CASE("significance") {
    const std::size_t n = 128;
    const auto grid = ScaleGrid::for_length(n);
    const auto x = noise(n, 31);
    const auto y = noise(n, 32);
    MonteCarloSpec mc;
    mc.iterations = 60;
    mc.seed = 9;
    mc.threads = 1;
    const auto one = significance(x, y, grid, {}, mc);
    mc.threads = 3;
    const auto three = significance(x, y, grid, {}, mc);
    CHECK(one.significant == three.significant);
    CHECK(one.threshold == three.threshold);
    mc.seed = 10;
    CHECK_FALSE(significance(x, y, grid, {}, mc).threshold == one.threshold);

    mc.seed = 9;
    const auto self = significance(x, x, grid, {}, mc);
    const auto field = coherence(cwt(x, grid), cwt(x, grid));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t t = 0; t < n; ++t) {
            if (field.inside_coi(j, t)) {
                CHECK(self.significant(j, t) == 1);
            }
        }
    }
    CHECK(MonteCarloSpec{}.iterations == 1000);
    mc.iterations = 0;
    CHECK_THROWS(mc.validate());
}
