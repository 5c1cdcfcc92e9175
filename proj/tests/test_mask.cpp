#include "patlim/mask.hpp"

#include <doctest.h>

using namespace patlim;

TEST_CASE("mask_contains examples") {
    CHECK(mask_contains(MaskSpec::full(), 3, 7, 8));
    CHECK_FALSE(mask_contains(MaskSpec::hollow(), 4, 4, 8));
    CHECK(mask_contains(MaskSpec::hollow(), 4, 5, 8));
    auto band2 = MaskSpec::band(Rational(0), 2);
    CHECK(band2.bandwidth(8) == 2);
    CHECK_FALSE(mask_contains(band2, 1, 5, 8));
    CHECK(mask_contains(band2, 1, 3, 8));
    CHECK_THROWS(mask_contains(MaskSpec::full(), 0, 1, 8));
    CHECK_THROWS(mask_contains(MaskSpec::full(), 1, 9, 8));
}

TEST_CASE("antiband keeps a strip around the anti-diagonal") {
    auto m = MaskSpec::antiband(Rational(0), 1);
    const int N = 6;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) CHECK(m.contains(i, j, N) == (std::abs(i + j - (N + 1)) <= 1));
}

TEST_CASE("built-in masks are symmetric") {
    std::vector<MaskSpec> masks{MaskSpec::full(), MaskSpec::hollow(), MaskSpec::band(Rational(1, 3), 1),
                                MaskSpec::antiband(Rational(1, 4), 0)};
    for (const auto& m : masks)
        for (int N : {1, 4, 9, 32}) {
            bool ok = true;
            for (int i = 1; i <= N; ++i)
                for (int j = 1; j <= N; ++j) ok = ok && m.contains(i, j, N) == m.contains(j, i, N);
            CHECK(ok);
        }
    std::vector<std::vector<bool>> asym{{true, true}, {false, true}};
    CHECK_THROWS(MaskSpec::custom(asym));
}

TEST_CASE("assumption_V_distance") {
    CHECK(assumption_V_distance(MaskSpec::full(), 32) == 0);
    CHECK(assumption_V_distance(MaskSpec::hollow(), 32) == Rational(1, 32));
    auto band = MaskSpec::band(Rational(1, 2), 0).with_limit(LimitRegion::abs_diff_le(Rational(1, 2)));
    Rational prev = 2;
    for (int N = 8; N <= 1024; N *= 2) {
        Rational d = assumption_V_distance(band, N);
        CAPTURE(N);
        CHECK(d <= Rational(2, N));
        CHECK(d <= prev);
        prev = d;
    }
    auto anti = MaskSpec::antiband(Rational(1, 4), 0);
    REQUIRE(anti.limit_region().has_value());
    prev = 2;
    for (int N = 8; N <= 1024; N *= 2) {
        Rational d = assumption_V_distance(anti, N);
        CHECK(d <= prev);
        prev = d;
    }
    CHECK(to_double(prev) < 0.01);
    CHECK_THROWS(assumption_V_distance(MaskSpec::custom({{true}}), 1));
}

TEST_CASE("limit regions") {
    auto r = LimitRegion::parse("abs_diff_le(1/2)");
    CHECK(r.contains(0.1, 0.5));
    CHECK_FALSE(r.contains(0.0, 0.9));
    CHECK(r.contains(Rational(0), Rational(1, 2)));
    auto a = LimitRegion::parse("anti_diag_le(1/4)");
    CHECK(a.contains(0.5, 0.5));
    CHECK_FALSE(a.contains(0.0, 0.0));
    CHECK(LimitRegion::parse("empty").empty);
    auto h = LimitRegion::parse("halfplanes(1,1,1)");
    CHECK(h.contains(0.2, 0.3));
    CHECK_FALSE(h.contains(0.7, 0.7));
    CHECK_THROWS(LimitRegion::parse("circle(1)"));
}

TEST_CASE("mask JSON round trip") {
    nlohmann::json j = {{"kind", "band"}, {"c", "1/2"}, {"a", 0}, {"limit", "abs_diff_le(1/2)"}};
    auto m = MaskSpec::from_json(j);
    CHECK(m.kind() == MaskKind::band);
    CHECK(m.c() == Rational(1, 2));
    REQUIRE(m.limit_region().has_value());
    auto back = MaskSpec::from_json(m.to_json());
    for (int N : {5, 10})
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) CHECK(back.contains(i, j, N) == m.contains(i, j, N));
    CHECK(MaskSpec::named("band(1/3,1)").bandwidth(9) == 4);
    CHECK(mask_table(MaskSpec::hollow(), 3) == std::vector<std::uint8_t>{0, 1, 1, 1, 0, 1, 1, 1, 0});
}
