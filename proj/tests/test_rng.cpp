#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "slabperc/rng.hpp"

using namespace slabperc;

TEST_CASE("philox4x32-10 reference vectors") {
    // Known-answer vectors from the Random123 distribution.
    auto zero = philox4x32(0, 0, 0);
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    auto ones = philox4x32(~std::uint64_t{0}, ~std::uint64_t{0}, ~std::uint64_t{0});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("field values are order-independent") {
    UniformField f1(123, 7);
    UniformField f2(123, 7);
    // Sequential in f1, scattered in f2.
    std::vector<std::uint32_t> seq;
    for (std::uint64_t e = 0; e < 64; ++e) seq.push_back(f1.word(e));
    for (std::uint64_t e : {63ull, 0ull, 17ull, 5ull, 62ull, 33ull})
        CHECK(f2.word(e) == seq[e]);
}

TEST_CASE("fields differ across replicas and seeds") {
    UniformField a(1, 0), b(1, 1), c(2, 0);
    int same_ab = 0, same_ac = 0;
    for (std::uint64_t e = 0; e < 256; ++e) {
        same_ab += a.word(e) == b.word(e);
        same_ac += a.word(e) == c.word(e);
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("unit_open stays inside the open interval") {
    CHECK(unit_open(0) > 0.0);
    CHECK(unit_open(0xffffffffu) < 1.0);
}

TEST_CASE("open thresholds saturate correctly") {
    CHECK(open_threshold(0.0) == 0);
    CHECK(open_threshold(1.0) == (std::uint64_t{1} << 32));
    CHECK(open_threshold(-0.5) == 0);
    CHECK(open_threshold(2.0) == (std::uint64_t{1} << 32));
    // Every word opens at p=1, none at p=0.
    CHECK(std::uint64_t{0xffffffffu} < open_threshold(1.0));
    CHECK(!(std::uint64_t{0} < open_threshold(0.0)));
}

TEST_CASE("stream uniforms have the right first moments") {
    Stream s(2024, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = s.next_unit();
        sum += u;
        sum2 += u * u;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    // 3 sigma on the mean of U(0,1): sd = 1/sqrt(12 n)
    CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("streams and edge fields of one seed do not collide") {
    // Stream counters carry a tag bit in the high half; an edge field with
    // the same seed and small replica ids must see different words.
    Stream s(42, 0);
    UniformField f(42, 0);
    std::set<std::uint32_t> from_stream;
    for (int i = 0; i < 64; ++i) from_stream.insert(s.next_u32());
    int collisions = 0;
    for (std::uint64_t e = 0; e < 64; ++e) collisions += from_stream.count(f.word(e));
    CHECK(collisions == 0);
}
