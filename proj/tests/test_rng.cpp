#include <cmath>
#include <set>

#include "doctest.h"
#include "noma/rng.hpp"

using noma::Philox4x32;
using noma::RandomStream;

TEST_SUITE("rng")
{
TEST_CASE("Philox4x32-10 known answers")
{
    using B = Philox4x32::Block;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, K{0, 0})
          == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                K{0xffffffff, 0xffffffff})
          == B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                K{0xa4093822, 0x299f31d0})
          == B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct")
{
    RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::set<double> firsts;
    for (int i = 0; i < 1000; ++i)
    {
        double x = a.normal();
        CHECK(x == b.normal());
        if (i == 0)
        {
            firsts.insert(x);
            firsts.insert(c.normal());
            firsts.insert(d.normal());
        }
    }
    CHECK(firsts.size() == 3);
}

TEST_CASE("uniform and normal moments")
{
    RandomStream rng(1, 0);
    const int n = 400000;
    double su = 0, sn = 0, sn2 = 0, sc = 0;
    int out_of_range = 0;
    for (int i = 0; i < n; ++i)
    {
        double u = rng.uniform_open();
        out_of_range += !(u > 0 && u < 1);
        su += u;
        double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sc += std::norm(rng.complex_normal());
    }
    CHECK(out_of_range == 0);
    CHECK(std::fabs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::fabs(sn / n) < 5 / std::sqrt(double(n)));
    CHECK(std::fabs(sn2 / n - 1) < 5 * std::sqrt(2.0 / n));
    // CN(0, 1): E|z|^2 = 1, Var = 1
    CHECK(std::fabs(sc / n - 1) < 5 / std::sqrt(double(n)));
}
}
