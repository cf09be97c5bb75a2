#include <doctest.h>

#include "properties.hpp"

TEST_CASE("invariant suite, seeds 0-9")
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        for (const props::Result& r : props::run_all(seed)) {
            INFO("seed " << seed << ": " << r.name << " " << r.detail);
            CHECK(r.ok);
        }
    }
}
