#include <catch2/catch_amalgamated.hpp>

#include "memtutor/memtutor.hpp"

using namespace memtutor;

TEST_CASE("umbrella header compiles and core types construct") {
    const ItemBank bank = ItemBank::uniform_mod(6, 3);
    const TimeWindows w = TimeWindows::standard();
    REQUIRE(bank.items == 6);
    REQUIRE(w.count() == 5);
    const ParamSet p(bank.items, bank.skills, w.count());
    REQUIRE(p.all_finite());
    REQUIRE(sigmoid(0.0) == 0.5);
}
