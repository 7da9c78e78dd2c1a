#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "kathleen/model.hpp"
TEST_CASE("placeholder") { CHECK(1 == 1); }
