#include <doctest.h>
#include "glmmasym/glmm.hpp"

TEST_CASE("placeholder") { CHECK(true); }
