#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck_suite.hpp"

TEST_CASE("every differentiable op passes central finite-difference checks") {
  const auto results = gradsuite::run_all();
  REQUIRE(results.size() >= 25);
  for (const auto& r : results) {
    INFO(r.op, " over ", r.trials, " trials");
    CHECK(r.trials >= 20);
    CHECK(r.max_err < 1e-4);
  }
}
