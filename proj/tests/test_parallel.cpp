#include <atomic>
#include <stdexcept>

#include "doctest.h"
#include "marketeq/parallel.hpp"

using marketeq::first_success;

TEST_CASE("first_success finds the least true index for any thread count") {
  for (unsigned threads : {1u, 2u, 4u, 8u}) {
    CAPTURE(threads);
    CHECK(!first_success(0, threads, [](std::uint64_t) { return true; }));
    CHECK(!first_success(100, threads, [](std::uint64_t) { return false; }));
    CHECK(*first_success(100, threads,
                         [](std::uint64_t i) { return i == 37; }) == 37);
    CHECK(*first_success(100, threads, [](std::uint64_t i) {
      return i == 5 || i == 17 || i == 80;
    }) == 5);
    CHECK(*first_success(1, threads, [](std::uint64_t) { return true; }) == 0);
  }
}

TEST_CASE("first_success is reproducible under contention") {
  for (int round = 0; round < 20; ++round) {
    auto hit = first_success(200, 8, [](std::uint64_t i) {
      return i % 7 == 3 && i >= 59;
    });
    REQUIRE(hit.has_value());
    CHECK(*hit == 59);
  }
}

TEST_CASE("first_success evaluates everything below the minimum success") {
  std::atomic<int> below{0};
  auto hit = first_success(64, 4, [&](std::uint64_t i) {
    if (i < 40) below.fetch_add(1);
    return i >= 40;
  });
  REQUIRE(hit.has_value());
  CHECK(*hit == 40);
  CHECK(below.load() == 40);
}

TEST_CASE("first_success propagates probe exceptions") {
  for (unsigned threads : {1u, 4u}) {
    CAPTURE(threads);
    CHECK_THROWS_AS(first_success(100, threads,
                                  [](std::uint64_t i) -> bool {
                                    if (i == 10)
                                      throw std::runtime_error("boom");
                                    return i == 50;
                                  }),
                    std::runtime_error);
  }
}
