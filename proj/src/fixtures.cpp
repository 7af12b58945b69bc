#include "mediation/fixtures.hpp"

#include <algorithm>

namespace mediation {

namespace detail {
extern const BuiltinFixture kFixtures[];
extern const std::size_t kFixtureCount;
}  // namespace detail

std::span<const BuiltinFixture> builtin_fixtures() {
  return {detail::kFixtures, detail::kFixtureCount};
}

std::optional<std::string_view> find_builtin_fixture(std::string_view name) {
  for (const auto& f : builtin_fixtures())
    if (f.name == name) return f.text;
  return std::nullopt;
}

}  // namespace mediation
