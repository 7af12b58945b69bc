#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace mediation {

struct BuiltinFixture {
  std::string_view name;
  std::string_view text;
};

/// Model documents compiled into the binary, sorted by name.
std::span<const BuiltinFixture> builtin_fixtures();
std::optional<std::string_view> find_builtin_fixture(std::string_view name);

}  // namespace mediation
