#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mediation/model.hpp"

namespace mediation {

/// Rows of endogenous values drawn under one regime. Column indices refer to
/// the schema the dataset was drawn from or read against.
struct Dataset {
  std::vector<std::size_t> columns;
  std::vector<std::vector<int>> rows;
  Regime regime;
  std::uint64_t seed = 0;
};

struct SampleOptions {
  /// Variables drawn uniformly from their domain per row instead of from
  /// their equation (randomized-treatment designs).
  std::vector<std::size_t> randomized;
  /// Emit unobservable variables too.
  bool include_unobserved = false;
};

/// n i.i.d. rows: u is drawn from the exogenous joint, then evaluated under
/// the regime. The generator is std::mt19937_64 seeded with `seed`; rows are
/// reproducible for a given (model, n, seed, regime) within one build.
Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed,
               const Regime& regime, const SampleOptions& options = {});

/// Comma-separated text with a header of variable names and domain labels
/// as values.
void write_dataset(const Schema& schema, const Dataset& data, std::ostream& out);

/// Parses delimiter-separated text against `schema`; values must match
/// domain labels byte for byte. Throws ValidationError with line numbers.
Dataset read_dataset(const Schema& schema, std::istream& in,
                     const Regime& regime, char delimiter = ',');

/// "observational" or "do:VAR=value,..." (variables in schema order).
std::string format_regime(const Schema& schema, const Regime& regime);
Regime parse_regime(const Schema& schema, std::string_view text);

}  // namespace mediation
