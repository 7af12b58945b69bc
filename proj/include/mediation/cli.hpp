#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mediation::cli {

/// Twelve significant digits, shortest form, with negative zero printed as 0.
std::string format_number(double value);

/// Text of a model argument: an existing file path or a built-in fixture
/// name. Throws ValidationError naming the argument otherwise.
std::string load_model_text(const std::string& model);

/// Runs one subcommand (`args` excludes the program name) and returns the
/// exit code: 0 success, 1 validation or usage error, 2 estimand or
/// criterion failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mediation::cli
