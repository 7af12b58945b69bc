#pragma once

#include <memory>
#include <string>

#include "mediation/fixtures.hpp"
#include "mediation/model_io.hpp"

namespace testing_support {

inline std::shared_ptr<const mediation::Scm> fixture(const std::string& name) {
  return mediation::parse_model(*mediation::find_builtin_fixture(name)).scm;
}

}  // namespace testing_support
