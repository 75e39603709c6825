#ifndef SOURIR_TEST_HELPERS_H
#define SOURIR_TEST_HELPERS_H

#include "sourir/text.h"

#include <fstream>
#include <sstream>
#include <string>

namespace sourir::test {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::string fixturePath(const std::string& name) {
    return std::string(FIXTURE_DIR) + "/" + name;
}

inline Program fixture(const std::string& name) { return parse(slurp(fixturePath(name))); }

} // namespace sourir::test

#endif
