#pragma once

#include <stdexcept>
#include <string>

namespace skillmem {

// Every failure raised by the library. Messages are single-line so the CLI can
// forward them verbatim.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace skillmem
