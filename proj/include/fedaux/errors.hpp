#pragma once

#include <stdexcept>
#include <string>

namespace fedaux {

// Exit-code mapping used by the CLI: ConfigError -> 2, DataError -> 3,
// NumericalError -> 4. InternalError signals a broken contract between modules.

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, int round, int station)
        : std::runtime_error(what), round_(round), station_(station) {}

    int round() const noexcept { return round_; }
    int station() const noexcept { return station_; }

private:
    int round_;
    int station_;
};

class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace fedaux
