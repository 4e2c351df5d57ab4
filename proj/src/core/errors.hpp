#pragma once

#include <stdexcept>
#include <string>

namespace epinn {

// Invalid experiment description: bad dimensions, counts, rates, unknown names.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: querying a latent that was never registered, predicting from an
// empty chain, reducing fewer than two draws, and similar caller mistakes.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Optimization or sampling produced a non-finite (or absurdly large) loss.
class DivergedError : public std::runtime_error {
public:
    DivergedError(const std::string& what, long epoch)
        : std::runtime_error(what), epoch(epoch) {}
    long epoch;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace epinn
