#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace agshield {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (bad domain, dead end, bad probabilities...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An enumerative operation would exceed its size guard.
class TooLarge : public Error {
public:
    TooLarge(const std::string& what, std::uint64_t size, std::uint64_t limit)
        : Error(what + ": size " + std::to_string(size) + " exceeds limit " + std::to_string(limit)),
          size_(size), limit_(limit) {}

    [[nodiscard]] std::uint64_t size() const { return size_; }
    [[nodiscard]] std::uint64_t limit() const { return limit_; }

private:
    std::uint64_t size_;
    std::uint64_t limit_;
};

class DeadEndCreated : public Error {
public:
    explicit DeadEndCreated(std::uint64_t state)
        : Error("shielding removed every action of winning state " + std::to_string(state)), state_(state) {}
    [[nodiscard]] std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// The safety game has no winning state. `agent` is 1-based, 0 when not agent-specific.
class EmptyWinningSet : public Error {
public:
    explicit EmptyWinningSet(std::size_t agent = 0)
        : Error(agent == 0 ? std::string("winning set is empty")
                           : "winning set is empty for agent " + std::to_string(agent) +
                                 " (its guarantees are insufficient)"),
          agent_(agent) {}
    [[nodiscard]] std::size_t agent() const { return agent_; }

private:
    std::size_t agent_;
};

class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class CyclicDependency : public Error {
public:
    using Error::Error;
};

class DeclarationMismatch : public Error {
public:
    using Error::Error;
};

/// A policy or simulator reached an observation where the shield allows nothing.
class NoAllowedAction : public Error {
public:
    NoAllowedAction(std::size_t agent, std::uint64_t observation)
        : Error("no shield-allowed action for agent " + std::to_string(agent) + " at observation " +
                std::to_string(observation)),
          agent_(agent), observation_(observation) {}
    [[nodiscard]] std::size_t agent() const { return agent_; }
    [[nodiscard]] std::uint64_t observation() const { return observation_; }

private:
    std::size_t agent_;
    std::uint64_t observation_;
};

class InitialNotWinning : public Error {
public:
    explicit InitialNotWinning(std::size_t agent)
        : Error("initial state is not winning for agent " + std::to_string(agent)), agent_(agent) {}
    [[nodiscard]] std::size_t agent() const { return agent_; }

private:
    std::size_t agent_;
};

} // namespace agshield
