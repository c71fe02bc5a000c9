#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pqbfl::protocol {

enum class Errc {
    BadSignature,
    AuthFailure,
    CommitmentMismatch,
    BadReference,
    ReplayDetected,
    UnexpectedRound,
    StaleTimestamp,
    StaleDeadline,
    NoActiveTask,
    UnknownClient,
    UnknownSender,
    SessionNotReady,
    Terminated,
    MalformedMessage,
    InvalidConfig,
};

std::string_view to_string(Errc code);

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

}  // namespace pqbfl::protocol
