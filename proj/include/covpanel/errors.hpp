#ifndef COVPANEL_ERRORS_HPP
#define COVPANEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace covpanel {

/// Error with a stable machine-readable code (used by the CLI's error JSON)
/// and a human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

} // namespace covpanel

#endif
