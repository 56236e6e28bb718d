#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace probe {

/// Runtime failure carrying a stable kebab-case code ("transport-failure",
/// "duplicate-id", ...) next to the human-readable message.
class ProbeError : public std::runtime_error {
public:
    ProbeError(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct Error {
    std::string code;
    std::string message;
};

/// Value-or-named-error carrier used by the total parsers: every input maps
/// to either a value or an Error, never an exception.
template <class T>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(Error err) : v_(std::move(err)) {}

    static Result failure(std::string code, std::string message = "") {
        return Result(Error{std::move(code), std::move(message)});
    }

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const { return std::get<T>(v_); }
    T& value() { return std::get<T>(v_); }
    const Error& error() const { return std::get<Error>(v_); }

private:
    std::variant<T, Error> v_;
};

std::string trim(std::string_view s);
std::string trim_right(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view text, std::string_view prefix);
bool contains_ci(std::string_view text, std::string_view needle);
std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// SHA-256 hex digest; fingerprints seed files in run manifests.
std::string sha256_hex(std::string_view bytes);

/// Current wall-clock time as UTC ISO-8601, e.g. "2026-08-11T12:00:00Z".
std::string utc_timestamp_now();
bool looks_like_utc_timestamp(std::string_view s);

}  // namespace probe
