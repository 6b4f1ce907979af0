#pragma once

#include <stdexcept>
#include <string>

namespace hoop {

/// Coarse failure category; the CLI maps these onto exit codes.
enum class ErrorKind { validation, numerical, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Wraps an error raised inside a named pipeline stage, keeping the original category.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner)
        : Error(inner.kind(), "[" + stage + "] " + inner.what()), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace hoop
