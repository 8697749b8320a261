#pragma once

#include <stdexcept>
#include <string>

namespace pendusim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GimbalLock : public Error {
public:
    using Error::Error;
};

class UnsupportedPreset : public Error {
public:
    using Error::Error;
};

class InvalidBody : public Error {
public:
    using Error::Error;
};

/// A model, state, gain set or scenario violates its invariants.
class InvalidConfig : public Error {
public:
    using Error::Error;
};

class SingularMass : public Error {
public:
    SingularMass(const std::string &what, double condition)
        : Error(what), condition_number(condition) {}
    double condition_number;
};

class IllConditionedTransform : public Error {
public:
    IllConditionedTransform(const std::string &what, double condition)
        : Error(what), condition_number(condition) {}
    double condition_number;
};

class SingularCoupling : public Error {
public:
    SingularCoupling(const std::string &what, double condition)
        : Error(what), condition_number(condition) {}
    double condition_number;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string &what, double final_residual)
        : Error(what), residual(final_residual) {}
    double residual;
};

/// The integrated state left the admissible envelope.
class StateEscape : public Error {
public:
    using Error::Error;
};

} // namespace pendusim
