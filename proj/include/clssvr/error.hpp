#ifndef CLSSVR_ERROR_HPP
#define CLSSVR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace clssvr
{

/*
 * Root of every exception thrown by the library. The CLI maps ParseError and
 * ValidationError to usage failures and everything else to solver failures.
 */
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error
{
public:
    using Error::Error;
};

class NonConvergence : public Error
{
public:
    using Error::Error;
};

class DegreeTooLarge : public Error
{
public:
    using Error::Error;
};

class GridError : public Error
{
public:
    using Error::Error;
};

class EvaluationError : public Error
{
public:
    using Error::Error;
};

class ParseError : public Error
{
public:
    using Error::Error;
};

class ValidationError : public Error
{
public:
    using Error::Error;
};

class ShapeError : public Error
{
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error
{
public:
    using Error::Error;
};

class SingularSchur : public Error
{
public:
    using Error::Error;
};

class MissingExact : public Error
{
public:
    using Error::Error;
};

} // namespace clssvr

#endif // CLSSVR_ERROR_HPP
