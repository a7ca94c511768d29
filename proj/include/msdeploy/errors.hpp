#pragma once

#include <stdexcept>
#include <string>

namespace msdeploy {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad file contents, inconsistent dimensions in user data.
struct BadInput : Error {
    using Error::Error;
};

struct DisconnectedTopology : Error {
    using Error::Error;
};

struct AlreadyAugmented : Error {
    using Error::Error;
};

struct NotAugmented : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NonFiniteEntries : Error {
    using Error::Error;
};

/// The reference point handed to the convex subproblem violates constraints.
struct InfeasibleReference : Error {
    using Error::Error;
};

/// No feasible placement exists (or none was found after all fallbacks).
struct NoFeasiblePoint : Error {
    using Error::Error;
};

/// Instance whose total demand exceeds total capacity; rejected at load time.
struct InfeasibleInstance : Error {
    using Error::Error;
};

/// Per-server reallocation asked to serve more demand than capacity.
struct OverSubscribed : Error {
    using Error::Error;
};

struct GenerationFailed : Error {
    using Error::Error;
};

} // namespace msdeploy
