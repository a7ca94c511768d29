#pragma once

#include <string>

#include "msdeploy/greedy.hpp"
#include "msdeploy/sca.hpp"

// The five comparison strategies: the greedy heuristics (gds, ls,
// k8s_default) live in greedy.hpp; LDS and CDS are the proposed method
// pinned to theta = 1 and theta = 0.

namespace msdeploy {

enum class BaselineKind { GDS, LS, K8S, LDS, CDS };

inline const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::GDS: return "gds";
        case BaselineKind::LS: return "ls";
        case BaselineKind::K8S: return "k8s";
        case BaselineKind::LDS: return "lds";
        case BaselineKind::CDS: return "cds";
    }
    return "?";
}

/// Layer-sharing-only strategy: the proposed method at theta = 1.
inline Deployment lds(const Instance& inst, ScaConfig cfg = {}) {
    cfg.theta = 1.0;
    return sca_solve(inst, cfg).deployment;
}

/// Chain-sharing-only strategy: the proposed method at theta = 0.
inline Deployment cds(const Instance& inst, ScaConfig cfg = {}) {
    cfg.theta = 0.0;
    return sca_solve(inst, cfg).deployment;
}

} // namespace msdeploy
