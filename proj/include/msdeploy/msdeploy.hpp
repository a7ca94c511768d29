#pragma once

// Umbrella header for the deployment-planning library.

#include "msdeploy/baselines.hpp"
#include "msdeploy/errors.hpp"
#include "msdeploy/experiment.hpp"
#include "msdeploy/generator.hpp"
#include "msdeploy/greedy.hpp"
#include "msdeploy/io.hpp"
#include "msdeploy/matrix.hpp"
#include "msdeploy/model.hpp"
#include "msdeploy/objective.hpp"
#include "msdeploy/reallocation.hpp"
#include "msdeploy/sca.hpp"
#include "msdeploy/split.hpp"
#include "msdeploy/subproblem.hpp"
#include "msdeploy/vectorize.hpp"
