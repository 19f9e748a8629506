#pragma once

// Umbrella header.

#include "tcpssm/analysis.hpp"
#include "tcpssm/common.hpp"
#include "tcpssm/denominator.hpp"
#include "tcpssm/distill.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/grad.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/numerator.hpp"
#include "tcpssm/operator_params.hpp"
#include "tcpssm/pole_bank.hpp"
#include "tcpssm/rng.hpp"
#include "tcpssm/roots.hpp"
#include "tcpssm/scan.hpp"
#include "tcpssm/stability.hpp"
#include "tcpssm/tensor.hpp"
#include "tcpssm/tensor_io.hpp"
#include "tcpssm/verification.hpp"
