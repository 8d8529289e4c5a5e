#pragma once

#include "pbc/equilibria.hpp"
#include "pbc/stability.hpp"

#include <string>

namespace pbc::io {

/// Structured text: one block per condition with its smallest eigenvalue,
/// followed by epsilon, the certified rate and the verdict.
std::string format_certificate(const StabilityCertificate& cert);

/// The inequality a certificate variant checks, in words.
std::string certificate_statement(ControllerVariant variant);

std::string format_power_flow(const PowerFlowReport& r);

}  // namespace pbc::io
