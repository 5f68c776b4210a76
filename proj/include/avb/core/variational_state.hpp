#pragma once

#include "avb/deep/box_state.hpp"
#include "avb/mixture/mixture_state.hpp"
#include "avb/particle/particle_state.hpp"
#include "avb/quasi/sbm_state.hpp"

#include <variant>

namespace avb {

/// Fitted per-model variational parameters, tagged by family.
using VariationalState =
    std::variant<deep::BoxVariationalState, particle::ParticleState,
                 mixture::MixtureVariationalState, quasi::SbmVariationalState>;

} // namespace avb
