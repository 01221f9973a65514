#pragma once

#include "anant/pde.hpp"

namespace anant::detail {

/// -c L + N(u) - f for the steady problems, dt - c L - f for heat.
/// T supports +, -, * and sin(); F is the forcing type.
template <class T, class F>
T residual_formula(ProblemKind kind, double lap_scale, const T& u, const T& lap, const T* dt,
                   const F& f) {
  using std::sin;
  switch (kind) {
    case ProblemKind::Poisson: return T(-lap_scale * lap - f);
    case ProblemKind::SineGordon: return T(-lap_scale * lap + sin(u) - f);
    case ProblemKind::AllenCahn: return T(-lap_scale * lap + u - u * u * u - f);
    case ProblemKind::Heat: return T(*dt - lap_scale * lap - f);
  }
  return u;
}

}  // namespace anant::detail
