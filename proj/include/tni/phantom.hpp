#pragma once

#include <string>

#include "tni/forward.hpp"
#include "tni/grid.hpp"

namespace tni {

/// Built-in analytic conductivity phantoms, evaluated on any grid:
///   constant:<re>[:<im>]  uniform field
///   two-bumps             background 1 with smooth inclusions spanning
///                         sigma' in [1/3, 2]
///   complex-default       two-bumps real part; sigma'' background 0.5 with
///                         one inclusion reaching 1
/// Throws on unknown names. Geometry scales with the grid extent.
ConductivityField phantom(const std::string& name, const GridSpec& grid);

/// Local averaging of a fine-grid node field onto coarse nodes: the mean of
/// fine nodes within half a coarse cell (sup-norm) of each coarse node.
Vec restrict_to_coarse(const Vec& fine_field, const GridSpec& fine, const GridSpec& coarse);

}  // namespace tni
