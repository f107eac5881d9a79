#pragma once

#include <stdexcept>
#include <vector>

#include <vequil/field.hpp>
#include <vequil/interaction.hpp>
#include <vequil/interval.hpp>
#include <vequil/polyhedron.hpp>

namespace vequil {

/// A vector equilibrium problem: d measures, the i-th supported on the
/// closed set sets[i] and driven by the external field fields[i], coupled
/// through the PSD interaction matrix C, with the mass vector constrained to
/// the polyhedron K. The target functional is
///   J_Q(mu) = sum_{i,j} C_ij I(mu_i, mu_j) + 2 sum_i int Q_i dmu_i
/// minimized over tuples with (|mu_1|, ..., |mu_d|) in K.
struct ProblemInstance {
  std::vector<IntervalUnion> sets;
  std::vector<ExternalField> fields;
  InteractionMatrix interaction;
  MassPolyhedron masses;

  ProblemInstance(std::vector<IntervalUnion> sets_in, std::vector<ExternalField> fields_in,
                  InteractionMatrix C, MassPolyhedron K)
      : sets(std::move(sets_in)),
        fields(std::move(fields_in)),
        interaction(std::move(C)),
        masses(std::move(K)) {
    const auto d = sets.size();
    if (d == 0) throw std::invalid_argument("ProblemInstance: no components");
    if (fields.size() != d)
      throw std::invalid_argument("ProblemInstance: one field per component required");
    if (static_cast<std::size_t>(interaction.dimension()) != d)
      throw std::invalid_argument("ProblemInstance: interaction matrix dimension mismatch");
    if (static_cast<std::size_t>(masses.dimension()) != d)
      throw std::invalid_argument("ProblemInstance: mass polyhedron dimension mismatch");
    for (const auto& s : sets)
      if (!s.has_positive_capacity())
        throw std::invalid_argument("ProblemInstance: every support set needs positive capacity");
  }

  int dimension() const { return static_cast<int>(sets.size()); }
};

}  // namespace vequil
