#pragma once

#include <cstddef>
#include <vector>

#include "psica/dataset.hpp"
#include "psica/psica_tree.hpp"
#include "psica/random.hpp"

namespace psica {

struct MetricsReport {
  double accuracy = 0.0;
  double uncertainty = 0.0;
  double suspect = 0.0;
  double decision_accuracy = 0.0;
};

// Share of rows whose true best set is contained in the predicted potential set.
double accuracy(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle);
// Share of rows whose predicted set is strictly larger than the true best set.
double uncertainty(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle);
// Size-weighted share of internal nodes that split on an irrelevant feature,
// relative to the total size of all nodes (internal and terminal).
double suspect(const PsicaTree& tree, const std::vector<bool>& relevant);
// Expected share of correct decisions when the treatment is drawn from the
// leaf's truncated probabilities.
double decision_accuracy(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle);
// Same quantity from one multinomial draw per row and repetition.
double decision_accuracy_sampled(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle,
                                 RandomStream& rng, std::size_t repetitions = 1);

MetricsReport evaluate(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle,
                       const std::vector<bool>& relevant);

}  // namespace psica
