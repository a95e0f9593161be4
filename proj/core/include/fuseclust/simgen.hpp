#pragma once

#include <string>
#include <vector>

#include "fuseclust/glm.hpp"
#include "fuseclust/types.hpp"

namespace fuseclust {

enum class ScenarioId {
  S1,             // spherical, groups 1 and 3 overlap in X
  S2,             // spherical, all groups overlap in X
  H1,             // three half moons, arcs 1 and 3 overlap
  H2,             // three half moons, all arcs overlap
  AS1,            // four X clusters, fewer y categories
  AS2,            // three X clusters, five y categories
  covariate,      // S1 design with y shifted by Z beta
  varying_p,      // S1 design at p in {50, 100}, noisier
  unequal_groups, // S1 design with group sizes (80, 10, 30)
  biclust         // S1 gaussian reused for biclustering runs
};

std::string scenario_name(ScenarioId id);
ScenarioId scenario_from_name(const std::string& name);

struct Scenario {
  ScenarioId id = ScenarioId::S1;
  LossFamily family = LossFamily::gaussian();
  int n = 120;
  int p = 30;
  unsigned long seed = 0;
  double sigma = -1.0;        // < 0: scenario default (standard deviation)
  double censor_rate = 0.3;   // survival families; <= 0 disables censoring
  double jitter = -1.0;       // half-moon noise; < 0: default
};

struct SimOutput {
  Matrix X;
  SupervisingVariable y;
  Matrix Z;                      // 0 x 0 unless the scenario has covariates
  std::vector<int> true_labels;  // 1-based group ids
  Matrix true_centroids;         // one row per group
  Matrix beta_true;              // covariate scenario only
};

SimOutput gen_spherical(const Scenario& sc);
SimOutput gen_halfmoons(const Scenario& sc);
SimOutput gen_additional(const Scenario& sc);
SimOutput gen_survival(const Scenario& sc);

// Dispatches on scenario id and family.
SimOutput generate(const Scenario& sc);

}  // namespace fuseclust
