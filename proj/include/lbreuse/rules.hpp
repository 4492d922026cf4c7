#pragma once

// Rule-based LB parameter settings: the fixed BasicLB defaults and the
// load-threshold AdaptLB update.

#include "lbreuse/sim.hpp"

namespace lbreuse {

struct BasicLbConfig {
  double cio_db = 0.0;
  double beta_dbm = -100.0;
  double gamma_dbm = -95.0;
};

inline LbParams basic_lb(const BasicLbConfig& cfg = {}) {
  return LbParams::uniform(cfg.cio_db, cfg.beta_dbm, cfg.gamma_dbm);
}

struct AdaptLbConfig {
  double high_utilization = 0.8;
  double low_utilization = 0.5;
  double cio_step_db = 1.0;
  double threshold_step_dbm = 2.0;
};

// Move each overloaded -> underloaded pair toward easier offloading, the
// reverse pair back, clamp to bounds. Pure in its inputs.
inline LbParams adapt_lb(const CellObservations& obs, const LbParams& prev, const AdaptLbConfig& cfg,
                         const LbBounds& bounds) {
  LbParams next = prev;
  for (int i = 0; i < kNumCells; ++i)
    for (int j = 0; j < kNumCells; ++j) {
      if (i == j) continue;
      const double ui = obs[i].prb_utilization;
      const double uj = obs[j].prb_utilization;
      double dir = 0.0;
      if (ui > cfg.high_utilization && uj < cfg.low_utilization) dir = 1.0;
      else if (ui < cfg.low_utilization && uj > cfg.high_utilization) dir = -1.0;
      next.cio_db[i][j] -= dir * cfg.cio_step_db;
      next.beta_dbm[i][j] += dir * cfg.threshold_step_dbm;
      next.gamma_dbm[i][j] -= dir * cfg.threshold_step_dbm;
    }
  return next.clamped(bounds);
}

}  // namespace lbreuse
