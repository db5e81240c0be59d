#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fdadapt/core_model.hpp"
#include "fdadapt/covariance.hpp"
#include "fdadapt/mean.hpp"
#include "fdadapt/regularity.hpp"

namespace fdadapt {

/// End-to-end settings shared by the CLI and the experiment runner.
struct PipelineOptions {
  ScheduleOptions schedule;
  SmoothingPlan plan;
  NoiseMode noise_mode = NoiseMode::TimeVarying;
  std::optional<int> noise_K0;
  std::size_t mean_anchors = 50;
  std::size_t cov_anchors = 10;
  std::optional<BandwidthGrid> mean_bandwidths;  // default: [1/m̂, 0.5] x 151
  BandwidthGrid cov_bandwidths = BandwidthGrid::for_covariance();
  bool psd_clip = false;
  std::size_t workers = 1;
};

struct MeanPipeline {
  RegularitySchedule schedule;
  std::vector<RegularityEstimate> anchors;
  NoiseEstimate noise;
  MeanEstimate mean;
};

/// Schedule, regularity at the mean anchors, noise and μ̂* on the grid.
MeanPipeline run_mean_pipeline(const FunctionalDataset& dataset, const EvalGrid& grid,
                               const PipelineOptions& options);

struct CovariancePipeline {
  std::vector<RegularityEstimate> anchors;
  CovarianceSurface surface;
};

/// Regularity at the covariance anchors and Γ̂* on grid x grid, reusing the
/// schedule, noise and mean of a mean pipeline run.
CovariancePipeline run_covariance_pipeline(const FunctionalDataset& dataset, const EvalGrid& grid,
                                           const MeanPipeline& mean, const PipelineOptions& options);

}  // namespace fdadapt
