#include "fdadapt/pipeline.hpp"

namespace fdadapt {

MeanPipeline run_mean_pipeline(const FunctionalDataset& dataset, const EvalGrid& grid,
                               const PipelineOptions& options) {
  MeanPipeline out;
  out.schedule = make_schedule(dataset.m_hat(), options.schedule);
  const auto anchors = regularity_anchors(options.mean_anchors, out.schedule);
  out.anchors = estimate_regularity_anchors(dataset, anchors, out.schedule, options.workers);
  out.noise = estimate_noise(dataset, grid, options.noise_mode, options.noise_K0);
  MeanOptions mo;
  mo.plan = options.plan;
  mo.bandwidths = options.mean_bandwidths.value_or(BandwidthGrid::for_mean(dataset.m_hat()));
  mo.workers = options.workers;
  out.mean = estimate_mean(dataset, grid, out.anchors, out.noise, out.schedule, mo);
  return out;
}

CovariancePipeline run_covariance_pipeline(const FunctionalDataset& dataset, const EvalGrid& grid,
                                           const MeanPipeline& mean, const PipelineOptions& options) {
  CovariancePipeline out;
  const auto anchors = regularity_anchors(options.cov_anchors, mean.schedule);
  out.anchors = estimate_regularity_anchors(dataset, anchors, mean.schedule, options.workers);
  CovarianceOptions co;
  co.plan = options.plan;
  co.bandwidths = options.cov_bandwidths;
  co.workers = options.workers;
  co.psd_clip = options.psd_clip;
  out.surface = estimate_covariance(dataset, grid, grid, out.anchors, mean.noise, mean.schedule, mean.mean, co);
  return out;
}

}  // namespace fdadapt
