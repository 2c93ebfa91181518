#pragma once

#include <ostream>
#include <vector>

#include "wscf/mvce/model.hpp"

namespace wscf::mvce {

struct EvalRow {
  int frame_id = 0;
  std::vector<int> views;
  double s_pred = 0;
  double s_gt = 0;
  double abs_err = 0;
  double rel_err = 0;  // NaN when s_gt == 0
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mae = 0;
  double nae = 0;         // over frames with s_gt > 0
  int excluded_zero = 0;  // frames left out of NAE
  int view_count = 0;
};

enum class Pipeline {
  kModel,   // the trained model
  kNaive,   // the trained densities with W forced to 1
  kOracle,  // GT densities, homographies and match maps, constant confidence
};

/// Scene counts over `views` (pairs drawn only within the subset); the GT is
/// the number of distinct people seen by any of those views.
EvalReport evaluate(const MultiViewCounter* model, const std::vector<scenesim::MultiViewFrame>& frames,
                    const std::vector<int>& views, Pipeline pipeline = Pipeline::kModel,
                    const scenesim::AnnotationSettings& settings = {});

/// Pools the rows of several reports (such as every 2-view subset) and
/// recomputes the aggregates.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

/// Per-view |sum(D_i) - c_i| averaged over frames and views.
double per_view_count_mae(const MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames);

/// frame_id,views,S_pred,S_gt,abs_err,rel_err plus an "aggregate" row whose
/// abs_err and rel_err columns hold MAE and NAE.
void write_csv(std::ostream& os, const EvalReport& report);

}  // namespace wscf::mvce
