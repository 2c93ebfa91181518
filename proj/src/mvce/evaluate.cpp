#include "wscf/mvce/evaluate.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "wscf/mvce/fusion.hpp"
#include "wscf/mwe/weights.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::mvce {

namespace {

void finish(EvalReport& r) {
  r.mae = r.nae = 0;
  r.excluded_zero = 0;
  int nonzero = 0;
  for (const auto& row : r.rows) {
    r.mae += row.abs_err;
    if (row.s_gt > 0) {
      r.nae += row.rel_err;
      ++nonzero;
    } else {
      ++r.excluded_zero;
    }
  }
  if (!r.rows.empty()) r.mae /= r.rows.size();
  r.nae = nonzero ? r.nae / nonzero : std::numeric_limits<double>::quiet_NaN();
}

Tensor<float> stack_maps(const std::vector<Tensor<float>>& maps) {
  const Shape& s = maps.front().shape();
  Tensor<float> out({static_cast<int>(maps.size()), 1, s[0], s[1]});
  auto dst = out.values().begin();
  for (const auto& m : maps) dst = std::copy(m.values().begin(), m.values().end(), dst);
  return out;
}

double oracle_scene_count(const scenesim::AnnotationReader& reader, int frame, const std::vector<int>& views) {
  NoGradGuard guard;
  std::vector<Tensor<float>> dens;
  for (int v : views) dens.push_back(reader.density_map(frame, v));
  const Tensor<float> d = stack_maps(dens);
  const auto local = mwe::ordered_pairs(static_cast<int>(views.size()));
  std::vector<geometry::Homography> hs;
  std::vector<Tensor<float>> ms;
  for (const auto& p : local) {
    hs.push_back(reader.homography(frame, views[p.i], views[p.j]));
    ms.push_back(reader.match_map(frame, views[p.i], views[p.j]));
  }
  const Var<float> c = constant(Tensor<float>(d.shape(), 1.f));
  const Var<float> m = ms.empty() ? Var<float>() : constant(stack_maps(ms));
  const Var<float> w = mwe::compute_weights(c, m, local, hs);
  return scene_count(w, constant(d)).value()[0];
}

}  // namespace

EvalReport evaluate(const MultiViewCounter* model, const std::vector<scenesim::MultiViewFrame>& frames,
                    const std::vector<int>& views, Pipeline pipeline,
                    const scenesim::AnnotationSettings& settings) {
  if (views.empty()) throw std::invalid_argument("evaluate: empty view subset");
  if (pipeline != Pipeline::kOracle && !model) throw std::invalid_argument("evaluate: model required");
  scenesim::AnnotationReader reader(frames, settings);
  std::set<int> seen;
  for (int v : views) {
    if (v < 0 || v >= reader.views()) {
      throw std::invalid_argument("evaluate: view " + std::to_string(v) + " not in dataset with " +
                                  std::to_string(reader.views()) + " views");
    }
    if (!seen.insert(v).second) throw std::invalid_argument("evaluate: duplicate view " + std::to_string(v));
  }
  EvalReport report;
  report.view_count = static_cast<int>(views.size());
  for (int f = 0; f < reader.frame_count(); ++f) {
    EvalRow row;
    row.frame_id = reader.frame_id(f);
    row.views = views;
    if (pipeline == Pipeline::kOracle) {
      row.s_pred = oracle_scene_count(reader, f, views);
    } else {
      row.s_pred = model->predict(reader, f, views, pipeline == Pipeline::kNaive).scene_count.value()[0];
    }
    row.s_gt = reader.scene_count(f, views);
    row.abs_err = std::abs(row.s_pred - row.s_gt);
    row.rel_err = row.s_gt > 0 ? row.abs_err / row.s_gt : std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back(std::move(row));
  }
  finish(report);
  return report;
}

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  EvalReport out;
  for (const auto& r : reports) {
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    out.view_count = r.view_count;
  }
  finish(out);
  return out;
}

double per_view_count_mae(const MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames) {
  scenesim::AnnotationReader reader(frames);
  std::vector<int> views(reader.views());
  std::iota(views.begin(), views.end(), 0);
  double total = 0;
  int n = 0;
  NoGradGuard guard;
  for (int f = 0; f < reader.frame_count(); ++f) {
    const Var<float> d = model.counting().predict_density_from_images(model.images(reader, f, views));
    for (int v : views) {
      total += std::abs(sum(select(d, v)).value()[0] - reader.view_count(f, v));
      ++n;
    }
  }
  return n ? total / n : 0.0;
}

void write_csv(std::ostream& os, const EvalReport& r) {
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
    return s;
  };
  const auto old = os.precision(10);
  os << "frame_id,views,S_pred,S_gt,abs_err,rel_err\n";
  for (const auto& row : r.rows) {
    os << row.frame_id << ',' << join(row.views) << ',' << row.s_pred << ',' << row.s_gt << ',' << row.abs_err
       << ',';
    if (row.s_gt > 0) os << row.rel_err;
    os << '\n';
  }
  os << "aggregate," << r.view_count << " views (" << r.excluded_zero << " zero-count frames excluded from NAE),,,"
     << r.mae << ',' << r.nae << '\n';
  os.precision(old);
}

}  // namespace wscf::mvce
