#pragma once

#include <cmath>
#include <vector>

#include "mmi/model.hpp"
#include "mmi/optimize.hpp"

namespace fixtures {

using namespace mmi;

// m(W, theta) = W on a single column, theta in [-1, 1].
inline MomentModel identity_model() {
  return MomentModel(1, 1, 0, ThetaBox::cube(1, -1.0, 1.0),
                     [](const Sample& s, const VectorXd&, MatrixXd& out) { out.col(0) = s.rows.col(0); });
}

inline Sample column(std::vector<double> values) {
  MatrixXd rows(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) rows(static_cast<Index>(i), 0) = values[i];
  return make_sample(rows);
}

// Constant moments, one per entry of `values`.
inline MomentModel constant_model(std::vector<double> values) {
  const Index p = static_cast<Index>(values.size());
  return MomentModel(1, p, 0, ThetaBox::cube(1, -1.0, 1.0),
                     [values](const Sample& s, const VectorXd&, MatrixXd& out) {
                       for (Index j = 0; j < out.cols(); ++j)
                         out.col(j).setConstant(values[static_cast<std::size_t>(j)]);
                       (void)s;
                     });
}

inline NullRestriction pin_first(const MomentModel& model, double eta) {
  return NullRestriction::fixed_coordinates(model.box(), {{0, eta}});
}

}  // namespace fixtures
