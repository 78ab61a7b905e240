#include "rescon/adversary.hpp"

#include "rescon/rng.hpp"

namespace rescon::adversary {

AdversaryModel AdversaryModel::box(Eigen::VectorXd low, Eigen::VectorXd high,
                                   std::uint64_t seed, std::vector<int> kappa) {
  AdversaryModel m;
  m.kind = Kind::box_random;
  m.low = std::move(low);
  m.high = std::move(high);
  m.seed = seed;
  m.kappa = std::move(kappa);
  m.validate();
  return m;
}

AdversaryModel AdversaryModel::fixed(Eigen::VectorXd point,
                                     std::vector<int> kappa) {
  AdversaryModel m;
  m.kind = Kind::fixed_point;
  m.point = std::move(point);
  m.kappa = std::move(kappa);
  m.validate();
  return m;
}

AdversaryModel AdversaryModel::pursuit(Eigen::VectorXd lure, double gain,
                                       std::vector<int> kappa) {
  AdversaryModel m;
  m.kind = Kind::pursuit;
  m.point = std::move(lure);
  m.gain = gain;
  m.kappa = std::move(kappa);
  m.validate();
  return m;
}

int AdversaryModel::dim() const {
  return kind == Kind::box_random ? int(low.size()) : int(point.size());
}

void AdversaryModel::validate() const {
  if (kappa.empty()) throw PreconditionError("adversary: kappa list empty");
  for (int k : kappa) {
    if (k < 0) throw PreconditionError("adversary: negative kappa entry");
  }
  switch (kind) {
    case Kind::box_random:
      if (low.size() < 1 || low.size() != high.size() || !low.allFinite() ||
          !high.allFinite()) {
        throw PreconditionError("adversary: box bounds must be finite, same dim");
      }
      for (int c = 0; c < low.size(); ++c) {
        if (low[c] > high[c]) {
          throw PreconditionError("adversary: box low exceeds high");
        }
      }
      break;
    case Kind::fixed_point:
    case Kind::pursuit:
      if (point.size() < 1 || !point.allFinite()) {
        throw PreconditionError("adversary: point must be finite");
      }
      if (kind == Kind::pursuit && !std::isfinite(gain)) {
        throw PreconditionError("adversary: gain must be finite");
      }
      break;
  }
}

std::vector<Eigen::VectorXd> inject(const AdversaryModel& m, int target,
                                    long t, const geometry::PointSet& observed) {
  if (target < 0 || target >= int(m.kappa.size())) {
    throw PreconditionError("adversary: target out of range");
  }
  const int slots = m.kappa[target];
  std::vector<Eigen::VectorXd> out;
  out.reserve(slots);
  switch (m.kind) {
    case AdversaryModel::Kind::box_random: {
      const int n = m.dim();
      for (int k = 0; k < slots; ++k) {
        Rng rng = Rng::derive(m.seed, std::uint64_t(target),
                              std::uint64_t(t), std::uint64_t(k));
        Eigen::VectorXd v(n);
        for (int c = 0; c < n; ++c) v[c] = rng.uniform(m.low[c], m.high[c]);
        out.push_back(std::move(v));
      }
      break;
    }
    case AdversaryModel::Kind::fixed_point:
      out.assign(slots, m.point);
      break;
    case AdversaryModel::Kind::pursuit: {
      const int at = observed.index_of(target);
      if (at < 0) {
        throw PreconditionError("adversary: pursuit needs the target state");
      }
      const Eigen::VectorXd x = observed.points.col(at);
      out.assign(slots, x + m.gain * (m.point - x));
      break;
    }
  }
  return out;
}

}  // namespace rescon::adversary
