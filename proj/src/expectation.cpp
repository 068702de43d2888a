#include "sgdwr/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgdwr {

const char* to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::Enumeration: return "Enumeration";
    case EstimateMethod::MonteCarlo: return "MonteCarlo";
    case EstimateMethod::ClosedForm: return "ClosedForm";
  }
  return "?";
}

void FunctionSequence::check() const {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "empty function sequence");
  const size_t n = values[0].size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty dataset");
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != n) throw Error(ErrorKind::InvalidArgument, "f_i evaluated on different n");
    for (const Mat& m : values[i])
      if (m.rows() != values[i][0].rows() || m.cols() != values[i][0].cols())
        throw Error(ErrorKind::InvalidArgument, "f_i shape varies across data");
    if (i + 1 < values.size() && values[i][0].cols() != values[i + 1][0].rows())
      throw Error(ErrorKind::InvalidArgument, "shapes do not chain");
  }
}

// ---- set partitions ----------------------------------------------------------

namespace {

void rgs_rec(SetPartition& cur, int pos, int k, int nblocks, int max_block,
             std::vector<int>& sizes, std::vector<SetPartition>& out) {
  if (pos == k) {
    out.push_back(cur);
    return;
  }
  for (int b = 0; b <= nblocks && b < k; ++b) {
    if (b == nblocks) sizes.push_back(0);
    if (sizes[static_cast<size_t>(b)] < max_block) {
      ++sizes[static_cast<size_t>(b)];
      cur[static_cast<size_t>(pos)] = b;
      rgs_rec(cur, pos + 1, k, std::max(nblocks, b + 1), max_block, sizes, out);
      --sizes[static_cast<size_t>(b)];
    }
    if (b == nblocks) sizes.pop_back();
  }
}

int block_count(const SetPartition& p) {
  return p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
}

std::vector<int> block_sizes(const SetPartition& p) {
  std::vector<int> s(static_cast<size_t>(block_count(p)), 0);
  for (int b : p) ++s[static_cast<size_t>(b)];
  return s;
}

Mat ordered_product(const FunctionSequence& fs, const std::vector<int>& z_of_factor) {
  Mat acc = fs.values[0][static_cast<size_t>(z_of_factor[0])];
  for (int i = 1; i < fs.k(); ++i) acc = acc * fs.values[static_cast<size_t>(i)][static_cast<size_t>(z_of_factor[static_cast<size_t>(i)])];
  return acc;
}

Mat partition_moment(const FunctionSequence& fs, const SetPartition& p) {
  const int n = fs.n(), k = fs.k(), nb = block_count(p);
  std::vector<int> assign(static_cast<size_t>(nb), 0), z(static_cast<size_t>(k));
  Mat sum;
  double count = 0;
  while (true) {
    for (int i = 0; i < k; ++i) z[static_cast<size_t>(i)] = assign[static_cast<size_t>(p[static_cast<size_t>(i)])];
    Mat term = ordered_product(fs, z);
    if (count == 0)
      sum = term;
    else
      sum += term;
    count += 1;
    int j = nb - 1;
    while (j >= 0 && ++assign[static_cast<size_t>(j)] == n) assign[static_cast<size_t>(j--)] = 0;
    if (j < 0) break;
  }
  return sum / count;
}

}  // namespace

std::vector<SetPartition> set_partitions(int k, int max_block) {
  std::vector<SetPartition> out;
  if (k <= 0) return out;
  SetPartition cur(static_cast<size_t>(k), 0);
  std::vector<int> sizes;
  rgs_rec(cur, 0, k, 0, max_block, sizes, out);
  return out;
}

MomentTable build_moment_table(const FunctionSequence& fs, int max_order) {
  fs.check();
  MomentTable t;
  t.k = fs.k();
  t.n = fs.n();
  t.max_order = max_order;
  for (const auto& fi : fs.values) {
    Mat m = fi[0];
    for (size_t z = 1; z < fi.size(); ++z) m += fi[z];
    t.means.push_back(m / static_cast<double>(fi.size()));
  }
  for (const auto& p : set_partitions(t.k, std::max(1, max_order)))
    t.partition_moments[p] = partition_moment(fs, p);
  return t;
}

// ---- tuples ------------------------------------------------------------------

double tuple_count(int n, int k) {
  double c = 1;
  for (int i = 0; i < k; ++i) c *= n - i;
  return c;
}

void for_each_tuple(int n, int k, const std::function<void(const std::vector<int>&)>& visit,
                    double budget) {
  if (k < 1 || k > n) throw Error(ErrorKind::InvalidArgument, "need 1 <= k <= n");
  if (tuple_count(n, k) > budget)
    throw Error(ErrorKind::EnumerationTooLarge, "n!/(n-k)! exceeds the enumeration budget");
  std::vector<int> tup(static_cast<size_t>(k));
  std::vector<char> used(static_cast<size_t>(n), 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == k) {
      visit(tup);
      return;
    }
    for (int z = 0; z < n; ++z) {
      if (used[static_cast<size_t>(z)]) continue;
      used[static_cast<size_t>(z)] = 1;
      tup[static_cast<size_t>(pos)] = z;
      rec(pos + 1);
      used[static_cast<size_t>(z)] = 0;
    }
  };
  rec(0);
}

std::vector<std::vector<int>> enumerate_tuples(int n, int k, double budget) {
  std::vector<std::vector<int>> out;
  for_each_tuple(n, k, [&](const std::vector<int>& t) { out.push_back(t); }, budget);
  return out;
}

ExpectationEstimate expectation_enumerated(const FunctionSequence& fs, double budget) {
  fs.check();
  ExpectationEstimate e;
  e.method = EstimateMethod::Enumeration;
  long count = 0;
  for_each_tuple(
      fs.n(), fs.k(),
      [&](const std::vector<int>& t) {
        Mat term = ordered_product(fs, t);
        if (count++ == 0)
          e.value = term;
        else
          e.value += term;
      },
      budget);
  e.value /= static_cast<double>(count);
  e.samples = count;
  e.stderr_ = Mat::Zero(e.value.rows(), e.value.cols());
  return e;
}

// ---- closed form -------------------------------------------------------------

namespace {

const Mat& moment(const MomentTable& t, const SetPartition& p) {
  auto it = t.partition_moments.find(p);
  if (it == t.partition_moments.end())
    throw Error(ErrorKind::IncompleteMomentTable,
                "missing product moment for a block of size " +
                    std::to_string(*std::max_element(block_sizes(p).begin(), block_sizes(p).end())));
  return it->second;
}

Mat product_of_means(const MomentTable& t) {
  Mat acc = t.means[0];
  for (int i = 1; i < t.k; ++i) acc = acc * t.means[static_cast<size_t>(i)];
  return acc;
}

// all sets of disjoint pairs (i<j) of {0..k-1}
void matchings(int k, std::vector<std::pair<int, int>>& cur, std::vector<char>& used, int start,
               std::vector<std::vector<std::pair<int, int>>>& out) {
  out.push_back(cur);
  for (int i = start; i < k; ++i) {
    if (used[static_cast<size_t>(i)]) continue;
    for (int j = i + 1; j < k; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      used[static_cast<size_t>(i)] = used[static_cast<size_t>(j)] = 1;
      cur.emplace_back(i, j);
      matchings(k, cur, used, i + 1, out);
      cur.pop_back();
      used[static_cast<size_t>(i)] = used[static_cast<size_t>(j)] = 0;
    }
  }
}

SetPartition canonical(std::vector<int> labels) {
  std::map<int, int> relabel;
  for (int& l : labels) {
    auto it = relabel.find(l);
    if (it == relabel.end()) it = relabel.emplace(l, static_cast<int>(relabel.size())).first;
    l = it->second;
  }
  return labels;
}

}  // namespace

ExpectationEstimate expectation_closed_form(const MomentTable& t, int k, int n, int order) {
  if (k != t.k || n != t.n) throw Error(ErrorKind::InvalidArgument, "moment table built for other k/n");
  if (k > n) throw Error(ErrorKind::InvalidArgument, "k > n");
  ExpectationEstimate e;
  e.method = EstimateMethod::ClosedForm;
  e.order = order;
  const double dn = n;

  if (order == kFullOrder) {
    if (t.max_order < k)
      throw Error(ErrorKind::IncompleteMomentTable, "order=full needs product moments up to order k");
    double pref = 1;
    for (int i = 1; i < k; ++i) pref *= dn / (dn - i);
    Mat sum;
    bool first = true;
    for (const auto& p : set_partitions(k)) {
      double w = 1;
      for (int l : block_sizes(p))
        for (int m = 1; m < l; ++m) w *= -static_cast<double>(m) / dn;  // (-1/n)^{l-1} (l-1)!
      Mat term = w * moment(t, p);
      if (first) {
        sum = term;
        first = false;
      } else {
        sum += term;
      }
    }
    e.value = pref * sum;
  } else if (order == 2) {
    if (k >= 2 && t.max_order < 2)
      throw Error(ErrorKind::IncompleteMomentTable, "order=2 needs pairwise product moments");
    std::vector<std::vector<std::pair<int, int>>> all;
    std::vector<std::pair<int, int>> cur;
    std::vector<char> used(static_cast<size_t>(k), 0);
    matchings(k, cur, used, 0, all);
    e.value = product_of_means(t);
    for (const auto& P : all) {
      const int p = static_cast<int>(P.size());
      if (p == 0) continue;
      double coef = (p % 2 ? -1.0 : 1.0);
      for (int q = 1; q <= p; ++q) coef /= dn - q;
      // centred product over the pairs of P: sum over subsets Q of P
      Mat centred = Mat::Zero(e.value.rows(), e.value.cols());
      for (unsigned mask = 0; mask < (1u << p); ++mask) {
        std::vector<int> labels(static_cast<size_t>(k));
        std::iota(labels.begin(), labels.end(), 0);
        int q = 0;
        for (int s = 0; s < p; ++s)
          if (mask & (1u << s)) {
            labels[static_cast<size_t>(P[static_cast<size_t>(s)].second)] = P[static_cast<size_t>(s)].first;
            ++q;
          }
        const double sign = ((p - q) % 2) ? -1.0 : 1.0;
        centred += sign * moment(t, canonical(labels));
      }
      e.value += coef * centred;
    }
  } else {
    throw Error(ErrorKind::InvalidArgument, "order must be 2 or full");
  }
  e.stderr_ = Mat::Zero(e.value.rows(), e.value.cols());
  return e;
}

// ---- schedules ---------------------------------------------------------------

namespace {

double binom(int n, int r) {
  if (r < 0 || r > n) return 0;
  double c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

double schedule_count(int n, const Hyperparams& hyper, Policy policy) {
  switch (policy) {
    case Policy::FullBatch: return 1;
    case Policy::NoisedFullBatch:
      throw Error(ErrorKind::InvalidArgument, "NoisedFullBatch is not enumerable");
    case Policy::WithReplacement: return std::pow(binom(n, hyper.b), hyper.k);
    case Policy::WithoutReplacement:
    case Policy::ShuffleOnce: {
      if (static_cast<long>(hyper.k) * hyper.b > n) return 0;
      // n! / ((b!)^k (n-kb)!)
      double c = 1;
      int left = n;
      for (int t = 0; t < hyper.k; ++t) {
        c *= binom(left, hyper.b);
        left -= hyper.b;
      }
      return c;
    }
  }
  return 0;
}

void for_each_schedule(int n, const Hyperparams& hyper, Policy policy,
                       const std::function<void(const BatchSchedule&)>& visit, double budget) {
  hyper.check();
  const double count = schedule_count(n, hyper, policy);
  if (count > budget) throw Error(ErrorKind::EnumerationTooLarge, "schedule count exceeds the budget");
  BatchSchedule s;
  s.policy = policy;
  if (policy == Policy::FullBatch) {
    visit(make_schedule(n, hyper, Policy::FullBatch, 0));
    return;
  }
  const bool disjoint = policy != Policy::WithReplacement;
  if (disjoint && static_cast<long>(hyper.k) * hyper.b > n)
    throw Error(ErrorKind::ScheduleInfeasible, "k*b exceeds n");
  std::vector<char> used(static_cast<size_t>(n), 0);
  s.batches.assign(static_cast<size_t>(hyper.k), Batch(static_cast<size_t>(hyper.b)));
  // choose batch t as an increasing b-subset of the indices still available
  std::function<void(int, int, int)> rec = [&](int t, int pos, int from) {
    if (t == hyper.k) {
      visit(s);
      return;
    }
    if (pos == hyper.b) {
      rec(t + 1, 0, 0);
      return;
    }
    for (int z = from; z < n; ++z) {
      if (disjoint && used[static_cast<size_t>(z)]) continue;
      s.batches[static_cast<size_t>(t)][static_cast<size_t>(pos)] = z;
      if (disjoint) used[static_cast<size_t>(z)] = 1;
      rec(t, pos + 1, z + 1);
      if (disjoint) used[static_cast<size_t>(z)] = 0;
    }
  };
  rec(0, 0, 0);
}

ExpectationEstimate exact_expected_deviation(const LossOracle& f, const Dataset& data, const Vec& theta0,
                                             const Hyperparams& hyper, Policy policy, double budget,
                                             GdReference ref) {
  const Vec gd = gd_endpoint(f, data, theta0, hyper, ref);
  ExpectationEstimate e;
  e.method = EstimateMethod::Enumeration;
  Vec sum = Vec::Zero(f.dim());
  long count = 0;
  for_each_schedule(
      data.n(), hyper, policy,
      [&](const BatchSchedule& s) {
        sum += run_epoch_endpoint(f, data, theta0, s, hyper) - gd;
        ++count;
      },
      budget);
  e.value = sum / static_cast<double>(count);
  e.samples = count;
  e.stderr_ = Mat::Zero(f.dim(), 1);
  return e;
}

ExpectationEstimate mc_expected_deviation(const LossOracle& f, const Dataset& data, const Vec& theta0,
                                          const Hyperparams& hyper, Policy policy, long samples,
                                          uint64_t seed, bool stratified, const NoiseSpec& noise,
                                          GdReference ref) {
  if (samples < 2) throw Error(ErrorKind::InvalidArgument, "samples must be >= 2");
  const Vec gd = gd_endpoint(f, data, theta0, hyper, ref);
  const int d = f.dim();
  Vec sum = Vec::Zero(d), sumsq = Vec::Zero(d);
  long count = 0;
  auto add = [&](const BatchSchedule& s) {
    Vec dev = run_epoch_endpoint(f, data, theta0, s, hyper, noise) - gd;
    sum += dev;
    sumsq += dev.cwiseProduct(dev);
    ++count;
  };
  if (stratified && policy != Policy::NoisedFullBatch &&
      schedule_count(data.n(), hyper, policy) == static_cast<double>(samples)) {
    for_each_schedule(data.n(), hyper, policy, add);
  } else {
    for (long i = 0; i < samples; ++i)
      add(make_schedule(data.n(), hyper, policy, derive_seed(seed, static_cast<uint64_t>(i))));
  }
  ExpectationEstimate e;
  e.method = EstimateMethod::MonteCarlo;
  e.samples = count;
  const double m = static_cast<double>(count);
  Vec mean = sum / m;
  Vec var = ((sumsq - m * mean.cwiseProduct(mean)) / (m - 1)).cwiseMax(0.0);
  e.value = mean;
  e.stderr_ = (var / m).cwiseSqrt();
  return e;
}

}  // namespace sgdwr
