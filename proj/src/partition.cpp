#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bdt/dpra.hpp"
#include "bdt/error.hpp"

namespace bdt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack when comparing a node bound against the incumbent; bounds and
// leaf values are summed in different orders.
constexpr double kPruneSlack = 1e-10;

bool over_budget(double used, double budget) {
  return used > budget + kEnergyTolerance * std::max(budget, 1e-12);
}

/// Per-device contribution of every partition point to the per-gateway time,
/// gateway energy, AP workload and AP inference energy.
struct DeviceTable {
  std::size_t device = 0;
  std::size_t gateway = 0;
  std::size_t ap = 0;
  std::vector<double> time;     // index l - 1
  std::vector<double> genergy;
  std::vector<double> work;
  std::vector<double> aenergy;
  double tmin = kInf, tmax = 0.0, gmin = kInf;
  double wmin = kInf, wmax = 0.0, amin = kInf;
  bool idle = false;  // zero arrivals: every l is equivalent
};

class PartitionModel {
 public:
  PartitionModel(const SlotProblem& problem, std::span<const double> fa,
                 std::span<const double> fbloc, const AuxQueues& queues,
                 double V, bool strict)
      : problem_(problem), fbloc_(fbloc.begin(), fbloc.end()), V_(V) {
    const Scenario& sc = problem.scenario();
    const Topology& topo = sc.topology;
    const std::size_t n_gw = topo.num_gateways();
    const std::size_t n_ap = topo.num_aps();
    if (fa.size() != n_gw || fbloc.size() != n_ap || queues.size() != n_ap) {
      throw InvalidSpecError("frequency/queue sizes do not match topology");
    }
    c_ = problem.reputation_params().quantile_factor();

    coef_.assign(n_ap, 0.0);
    if (problem.options().queue_incentive) {
      for (std::size_t j = 0; j < n_ap; ++j) {
        coef_[j] = queues.s[j] - queues.q[j];
      }
    }
    block_cost_.resize(n_ap);
    for (std::size_t j = 0; j < n_ap; ++j) {
      block_cost_[j] = sc.aps[j].switched_capacitance * fbloc_[j] *
                       fbloc_[j] * fbloc_[j];
    }

    tables_.resize(topo.num_devices());
    for (std::size_t n = 0; n < tables_.size(); ++n) {
      DeviceTable& d = tables_[n];
      const std::size_t m = topo.gateway_of_device(n);
      const GatewayParams& g = sc.gateways[m];
      const ApParams& ap = sc.ap_of_gateway(m);
      const ModelProfile& model = sc.model(n);
      const double data = problem.data(n);
      const double rate = problem.rate(m);
      const double local_t = 1.0 / (g.flops_per_cycle * g.frequency_hz);
      const double local_e =
          g.switched_capacitance * g.frequency_hz * g.frequency_hz /
          g.flops_per_cycle;
      const double remote_e =
          ap.switched_capacitance * fa[m] * fa[m] / ap.flops_per_cycle;
      d.device = n;
      d.gateway = m;
      d.ap = topo.ap_of_gateway(m);
      d.idle = data == 0.0;
      const std::size_t L = model.num_layers();
      d.time.resize(L);
      d.genergy.resize(L);
      d.work.resize(L);
      d.aenergy.resize(L);
      for (std::size_t l = 1; l <= L; ++l) {
        const double pre = data * model.prefix_flops(l);
        const double bits = data * model.output_bits(l);
        const double suf = data * model.suffix_flops(l);
        double off_t = 0.0;
        if (bits > 0.0) off_t = rate > 0.0 ? bits / rate : kInf;
        double ap_t = 0.0;
        if (suf > 0.0) {
          ap_t = fa[m] > 0.0 ? suf / (ap.flops_per_cycle * fa[m]) : kInf;
        }
        d.time[l - 1] = pre * local_t + off_t + ap_t;
        d.genergy[l - 1] = pre * local_e + g.transmit_power_w * off_t;
        d.work[l - 1] = suf;
        d.aenergy[l - 1] = remote_e * suf;
        d.tmin = std::min(d.tmin, d.time[l - 1]);
        d.tmax = std::max(d.tmax, d.time[l - 1]);
        d.gmin = std::min(d.gmin, d.genergy[l - 1]);
        d.wmin = std::min(d.wmin, suf);
        d.wmax = std::max(d.wmax, suf);
        d.amin = std::min(d.amin, d.aenergy[l - 1]);
      }
    }

    // gateway energy budgets; a gateway that cannot meet its arrival at any partition is
    // held to its minimal achievable energy instead (lenient mode).
    gateway_budget_.resize(n_gw);
    relaxed_.assign(n_gw, false);
    for (std::size_t m = 0; m < n_gw; ++m) {
      double least = 0.0;
      for (std::size_t n : topo.devices_of_gateway(m)) least += tables_[n].gmin;
      const double arrival = problem.gateway_energy_budget(m);
      if (over_budget(least, arrival)) {
        if (strict) {
          throw InfeasibleSlotError(
              "gateway " + std::to_string(m) +
                  " exceeds its energy arrival at every partition point",
              problem.realization().t);
        }
        relaxed_[m] = true;
        gateway_budget_[m] = least;
      } else {
        gateway_budget_[m] = arrival;
      }
    }
  }

  const SlotProblem& problem() const { return problem_; }
  const DeviceTable& table(std::size_t n) const { return tables_[n]; }
  std::size_t num_devices() const { return tables_.size(); }
  double V() const { return V_; }
  double quantile() const { return c_; }
  double coef(std::size_t j) const { return coef_[j]; }
  double block_cost(std::size_t j) const { return block_cost_[j]; }
  double fbloc(std::size_t j) const { return fbloc_[j]; }
  double gateway_budget(std::size_t m) const { return gateway_budget_[m]; }
  const std::vector<bool>& relaxed() const { return relaxed_; }

  double rate_weight(double offloaded) const {
    return 1.0 / problem_.difficulty_for(problem_.reputation_params().g(offloaded));
  }

  struct Canonical {
    double value = kInf;
    std::size_t argmax = 0;
    bool c4 = true;
    bool c5 = true;
  };

  /// The single evaluation path used by both the search and the oracle.
  Canonical evaluate(std::span<const std::size_t> l) const {
    const Topology& topo = problem_.scenario().topology;
    Canonical out;
    double makespan = -1.0;
    for (std::size_t m = 0; m < topo.num_gateways(); ++m) {
      double t = 0.0;
      double e = 0.0;
      for (std::size_t n : topo.devices_of_gateway(m)) {
        t += tables_[n].time[l[n] - 1];
        e += tables_[n].genergy[l[n] - 1];
      }
      if (t > makespan) {
        makespan = t;
        out.argmax = m;
      }
      if (over_budget(e, gateway_budget_[m])) out.c4 = false;
    }
    const std::size_t n_ap = topo.num_aps();
    double rate = 0.0;
    double queue = 0.0;
    std::vector<double> inference(n_ap, 0.0);
    for (std::size_t j = 0; j < n_ap; ++j) {
      double o = 0.0;
      for (std::size_t m : topo.gateways_of_ap(j)) {
        for (std::size_t n : topo.devices_of_gateway(m)) {
          o += tables_[n].work[l[n] - 1];
          inference[j] += tables_[n].aenergy[l[n] - 1];
        }
      }
      rate += fbloc_[j] * rate_weight(o);
      queue += coef_[j] * problem_.reputation_params().g(o);
    }
    const double tau = c_ / rate;
    for (std::size_t j = 0; j < n_ap; ++j) {
      if (over_budget(inference[j] + block_cost_[j] * tau,
                      problem_.ap_energy_budget(j))) {
        out.c5 = false;
      }
    }
    out.value = V_ * (makespan + tau) + queue;
    return out;
  }

 private:
  const SlotProblem& problem_;
  std::vector<double> fbloc_;
  double V_;
  double c_ = 0.0;
  std::vector<double> coef_;
  std::vector<double> block_cost_;
  std::vector<DeviceTable> tables_;
  std::vector<double> gateway_budget_;
  std::vector<bool> relaxed_;
};

class BranchAndBound {
 public:
  BranchAndBound(const PartitionModel& model, bool check_c5,
                 std::size_t max_nodes)
      : model_(model), check_c5_(check_c5), max_nodes_(max_nodes) {
    const Topology& topo = model.problem().scenario().topology;
    n_gw_ = topo.num_gateways();
    n_ap_ = topo.num_aps();
    const std::size_t N = model.num_devices();

    // Large movers first; idle devices are pinned to l = 1.
    for (std::size_t n = 0; n < N; ++n) {
      if (!model.table(n).idle) order_.push_back(n);
    }
    std::vector<double> load(N);
    for (std::size_t n = 0; n < N; ++n) {
      load[n] = model.problem().data(n) *
                model.problem().scenario().model(n).total_flops();
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) {
                       return load[x] > load[y];
                     });

    const std::size_t K = order_.size();
    rem_tmin_.assign((K + 1) * n_gw_, 0.0);
    rem_tmax_.assign((K + 1) * n_gw_, 0.0);
    rem_gmin_.assign((K + 1) * n_gw_, 0.0);
    rem_omin_.assign((K + 1) * n_ap_, 0.0);
    rem_omax_.assign((K + 1) * n_ap_, 0.0);
    rem_amin_.assign((K + 1) * n_ap_, 0.0);
    rem_wmax_gw_.assign((K + 1) * n_gw_, 0.0);
    for (std::size_t k = K; k-- > 0;) {
      std::copy_n(&rem_tmin_[(k + 1) * n_gw_], n_gw_, &rem_tmin_[k * n_gw_]);
      std::copy_n(&rem_tmax_[(k + 1) * n_gw_], n_gw_, &rem_tmax_[k * n_gw_]);
      std::copy_n(&rem_gmin_[(k + 1) * n_gw_], n_gw_, &rem_gmin_[k * n_gw_]);
      std::copy_n(&rem_omin_[(k + 1) * n_ap_], n_ap_, &rem_omin_[k * n_ap_]);
      std::copy_n(&rem_omax_[(k + 1) * n_ap_], n_ap_, &rem_omax_[k * n_ap_]);
      std::copy_n(&rem_amin_[(k + 1) * n_ap_], n_ap_, &rem_amin_[k * n_ap_]);
      std::copy_n(&rem_wmax_gw_[(k + 1) * n_gw_], n_gw_,
                  &rem_wmax_gw_[k * n_gw_]);
      const DeviceTable& d = model.table(order_[k]);
      rem_wmax_gw_[k * n_gw_ + d.gateway] += d.wmax;
      rem_tmin_[k * n_gw_ + d.gateway] += d.tmin;
      rem_tmax_[k * n_gw_ + d.gateway] += d.tmax;
      rem_gmin_[k * n_gw_ + d.gateway] += d.gmin;
      rem_omin_[k * n_ap_ + d.ap] += d.wmin;
      rem_omax_[k * n_ap_ + d.ap] += d.wmax;
      rem_amin_[k * n_ap_ + d.ap] += d.amin;
    }

    build_suffix_tables();

    // Idle devices contribute nothing, so the fixed sums start at zero.
    current_.assign(N, 1);
    fixed_count_.assign(n_gw_, 0);
    tfix_.assign(n_gw_, 0.0);
    gfix_.assign(n_gw_, 0.0);
    ofix_.assign(n_ap_, 0.0);
    afix_.assign(n_ap_, 0.0);
  }

  void seed(std::span<const std::size_t> l, double value) {
    best_.assign(l.begin(), l.end());
    best_value_ = value;
  }

  void run_case(std::size_t i) {
    case_ = i;
    search(0);
  }

  bool found() const { return !best_.empty(); }
  const std::vector<std::size_t>& best() const { return best_; }
  double best_value() const { return best_value_; }
  std::size_t nodes() const { return nodes_; }
  bool truncated() const { return truncated_; }

 private:
  /// All joint choices of the still-free devices of one gateway, sorted by
  /// gateway energy, with running max of AP work and running min of time.
  struct SuffixTable {
    bool valid = false;
    std::vector<double> energy;
    std::vector<double> max_work;
    std::vector<double> min_time;
  };

  static constexpr std::size_t kMaxSuffixCombos = 1 << 16;

  void build_suffix_tables() {
    const Topology& topo = model_.problem().scenario().topology;
    std::vector<std::size_t> position(model_.num_devices(), order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) position[order_[k]] = k;
    suffix_.assign(n_gw_, {});
    for (std::size_t m = 0; m < n_gw_; ++m) {
      std::vector<std::size_t> devs;
      for (std::size_t n : topo.devices_of_gateway(m)) {
        if (position[n] < order_.size()) devs.push_back(n);
      }
      std::sort(devs.begin(), devs.end(), [&](std::size_t x, std::size_t y) {
        return position[x] < position[y];
      });
      auto& tables = suffix_[m];
      tables.resize(devs.size() + 1);
      struct Combo {
        double e, w, t;
      };
      std::vector<Combo> combos{{0.0, 0.0, 0.0}};
      bool ok = true;
      for (std::size_t s = devs.size() + 1; s-- > 0;) {
        if (s < devs.size()) {
          const DeviceTable& d = model_.table(devs[s]);
          if (combos.size() * d.time.size() > kMaxSuffixCombos) ok = false;
          if (!ok) break;
          std::vector<Combo> next;
          next.reserve(combos.size() * d.time.size());
          for (std::size_t l = 0; l < d.time.size(); ++l) {
            if (!std::isfinite(d.time[l]) || !std::isfinite(d.genergy[l])) {
              continue;
            }
            for (const Combo& c : combos) {
              next.push_back({c.e + d.genergy[l], c.w + d.work[l],
                              c.t + d.time[l]});
            }
          }
          combos = std::move(next);
        }
        std::sort(combos.begin(), combos.end(),
                  [](const Combo& a, const Combo& b) { return a.e < b.e; });
        SuffixTable& tab = tables[s];
        tab.valid = true;
        tab.energy.reserve(combos.size());
        double w = -kInf;
        double t = kInf;
        for (const Combo& c : combos) {
          w = std::max(w, c.w);
          t = std::min(t, c.t);
          tab.energy.push_back(c.e);
          tab.max_work.push_back(w);
          tab.min_time.push_back(t);
        }
      }
    }
  }

  bool better(double value, std::span<const std::size_t> l) const {
    if (best_.empty() || value < best_value_) return true;
    if (value > best_value_) return false;
    return std::lexicographical_compare(l.begin(), l.end(), best_.begin(),
                                        best_.end());
  }

  void leaf() {
    const auto res = model_.evaluate(current_);
    if (!res.c4 || (check_c5_ && !res.c5)) return;
    // C9: the case gateway must attain the makespan.
    const Topology& topo = model_.problem().scenario().topology;
    double ti = 0.0;
    for (std::size_t n : topo.devices_of_gateway(case_)) {
      ti += model_.table(n).time[current_[n] - 1];
    }
    for (std::size_t m = 0; m < n_gw_; ++m) {
      double t = 0.0;
      for (std::size_t n : topo.devices_of_gateway(m)) {
        t += model_.table(n).time[current_[n] - 1];
      }
      if (t > ti) return;
    }
    if (better(res.value, current_)) {
      best_ = current_;
      best_value_ = res.value;
    }
  }

  bool prune(std::size_t k) const {
    const double* tmin = &rem_tmin_[k * n_gw_];
    const double* tmax = &rem_tmax_[k * n_gw_];
    const double* gmin = &rem_gmin_[k * n_gw_];
    const double* omin = &rem_omin_[k * n_ap_];
    const double* omax = &rem_omax_[k * n_ap_];
    const double* amin = &rem_amin_[k * n_ap_];
    const double ti_hi = tfix_[case_] + tmax[case_];
    double makespan = 0.0;
    std::vector<double>& hi = scratch_hi_;
    hi.assign(n_ap_, 0.0);
    for (std::size_t j = 0; j < n_ap_; ++j) hi[j] = ofix_[j];
    for (std::size_t m = 0; m < n_gw_; ++m) {
      const std::size_t j = model_.problem().scenario().topology.ap_of_gateway(m);
      const double budget = model_.gateway_budget(m);
      const SuffixTable& tab = suffix_[m][fixed_count_[m]];
      double time_lo = tmin[m];
      if (tab.valid) {
        const double allow = budget + kEnergyTolerance * std::max(budget, 1e-12) -
                             gfix_[m] + 1e-12 * std::max(budget, 1e-300);
        const auto idx = static_cast<std::size_t>(
            std::upper_bound(tab.energy.begin(), tab.energy.end(), allow) -
            tab.energy.begin());
        if (idx == 0) return true;  // gateway budget
        time_lo = tab.min_time[idx - 1];
        hi[j] += tab.max_work[idx - 1];
      } else {
        if (over_budget(gfix_[m] + gmin[m], budget)) return true;  // gateway budget
      }
      const double lo = tfix_[m] + time_lo;
      if (lo > ti_hi * (1.0 + kPruneSlack)) return true;  // C9
      makespan = std::max(makespan, lo);
    }
    const ReputationFunction& g = model_.problem().reputation_params().g;
    double rate = 0.0;
    double queue = 0.0;
    for (std::size_t j = 0; j < n_ap_; ++j) {
      const double lo = ofix_[j] + omin[j];
      const double up = std::min(hi[j] + open_work(j, k), ofix_[j] + omax[j]);
      rate += model_.fbloc(j) *
              std::max(model_.rate_weight(lo), model_.rate_weight(up));
      queue += std::min(model_.coef(j) * g(lo), model_.coef(j) * g(up));
    }
    const double tau = model_.quantile() / rate;
    if (check_c5_) {
      for (std::size_t j = 0; j < n_ap_; ++j) {
        if (over_budget(afix_[j] + amin[j] + model_.block_cost(j) * tau,
                        model_.problem().ap_energy_budget(j))) {
          return true;
        }
      }
    }
    if (best_.empty()) return false;
    const double bound = model_.V() * (makespan + tau) + queue;
    return bound > best_value_ + kPruneSlack * std::abs(best_value_);
  }

  /// Upper bound on the free work of AP j's gateways whose tables were not
  /// built.
  double open_work(std::size_t j, std::size_t k) const {
    double w = 0.0;
    for (std::size_t m : model_.problem().scenario().topology.gateways_of_ap(j)) {
      if (!suffix_[m][fixed_count_[m]].valid) w += rem_wmax_gw_[k * n_gw_ + m];
    }
    return w;
  }

  void search(std::size_t k) {
    if (truncated_) return;
    ++nodes_;
    if (max_nodes_ != 0 && nodes_ > max_nodes_) {
      truncated_ = true;
      return;
    }
    if (k == order_.size()) {
      leaf();
      return;
    }
    if (prune(k)) return;

    const std::size_t n = order_[k];
    const DeviceTable& d = model_.table(n);
    const double t0 = tfix_[d.gateway];
    const double g0 = gfix_[d.gateway];
    const double o0 = ofix_[d.ap];
    const double a0 = afix_[d.ap];
    const std::size_t count0 = fixed_count_[d.gateway];
    for (std::size_t l = d.time.size(); l >= 1; --l) {
      if (!std::isfinite(d.time[l - 1]) || !std::isfinite(d.genergy[l - 1])) {
        continue;
      }
      current_[n] = l;
      fixed_count_[d.gateway] = count0 + 1;
      tfix_[d.gateway] = t0 + d.time[l - 1];
      gfix_[d.gateway] = g0 + d.genergy[l - 1];
      ofix_[d.ap] = o0 + d.work[l - 1];
      afix_[d.ap] = a0 + d.aenergy[l - 1];
      search(k + 1);
    }
    current_[n] = 1;
    fixed_count_[d.gateway] = count0;
    tfix_[d.gateway] = t0;
    gfix_[d.gateway] = g0;
    ofix_[d.ap] = o0;
    afix_[d.ap] = a0;
  }

  const PartitionModel& model_;
  bool check_c5_;
  std::size_t max_nodes_;
  std::size_t n_gw_ = 0;
  std::size_t n_ap_ = 0;
  std::vector<std::size_t> order_;
  std::vector<double> rem_tmin_, rem_tmax_, rem_gmin_;
  std::vector<double> rem_omin_, rem_omax_, rem_amin_;
  std::vector<double> rem_wmax_gw_;
  std::vector<std::vector<SuffixTable>> suffix_;
  std::vector<std::size_t> fixed_count_;
  mutable std::vector<double> scratch_hi_;
  std::vector<std::size_t> current_;
  std::vector<double> tfix_, gfix_, ofix_, afix_;
  std::size_t case_ = 0;
  std::vector<std::size_t> best_;
  double best_value_ = kInf;
  std::size_t nodes_ = 0;
  bool truncated_ = false;
};

bool valid_partition(const SlotProblem& problem,
                     std::span<const std::size_t> l);

/// First-improvement coordinate descent over single devices, moving only
/// between points that satisfy the gateway budgets (and the AP budget when checked). Returns nothing if
/// no starting point is feasible.
std::optional<std::vector<std::size_t>> local_search(
    const PartitionModel& model, std::span<const std::size_t> hint,
    bool check_c5) {
  const SlotProblem& problem = model.problem();
  const Topology& topo = problem.scenario().topology;
  const std::size_t N = model.num_devices();
  const std::size_t n_gw = topo.num_gateways();
  const std::size_t n_ap = topo.num_aps();
  const ReputationFunction& g = problem.reputation_params().g;

  std::vector<std::size_t> l(N);
  std::vector<double> T(n_gw), G(n_gw), O(n_ap), A(n_ap);
  auto load = [&](std::span<const std::size_t> start) {
    l.assign(start.begin(), start.end());
    std::fill(T.begin(), T.end(), 0.0);
    std::fill(G.begin(), G.end(), 0.0);
    std::fill(O.begin(), O.end(), 0.0);
    std::fill(A.begin(), A.end(), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
      const DeviceTable& d = model.table(n);
      T[d.gateway] += d.time[l[n] - 1];
      G[d.gateway] += d.genergy[l[n] - 1];
      O[d.ap] += d.work[l[n] - 1];
      A[d.ap] += d.aenergy[l[n] - 1];
    }
  };
  auto value = [&]() {
    for (std::size_t m = 0; m < n_gw; ++m) {
      if (!std::isfinite(T[m]) || over_budget(G[m], model.gateway_budget(m))) {
        return kInf;
      }
    }
    double rate = 0.0;
    double queue = 0.0;
    for (std::size_t j = 0; j < n_ap; ++j) {
      rate += model.fbloc(j) * model.rate_weight(O[j]);
      queue += model.coef(j) * g(O[j]);
    }
    const double tau = model.quantile() / rate;
    if (check_c5) {
      for (std::size_t j = 0; j < n_ap; ++j) {
        if (over_budget(A[j] + model.block_cost(j) * tau,
                        problem.ap_energy_budget(j))) {
          return kInf;
        }
      }
    }
    return model.V() * (*std::max_element(T.begin(), T.end()) + tau) + queue;
  };

  std::vector<std::vector<std::size_t>> starts;
  if (valid_partition(problem, hint)) starts.emplace_back(hint.begin(), hint.end());
  std::vector<std::size_t> frugal(N);
  std::vector<std::size_t> local(N);
  for (std::size_t n = 0; n < N; ++n) {
    const DeviceTable& d = model.table(n);
    frugal[n] = static_cast<std::size_t>(
                    std::min_element(d.genergy.begin(), d.genergy.end()) -
                    d.genergy.begin()) +
                1;
    local[n] = d.time.size();
  }
  starts.push_back(frugal);
  starts.push_back(local);

  double current = kInf;
  for (const auto& start : starts) {
    load(start);
    current = value();
    if (std::isfinite(current)) break;
  }
  if (!std::isfinite(current)) return std::nullopt;

  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool improved = false;
    for (std::size_t n = 0; n < N; ++n) {
      const DeviceTable& d = model.table(n);
      if (d.idle) continue;
      const std::size_t old = l[n];
      std::size_t best_l = old;
      double best_v = current;
      for (std::size_t cand = 1; cand <= d.time.size(); ++cand) {
        if (cand == old) continue;
        T[d.gateway] += d.time[cand - 1] - d.time[old - 1];
        G[d.gateway] += d.genergy[cand - 1] - d.genergy[old - 1];
        O[d.ap] += d.work[cand - 1] - d.work[old - 1];
        A[d.ap] += d.aenergy[cand - 1] - d.aenergy[old - 1];
        const double v = value();
        T[d.gateway] -= d.time[cand - 1] - d.time[old - 1];
        G[d.gateway] -= d.genergy[cand - 1] - d.genergy[old - 1];
        O[d.ap] -= d.work[cand - 1] - d.work[old - 1];
        A[d.ap] -= d.aenergy[cand - 1] - d.aenergy[old - 1];
        if (v < best_v - 1e-13 * std::abs(best_v)) {
          best_v = v;
          best_l = cand;
        }
      }
      if (best_l != old) {
        l[n] = best_l;
        load(std::vector<std::size_t>(l));  // resum to avoid drift
        current = value();
        improved = true;
      }
    }
    if (!improved) break;
  }
  return l;
}

bool valid_partition(const SlotProblem& problem,
                     std::span<const std::size_t> l) {
  if (l.size() != problem.num_devices()) return false;
  for (std::size_t n = 0; n < l.size(); ++n) {
    if (l[n] < 1 || l[n] > problem.scenario().model(n).num_layers()) {
      return false;
    }
  }
  return true;
}

PartitionResult finish(const PartitionModel& model,
                       std::vector<std::size_t> best, double value,
                       std::size_t nodes, bool c5_relaxed, bool truncated) {
  PartitionResult out;
  out.case_index = model.evaluate(best).argmax;
  out.partition = std::move(best);
  out.objective = value;
  out.nodes = nodes;
  out.gateway_relaxed = model.relaxed();
  out.ap_energy_relaxed = c5_relaxed;
  out.truncated = truncated;
  return out;
}

}  // namespace

PartitionResult solve_partition(const SlotProblem& problem,
                                std::span<const double> ap_frequency,
                                std::span<const double> block_frequency,
                                const AuxQueues& queues, double V,
                                const PartitionOptions& options,
                                std::span<const std::size_t> hint) {
  const PartitionModel model(problem, ap_frequency, block_frequency, queues, V,
                             options.strict);
  std::size_t nodes = 0;
  for (bool check_c5 : {true, false}) {
    BranchAndBound bnb(model, check_c5, options.max_nodes);
    if (valid_partition(problem, hint)) {
      const auto res = model.evaluate(hint);
      if (res.c4 && (!check_c5 || res.c5)) bnb.seed(hint, res.value);
    }
    if (auto ls = local_search(model, hint, check_c5)) {
      const auto res = model.evaluate(*ls);
      if (res.c4 && (!check_c5 || res.c5) &&
          (!bnb.found() || res.value < bnb.best_value())) {
        bnb.seed(*ls, res.value);
      }
    }
    for (std::size_t i = 0; i < problem.num_gateways() && !bnb.truncated();
         ++i) {
      bnb.run_case(i);
    }
    nodes += bnb.nodes();
    if (bnb.found()) {
      return finish(model, bnb.best(), bnb.best_value(), nodes, !check_c5,
                    bnb.truncated());
    }
    if (options.strict) break;
  }
  throw InfeasibleSlotError("no partition satisfies the energy constraints",
                            problem.realization().t);
}

PartitionResult solve_partition_exhaustive(
    const SlotProblem& problem, std::span<const double> ap_frequency,
    std::span<const double> block_frequency, const AuxQueues& queues,
    double V, const PartitionOptions& options, std::size_t limit) {
  const std::size_t N = problem.num_devices();
  double domain = 1.0;
  for (std::size_t n = 0; n < N; ++n) {
    domain *= static_cast<double>(problem.scenario().model(n).num_layers());
  }
  if (domain > static_cast<double>(limit)) {
    throw OutOfRangeError("partition domain too large for enumeration");
  }
  const PartitionModel model(problem, ap_frequency, block_frequency, queues, V,
                             options.strict);
  std::size_t visited = 0;
  for (bool check_c5 : {true, false}) {
    std::vector<std::size_t> l(N, 1);
    std::vector<std::size_t> best;
    double best_value = kInf;
    while (true) {
      ++visited;
      const auto res = model.evaluate(l);
      if (res.c4 && (!check_c5 || res.c5) &&
          (best.empty() || res.value < best_value)) {
        best = l;
        best_value = res.value;
      }
      // odometer, last device fastest, so enumeration is lexicographic
      std::size_t k = N;
      while (k > 0) {
        --k;
        if (l[k] < problem.scenario().model(k).num_layers()) {
          ++l[k];
          break;
        }
        l[k] = 1;
        if (k == 0) {
          k = N + 1;
          break;
        }
      }
      if (k == N + 1 || N == 0) break;
    }
    if (!best.empty()) {
      return finish(model, std::move(best), best_value, visited, !check_c5,
                    false);
    }
    if (options.strict) break;
  }
  throw InfeasibleSlotError("no partition satisfies the energy constraints",
                            problem.realization().t);
}

std::optional<double> partition_objective(
    const SlotProblem& problem, std::span<const double> ap_frequency,
    std::span<const double> block_frequency, const AuxQueues& queues,
    double V, std::span<const std::size_t> partition) {
  const PartitionModel model(problem, ap_frequency, block_frequency, queues, V,
                             false);
  const auto res = model.evaluate(partition);
  if (!res.c4 || !res.c5) return std::nullopt;
  return res.value;
}

}  // namespace bdt
