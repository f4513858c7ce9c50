#include "pqpan/energy_model.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "builtin_data.hpp"
#include "csv.hpp"
#include "pqpan/errors.hpp"
#include "pqpan/kem_engine.hpp"

namespace pqpan {

namespace {

constexpr double kMicro = 1e6;

std::string upper(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_') c = '-';
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

LinkConfig with_cell(LinkConfig link, int att_mtu, int ll_pdu) {
  link.att_mtu = att_mtu;
  link.ll_pdu = ll_pdu;
  return link;
}

std::size_t artifact_size(const KemParamSet& scheme, TransferOp op) {
  switch (op) {
    case TransferOp::NotifyPk: return scheme.pk_size;
    case TransferOp::WriteCt: return scheme.ct_size();
    case TransferOp::Payload: break;
  }
  throw Error("reference rows carry only Notify_PK or Write_CT");
}

/// Energy per ampere of (I_tx, I_rx, I_ifs) for one reference row, in uJ/A.
Eigen::Vector3d row_coefficients(const ReferenceEnergyRow& row, const LinkConfig& link,
                                 double voltage_v, const SchemeCatalog& catalog) {
  const KemParamSet& scheme = catalog.lookup(row.scheme);
  const LinkConfig cfg = with_cell(link, row.att_mtu, row.ll_pdu);
  const TimeBudget t = airtime(plan_transfer(artifact_size(scheme, row.op), cfg), cfg);
  const double k = voltage_v * kMicro;
  // The peripheral sends the public key and receives the ciphertext.
  if (row.op == TransferOp::NotifyPk) {
    return {k * t.t_tx_s, k * t.t_rx_s, k * t.t_ifs_s};
  }
  return {k * t.t_rx_s, k * t.t_tx_s, k * t.t_ifs_s};
}

/// Minimises sum |W x - 1|^p by damped Newton steps from the least-squares
/// solution. The objective is strictly convex for p >= 2 and full-rank W.
Eigen::VectorXd minimise_lp(const Eigen::MatrixXd& w, Eigen::VectorXd x, int p) {
  if (p <= 2) return x;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.rows());
  const double pd = static_cast<double>(p);

  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd r = w * x - ones;
    const double scale = r.cwiseAbs().maxCoeff();
    if (scale < 1e-14) break;

    auto objective = [&](const Eigen::VectorXd& y) {
      return ((w * y - ones) / scale).cwiseAbs().array().pow(pd).sum();
    };
    const Eigen::ArrayXd u = (r / scale).array();
    const Eigen::ArrayXd mag = u.abs();
    const Eigen::VectorXd grad_terms = (mag.pow(pd - 1.0) * u.sign()).matrix();
    const Eigen::VectorXd curv = mag.pow(pd - 2.0).matrix();

    const Eigen::VectorXd g = w.transpose() * grad_terms;
    const Eigen::MatrixXd h = w.transpose() * curv.asDiagonal() * w;
    const Eigen::VectorXd step = -(scale / (pd - 1.0)) * h.ldlt().solve(g);
    if (!step.allFinite()) break;

    const double f0 = objective(x);
    double t = 1.0;
    while (t > 1e-12 && objective(x + t * step) >= f0) t *= 0.5;
    if (t <= 1e-12) break;
    x += t * step;
    if ((t * step).norm() <= 1e-15 * x.norm()) break;
  }
  return x;
}

SlotFit fit_one(const std::vector<ReferenceEnergyRow>& rows, const FitOptions& options,
                int slots, const SchemeCatalog& catalog) {
  LinkConfig link = options.link;
  link.ifs_slots = slots;
  link.validate();

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index k = options.include_ifs ? 3 : 2;
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    a.row(i) = row_coefficients(row, link, options.voltage_v, catalog).head(k).transpose();
    e(i) = row.e_theor_uj;
  }

  // Relative residuals: scale each equation by its reference energy.
  const Eigen::MatrixXd w = e.cwiseInverse().asDiagonal() * a;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
  qr.setThreshold(1e-9);
  if (n < k || qr.rank() < k) {
    throw SingularSystem("design matrix has rank " + std::to_string(qr.rank()) +
                         ", need " + std::to_string(k) + " independent rows");
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd x_ls = qr.solve(ones);
  const Eigen::VectorXd x = minimise_lp(w, x_ls, options.norm_exponent);

  SlotFit fit;
  fit.ifs_slots = slots;
  fit.i_tx_a = x(0);
  fit.i_rx_a = x(1);
  fit.i_ifs_a = options.include_ifs ? x(2) : 0.0;
  fit.least_squares_max_abs_rel_residual = (w * x_ls - ones).cwiseAbs().maxCoeff();

  const Eigen::VectorXd modeled = a * x;
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    RowResidual res;
    res.row = rows[static_cast<std::size_t>(i)];
    res.modeled_uj = modeled(i);
    res.rel_residual = (modeled(i) - e(i)) / e(i);
    fit.max_abs_rel_residual = std::max(fit.max_abs_rel_residual, std::abs(res.rel_residual));
    sum_sq += res.rel_residual * res.rel_residual;
    fit.residuals.push_back(std::move(res));
  }
  fit.rms_rel_residual = std::sqrt(sum_sq / static_cast<double>(n));
  return fit;
}

template <typename F>
double bisect_increasing(F&& g) {
  double lo = 0.0;
  if (g(lo) > 0.0) {
    throw Error("anchors unreachable: communication alone exceeds the target");
  }
  double hi = 1e-3;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e3) throw Error("anchors unreachable: no MCU current reaches the target");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void RadioProfile::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidProfile(std::string(what) + " must be positive");
    }
  };
  positive(voltage_v, "voltage");
  positive(i_tx_a, "i_tx");
  positive(i_rx_a, "i_rx");
  positive(i_ifs_a, "i_ifs");
  positive(i_mcu_a, "i_mcu");
  positive(f_mcu_hz, "f_mcu");
}

RadioProfile RadioProfile::fitted_default() {
  // Output of `pqpan fit` on the bundled reference table (p = 16 fit,
  // ifs_slots = 2, balanced MCU anchors). Regenerate with that command.
  RadioProfile p;
  p.voltage_v = 3.0;
  p.i_tx_a = 6.4393559972478e-3;
  p.i_rx_a = 6.132077256435339e-3;
  p.i_ifs_a = 3.0108727573543853e-3;
  p.i_mcu_a = 7.057313811115138e-3;
  p.f_mcu_hz = 64e6;
  return p;
}

CycleTable CycleTable::parse(std::string_view text) {
  auto records = csv::read(text);
  if (records.empty()) throw ParseError(1, 1, "empty cycle-count table");
  csv::expect_header(records.front(), {"scheme", "keygen", "encap", "decap"});
  CycleTable table;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    csv::expect_columns(rec, 4);
    CycleCounts c;
    c.keygen = csv::parse_number<std::uint64_t>(rec, 1);
    c.encap = csv::parse_number<std::uint64_t>(rec, 2);
    c.decap = csv::parse_number<std::uint64_t>(rec, 3);
    table.counts_[upper(rec.fields[0])] = c;
  }
  return table;
}

CycleTable CycleTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const CycleTable& CycleTable::builtin() {
  static const CycleTable table = parse(builtin::cycles_csv());
  return table;
}

const CycleCounts& CycleTable::at(std::string_view scheme) const {
  auto it = counts_.find(upper(scheme));
  if (it == counts_.end()) {
    throw UnsupportedScheme("no cycle counts for " + std::string(scheme));
  }
  return it->second;
}

bool CycleTable::contains(std::string_view scheme) const {
  return counts_.contains(upper(scheme));
}

void CycleTable::validate_monotone(const SchemeCatalog& catalog) const {
  const CycleCounts* prev = nullptr;
  std::string prev_name;
  for (const auto& s : catalog.ml_kem()) {
    if (!contains(s.name)) continue;
    const CycleCounts& cur = at(s.name);
    if (prev && !(cur.keygen > prev->keygen && cur.encap > prev->encap &&
                  cur.decap > prev->decap)) {
      throw ConsistencyError("cycle counts of " + s.name +
                             " do not exceed those of " + prev_name);
    }
    prev = &cur;
    prev_name = s.name;
  }
}

double comp_energy_uj(std::uint64_t cycles, const RadioProfile& profile) {
  profile.validate();
  return profile.i_mcu_a * profile.voltage_v * static_cast<double>(cycles) /
         profile.f_mcu_hz * kMicro;
}

double comm_energy_uj(const TimeBudget& budget, const RadioProfile& profile,
                      LinkRole role) {
  profile.validate();
  const double data_current = role == LinkRole::Sender ? profile.i_tx_a : profile.i_rx_a;
  const double ack_current = role == LinkRole::Sender ? profile.i_rx_a : profile.i_tx_a;
  return profile.voltage_v *
         (data_current * budget.t_tx_s + ack_current * budget.t_rx_s +
          profile.i_ifs_a * budget.t_ifs_s) *
         kMicro;
}

double transfer_energy_uj(std::size_t size, const LinkConfig& cfg,
                          const RadioProfile& profile, LinkRole role) {
  return comm_energy_uj(airtime(plan_transfer(size, cfg), cfg), profile, role);
}

EnergyBreakdown apply_calibration(const EnergyBreakdown& raw,
                                  const CalibrationFactors& gamma, int nist_level) {
  gamma.validate();
  EnergyBreakdown out = raw;
  out.nist_level = nist_level;
  out.adjusted.keygen = gamma.gamma_keygen(nist_level) * raw.raw.keygen;
  out.adjusted.decap = gamma.gamma_decap(nist_level) * raw.raw.decap;
  out.adjusted.notify_pk = gamma.comm * raw.raw.notify_pk;
  out.adjusted.write_ct = gamma.comm * raw.raw.write_ct;
  out.adjusted.encap = raw.raw.encap;
  out.e_total = out.adjusted.sum();
  out.comm_share = out.e_total > 0.0 ? out.adjusted.communication() / out.e_total : 0.0;
  return out;
}

EnergyBreakdown pqke_total(const KemParamSet& scheme, const LinkConfig& cfg,
                           const RadioProfile& profile, const CycleTable& cycles,
                           const CalibrationFactors& gamma,
                           const PqkeOptions& options) {
  if (!scheme.is_kem()) {
    throw UnsupportedScheme(scheme.name + " is a signature scheme; no KEM energy model");
  }
  if (!scheme.nist_level) {
    throw UnsupportedScheme(scheme.name + " has no post-quantum security level");
  }
  cfg.validate();
  profile.validate();
  const CycleCounts& c = cycles.at(scheme.name);

  EnergyBreakdown b;
  b.scheme = scheme.name;
  b.raw.keygen = comp_energy_uj(c.keygen, profile);
  b.raw.decap = comp_energy_uj(c.decap, profile);
  b.raw.notify_pk = transfer_energy_uj(scheme.pk_size, cfg, profile, LinkRole::Sender);
  b.raw.write_ct = transfer_energy_uj(scheme.ct_size(), cfg, profile, LinkRole::Receiver);
  if (options.include_encap) b.raw.encap = comp_energy_uj(c.encap, profile);
  return apply_calibration(b, gamma, *scheme.nist_level);
}

SessionEnergy session_energy(std::string_view security, std::size_t payload,
                             const LinkConfig& cfg, const RadioProfile& profile,
                             const CycleTable& cycles, const CalibrationFactors& gamma,
                             const SchemeCatalog& catalog) {
  const std::string key = upper(security);
  SessionEnergy out;
  if (key == "NONE") {
    if (payload > 0) {
      out.payload_uj = transfer_energy_uj(payload, cfg, profile, LinkRole::Sender);
    }
    return out;
  }
  if (key == "ECDH" || key == "ECDH-P256") {
    out.pairing_uj = kEcdhPairingUj;
  } else {
    out.pairing_uj = pqke_total(catalog.lookup(security), cfg, profile, cycles, gamma).e_total;
  }
  if (payload > 0) {
    out.payload_uj = transfer_energy_uj(aead_expanded_size(payload), cfg, profile,
                                        LinkRole::Sender);
  }
  return out;
}

RadioProfile FitReport::apply_to(RadioProfile base) const {
  base.voltage_v = voltage_v;
  base.i_tx_a = best.i_tx_a;
  base.i_rx_a = best.i_rx_a;
  base.i_ifs_a = best.i_ifs_a;
  return base;
}

std::string FitReport::to_json(const RadioProfile& profile) const {
  auto candidate_json = [](const SlotFit& f) {
    return nlohmann::json{
        {"ifs_slots", f.ifs_slots},
        {"i_tx_mA", f.i_tx_a * 1e3},
        {"i_rx_mA", f.i_rx_a * 1e3},
        {"i_ifs_mA", f.i_ifs_a * 1e3},
        {"max_abs_rel_residual", f.max_abs_rel_residual},
        {"rms_rel_residual", f.rms_rel_residual},
        {"least_squares_max_abs_rel_residual", f.least_squares_max_abs_rel_residual},
    };
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : best.residuals) {
    rows.push_back({{"scheme", r.row.scheme},
                    {"att_mtu", r.row.att_mtu},
                    {"ll_pdu", r.row.ll_pdu},
                    {"op", to_string(r.row.op)},
                    {"e_theor_uJ", r.row.e_theor_uj},
                    {"modeled_uJ", r.modeled_uj},
                    {"rel_residual", r.rel_residual}});
  }
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : this->candidates) candidates.push_back(candidate_json(c));

  nlohmann::json doc = {
      {"provenance", "fitted, not datasheet"},
      {"profile",
       {{"voltage", profile.voltage_v},
        {"i_tx", profile.i_tx_a},
        {"i_rx", profile.i_rx_a},
        {"i_ifs", profile.i_ifs_a},
        {"i_mcu", profile.i_mcu_a},
        {"f_mcu", profile.f_mcu_hz},
        {"ifs_slots", best.ifs_slots}}},
      {"ifs_slots", best.ifs_slots},
      {"slots_distinguishable", slots_distinguishable},
      {"max_abs_rel_residual", best.max_abs_rel_residual},
      {"candidates", std::move(candidates)},
      {"residuals", std::move(rows)},
  };
  return doc.dump(2);
}

FitReport fit_radio_currents(const std::vector<ReferenceEnergyRow>& rows,
                             const FitOptions& options, const SchemeCatalog& catalog) {
  if (options.norm_exponent < 2) throw InvalidConfig("norm exponent must be >= 2");
  std::vector<int> slots;
  if (options.ifs_slots) {
    slots.push_back(*options.ifs_slots);
  } else {
    slots = {1, 2};
  }

  FitReport report;
  report.voltage_v = options.voltage_v;
  for (int s : slots) report.candidates.push_back(fit_one(rows, options, s, catalog));

  // Lowest max residual wins; near-ties keep the configured slot count.
  auto tied = [](const SlotFit& a, const SlotFit& b) {
    return std::abs(a.max_abs_rel_residual - b.max_abs_rel_residual) <=
           1e-9 * std::max(a.max_abs_rel_residual, b.max_abs_rel_residual);
  };
  const SlotFit* best = &report.candidates.front();
  for (const auto& c : report.candidates) {
    if (tied(c, *best)) {
      if (c.ifs_slots == options.link.ifs_slots) best = &c;
    } else if (c.max_abs_rel_residual < best->max_abs_rel_residual) {
      best = &c;
    }
  }
  report.best = *best;
  for (const auto& c : report.candidates) {
    if (&c != best && tied(c, *best)) report.slots_distinguishable = false;
  }
  return report;
}

double model_reference_row(const ReferenceEnergyRow& row, const RadioProfile& profile,
                           const LinkConfig& link, const SchemeCatalog& catalog) {
  const KemParamSet& scheme = catalog.lookup(row.scheme);
  const LinkConfig cfg = with_cell(link, row.att_mtu, row.ll_pdu);
  const LinkRole role = row.op == TransferOp::NotifyPk ? LinkRole::Sender : LinkRole::Receiver;
  return transfer_energy_uj(artifact_size(scheme, row.op), cfg, profile, role);
}

GridExtremes grid_extremes(const std::vector<KemParamSet>& schemes,
                           const std::vector<LinkConfig>& grid,
                           const RadioProfile& profile, const CycleTable& cycles,
                           const CalibrationFactors& gamma) {
  GridExtremes out{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
  for (const auto& s : schemes) {
    for (const auto& cfg : grid) {
      const double total = pqke_total(s, cfg, profile, cycles, gamma).e_total;
      out.min_total_uj = std::min(out.min_total_uj, total);
      out.max_total_uj = std::max(out.max_total_uj, total);
    }
  }
  return out;
}

double solve_mcu_current(const std::vector<KemParamSet>& schemes,
                         const std::vector<LinkConfig>& grid, RadioProfile profile,
                         const CycleTable& cycles, const CalibrationFactors& gamma,
                         McuAnchorRule rule, const McuAnchors& anchors) {
  if (schemes.empty() || grid.empty()) throw InvalidConfig("empty scheme grid");
  auto extremes_at = [&](double i_mcu) {
    // Zero MCU current is not a valid profile; evaluate the limit instead.
    profile.i_mcu_a = std::max(i_mcu, 1e-15);
    return grid_extremes(schemes, grid, profile, cycles, gamma);
  };
  if (rule == McuAnchorRule::LowerEndpoint) {
    return bisect_increasing(
        [&](double i) { return extremes_at(i).min_total_uj - anchors.grid_min_uj; });
  }
  return bisect_increasing([&](double i) {
    const GridExtremes x = extremes_at(i);
    return x.min_total_uj / anchors.grid_min_uj + x.max_total_uj / anchors.grid_max_uj - 2.0;
  });
}

}  // namespace pqpan
