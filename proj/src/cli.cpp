#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "csv.hpp"
#include "pqpan/config.hpp"
#include "pqpan/energy_model.hpp"
#include "pqpan/errors.hpp"
#include "pqpan/kem_engine.hpp"
#include "pqpan/link_model.hpp"
#include "pqpan/protocol_sim.hpp"
#include "pqpan/reference_data.hpp"

namespace pqpan::cli {

namespace {

using nlohmann::json;

/// Bad flag combination detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string rpad(const std::string& s, std::size_t width) {
  return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  if (!f) throw IoError("write failed for " + path);
}

json meta(std::string_view command) {
  return {{"tool", "pqpan"}, {"version", PQPAN_VERSION}, {"command", command}};
}

// --- shared flags -------------------------------------------------------

struct ModelFlags {
  std::string config;
  std::optional<int> ifs_slots;
  std::optional<double> gamma_comm;
  std::vector<double> gamma_keygen;
  std::vector<double> gamma_decap;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--config,--profile", f.config,
                  "Profile file (key = value or JSON); falls back to $PQPAN_PROFILE");
  cmd->add_option("--ifs-slots", f.ifs_slots, "IFS gaps per data/ack exchange")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--gamma-comm", f.gamma_comm, "Communication calibration factor")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gamma-keygen", f.gamma_keygen,
                  "Key generation factor: one value for all levels or three for 1,3,5")
      ->delimiter(',');
  cmd->add_option("--gamma-decap", f.gamma_decap,
                  "Decapsulation factor: one value for all levels or three for 1,3,5")
      ->delimiter(',');
}

std::array<double, 3> level_factors(const std::vector<double>& v, const char* flag) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw UsageError(std::string(flag) + " takes one or three values");
}

ModelConfig resolve(const ModelFlags& f) {
  std::optional<std::filesystem::path> path;
  if (!f.config.empty()) path = f.config;
  ModelConfig cfg = resolve_model_config(path);
  if (f.ifs_slots) cfg.ifs_slots = *f.ifs_slots;
  if (f.gamma_comm) cfg.gamma.comm = *f.gamma_comm;
  if (!f.gamma_keygen.empty()) cfg.gamma.keygen = level_factors(f.gamma_keygen, "--gamma-keygen");
  if (!f.gamma_decap.empty()) cfg.gamma.decap = level_factors(f.gamma_decap, "--gamma-decap");
  cfg.gamma.validate();
  return cfg;
}

struct LinkFlags {
  int att_mtu = 404;
  int ll_pdu = 251;
};

void add_link_flags(CLI::App* cmd, LinkFlags& f) {
  cmd->add_option("--att-mtu", f.att_mtu, "ATT MTU in bytes")
      ->capture_default_str()
      ->check(CLI::Range(kMinAttMtu, 65535));
  cmd->add_option("--ll-pdu", f.ll_pdu, "LL data PDU payload in bytes")
      ->capture_default_str()
      ->check(CLI::Range(kMinLlPdu, kMaxLlPdu));
}

LinkConfig make_link(int att, int ll, int slots) {
  LinkConfig c;
  c.att_mtu = att;
  c.ll_pdu = ll;
  c.ifs_slots = slots;
  c.validate();
  return c;
}

json components_json(const EnergyComponents& c, bool with_encap) {
  json j = {{"keygen_uJ", c.keygen},
            {"decap_uJ", c.decap},
            {"notify_pk_uJ", c.notify_pk},
            {"write_ct_uJ", c.write_ct}};
  if (with_encap) j["encap_uJ"] = c.encap;
  return j;
}

json breakdown_json(const EnergyBreakdown& b, const LinkConfig& link, bool with_encap) {
  return {{"scheme", b.scheme},
          {"nist_level", b.nist_level},
          {"att_mtu", link.att_mtu},
          {"ll_pdu", link.ll_pdu},
          {"ifs_slots", link.ifs_slots},
          {"raw", components_json(b.raw, with_encap)},
          {"adjusted", components_json(b.adjusted, with_encap)},
          {"total_uJ", b.e_total},
          {"comm_share", b.comm_share}};
}

// --- estimate -----------------------------------------------------------

struct EstimateArgs {
  std::string scheme;
  LinkFlags link;
  ModelFlags model;
  bool include_encap = false;
  std::string format = "text";
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const ModelConfig cfg = resolve(a.model);
  const KemParamSet& scheme = lookup_scheme(a.scheme);
  const LinkConfig link = make_link(a.link.att_mtu, a.link.ll_pdu, cfg.ifs_slots);
  const EnergyBreakdown b = pqke_total(scheme, link, cfg.profile, cfg.load_cycles(), cfg.gamma,
                                       {a.include_encap});

  if (a.format == "json") {
    json doc = breakdown_json(b, link, a.include_encap);
    doc["meta"] = meta("estimate");
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  out << b.scheme << "  level " << b.nist_level << "  ATT " << link.att_mtu << "  LL "
      << link.ll_pdu << "  ifs_slots " << link.ifs_slots << '\n';
  out << pad("component", 12) << rpad("raw_uJ", 12) << rpad("adjusted_uJ", 14) << '\n';
  auto line = [&](const char* name, double raw, double adj) {
    out << pad(name, 12) << rpad(fixed(raw), 12) << rpad(fixed(adj), 14) << '\n';
  };
  line("keygen", b.raw.keygen, b.adjusted.keygen);
  line("decap", b.raw.decap, b.adjusted.decap);
  if (a.include_encap) line("encap", b.raw.encap, b.adjusted.encap);
  line("notify_pk", b.raw.notify_pk, b.adjusted.notify_pk);
  line("write_ct", b.raw.write_ct, b.adjusted.write_ct);
  line("total", b.raw.sum(), b.e_total);
  out << pad("comm_share", 12) << rpad(fixed(b.comm_share, 4), 26) << '\n';
  return kExitOk;
}

// --- sweep --------------------------------------------------------------

struct SweepArgs {
  std::vector<std::string> schemes;
  std::vector<int> att_mtus;
  std::vector<int> ll_pdus;
  ModelFlags model;
  bool compare = false;
  bool totals = false;
  std::string reference;
  std::string format = "csv";
  std::string out;
};

struct SweepCell {
  KemParamSet scheme;
  LinkConfig link;
  EnergyBreakdown b;
};

std::vector<SweepCell> evaluate_grid(const SweepArgs& a, const ModelConfig& cfg) {
  std::vector<KemParamSet> schemes;
  if (a.schemes.empty()) {
    schemes = SchemeCatalog::builtin().ml_kem();
  } else {
    for (const auto& s : a.schemes) schemes.push_back(lookup_scheme(s));
  }

  std::vector<std::pair<int, int>> cells;
  if (a.att_mtus.empty() && a.ll_pdus.empty()) {
    for (const auto& c : LinkConfig::measurement_grid()) cells.emplace_back(c.att_mtu, c.ll_pdu);
  } else {
    const std::vector<int> atts = a.att_mtus.empty() ? std::vector<int>{65, 104, 204, 404}
                                                     : a.att_mtus;
    const std::vector<int> lls = a.ll_pdus.empty() ? std::vector<int>{27, 251} : a.ll_pdus;
    for (int att : atts)
      for (int ll : lls) cells.emplace_back(att, ll);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  const CycleTable cycles = cfg.load_cycles();
  std::vector<SweepCell> out;
  for (const auto& scheme : schemes) {
    for (auto [att, ll] : cells) {
      const LinkConfig link = make_link(att, ll, cfg.ifs_slots);
      out.push_back({scheme, link, pqke_total(scheme, link, cfg.profile, cycles, cfg.gamma)});
    }
  }
  return out;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  if (a.compare && a.totals) throw UsageError("--compare applies to per-transfer rows only");
  const ModelConfig cfg = resolve(a.model);
  const std::vector<SweepCell> cells = evaluate_grid(a, cfg);

  std::ostringstream body;
  if (a.totals) {
    json rows = json::array();
    if (a.format == "csv") {
      body << "scheme,nist_level,att_mtu,ll_pdu,keygen_uJ,decap_uJ,notify_pk_uJ,write_ct_uJ,"
              "total_uJ,comm_share\n";
    }
    for (const auto& c : cells) {
      const auto& adj = c.b.adjusted;
      if (a.format == "csv") {
        body << csv::quote(c.scheme.name) << ',' << c.b.nist_level << ',' << c.link.att_mtu
             << ',' << c.link.ll_pdu << ',' << fixed(adj.keygen) << ',' << fixed(adj.decap)
             << ',' << fixed(adj.notify_pk) << ',' << fixed(adj.write_ct) << ','
             << fixed(c.b.e_total) << ',' << fixed(c.b.comm_share, 4) << '\n';
      } else {
        rows.push_back(breakdown_json(c.b, c.link, false));
      }
    }
    if (a.format == "json") body << json{{"meta", meta("sweep")}, {"rows", rows}}.dump(2) << '\n';
  } else {
    using Key = std::tuple<std::string, int, int, TransferOp>;
    std::map<Key, ReferenceEnergyRow> ref;
    if (a.compare) {
      std::optional<std::filesystem::path> path;
      if (!a.reference.empty()) path = a.reference;
      for (const auto& r : load_reference_table(path)) {
        ref[{r.scheme, r.att_mtu, r.ll_pdu, r.op}] = r;
      }
    }
    if (a.format == "csv") {
      body << "scheme,att_mtu,ll_pdu,op,e_theor_uJ,e_emp_uJ,delta_pct";
      if (a.compare) body << ",ref_e_theor_uJ,rel_err_pct";
      body << '\n';
    }
    json rows = json::array();
    double worst = 0.0;
    std::size_t matched = 0;
    for (const auto& c : cells) {
      for (TransferOp op : {TransferOp::NotifyPk, TransferOp::WriteCt}) {
        const double e = op == TransferOp::NotifyPk ? c.b.raw.notify_pk : c.b.raw.write_ct;
        const auto it = ref.find({c.scheme.name, c.link.att_mtu, c.link.ll_pdu, op});
        const bool hit = it != ref.end();
        const double rel = hit ? (e - it->second.e_theor_uj) / it->second.e_theor_uj : 0.0;
        if (hit) {
          ++matched;
          worst = std::max(worst, std::abs(rel));
        }
        if (a.format == "csv") {
          body << csv::quote(c.scheme.name) << ',' << c.link.att_mtu << ',' << c.link.ll_pdu
               << ',' << to_string(op) << ',' << fixed(e) << ',';
          if (hit) body << fixed(it->second.e_emp_uj) << ',' << fixed(it->second.delta_pct);
          else body << ',';
          if (a.compare) {
            body << ',';
            if (hit) body << fixed(it->second.e_theor_uj) << ',' << fixed(100.0 * rel, 3);
            else body << ',';
          }
          body << '\n';
        } else {
          json row = {{"scheme", c.scheme.name},
                      {"att_mtu", c.link.att_mtu},
                      {"ll_pdu", c.link.ll_pdu},
                      {"op", to_string(op)},
                      {"e_theor_uJ", e}};
          if (hit) {
            row["e_emp_uJ"] = it->second.e_emp_uj;
            row["delta_pct"] = it->second.delta_pct;
            row["ref_e_theor_uJ"] = it->second.e_theor_uj;
            row["rel_err"] = rel;
          }
          rows.push_back(std::move(row));
        }
      }
    }
    if (a.format == "json") {
      json doc = {{"meta", meta("sweep")}, {"rows", rows}};
      if (a.compare) doc["max_abs_rel_err"] = worst;
      body << doc.dump(2) << '\n';
    }
    if (a.compare) {
      err << "compared " << matched << " rows against the reference table; max |rel err| "
          << fixed(100.0 * worst, 3) << "%\n";
    }
  }

  if (a.out.empty()) out << body.str();
  else write_file(a.out, body.str());
  return kExitOk;
}

// --- fit ----------------------------------------------------------------

struct FitArgs {
  std::string reference;
  std::optional<int> ifs_slots;
  int exponent = 16;
  std::string mcu_rule = "balanced";
  std::string config;
  std::string out;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  std::optional<std::filesystem::path> cfg_path;
  if (!a.config.empty()) cfg_path = a.config;
  const ModelConfig cfg = resolve_model_config(cfg_path);
  std::optional<std::filesystem::path> ref_path;
  if (!a.reference.empty()) ref_path = a.reference;
  const auto rows = load_reference_table(ref_path);

  FitOptions opts;
  opts.ifs_slots = a.ifs_slots;
  opts.norm_exponent = a.exponent;
  opts.voltage_v = cfg.profile.voltage_v;
  opts.link.ifs_slots = cfg.ifs_slots;
  const FitReport report = fit_radio_currents(rows, opts);

  RadioProfile profile = report.apply_to(cfg.profile);
  std::vector<LinkConfig> grid = LinkConfig::measurement_grid();
  for (auto& g : grid) g.ifs_slots = report.best.ifs_slots;
  const McuAnchorRule rule =
      a.mcu_rule == "lower-endpoint" ? McuAnchorRule::LowerEndpoint : McuAnchorRule::Balanced;
  const auto schemes = SchemeCatalog::builtin().ml_kem();
  const CycleTable cycles = cfg.load_cycles();
  profile.i_mcu_a = solve_mcu_current(schemes, grid, profile, cycles, cfg.gamma, rule);
  const GridExtremes ext = grid_extremes(schemes, grid, profile, cycles, cfg.gamma);

  json doc = json::parse(report.to_json(profile));
  doc["meta"] = meta("fit");
  doc["norm_exponent"] = a.exponent;
  doc["mcu_rule"] = a.mcu_rule;
  doc["grid_min_uJ"] = ext.min_total_uj;
  doc["grid_max_uJ"] = ext.max_total_uj;
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
    return kExitOk;
  }
  write_file(a.out, text);

  out << pad("ifs_slots", 11) << rpad("max|rel|%", 11) << rpad("rms%", 9) << rpad("i_tx_mA", 10)
      << rpad("i_rx_mA", 10) << rpad("i_ifs_mA", 10) << '\n';
  for (const auto& c : report.candidates) {
    out << pad(std::to_string(c.ifs_slots), 11) << rpad(fixed(100 * c.max_abs_rel_residual, 3), 11)
        << rpad(fixed(100 * c.rms_rel_residual, 3), 9) << rpad(fixed(1e3 * c.i_tx_a, 4), 10)
        << rpad(fixed(1e3 * c.i_rx_a, 4), 10) << rpad(fixed(1e3 * c.i_ifs_a, 4), 10) << '\n';
  }
  out << "chosen ifs_slots " << report.best.ifs_slots;
  if (!report.slots_distinguishable) {
    out << " (1 and 2 fit equally well: IFS time scales with frame count, so only i_ifs moves)";
  } else {
    out << " (smallest max residual)";
  }
  out << '\n';
  out << "i_mcu " << fixed(1e3 * profile.i_mcu_a, 4) << " mA (" << a.mcu_rule
      << " anchors); grid total " << fixed(ext.min_total_uj) << " .. "
      << fixed(ext.max_total_uj) << " uJ\n";
  out << "profile written to " << a.out << '\n';
  return kExitOk;
}

// --- simulate -----------------------------------------------------------

struct SimulateArgs {
  std::string scheme = "ML-KEM-512";
  std::uint64_t seed = 0;
  LinkFlags link;
  ModelFlags model;
  std::optional<std::size_t> payload;
  std::string trace;
  std::string ledger;
  std::string backend;
  std::string format = "text";
};

std::string phases(const PartyState& p) {
  std::string s;
  for (Phase ph : p.history) {
    if (!s.empty()) s += " -> ";
    s += to_string(ph);
  }
  return s;
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 0xF];
  }
  return s;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ModelConfig cfg = resolve(a.model);
  const auto backend = make_kem_backend(a.backend.empty() ? cfg.kem_backend : a.backend);

  SimulationInputs in;
  in.scheme = lookup_scheme(a.scheme);
  in.link = make_link(a.link.att_mtu, a.link.ll_pdu, cfg.ifs_slots);
  in.profile = cfg.profile;
  in.gamma = cfg.gamma;
  in.seed = a.seed;
  HandshakeResult res = run_handshake(in, cfg.load_cycles(), *backend);
  const bool keys_agree = res.peripheral.session_key == res.central.session_key;
  if (!keys_agree) throw HandshakeFailure("session keys differ");

  const std::size_t notify = res.trace.data_frame_count(TransferOp::NotifyPk);
  const std::size_t write = res.trace.data_frame_count(TransferOp::WriteCt);
  const double pairing = res.ledger.pqke_total_uj();

  std::optional<double> payload_uj;
  if (a.payload) {
    const Bytes body(*a.payload, 0);
    payload_uj = send_secured_payload(res, body, in.link, in.profile).energy_uj;
  }

  if (!a.trace.empty()) write_file(a.trace, res.trace.to_jsonl());
  if (!a.ledger.empty()) write_file(a.ledger, res.ledger.to_json() + "\n");

  const std::string key = hex(res.peripheral.session_key->key);
  if (a.format == "json") {
    json doc = {{"meta", meta("simulate")},
                {"scheme", in.scheme.name},
                {"seed", a.seed},
                {"att_mtu", in.link.att_mtu},
                {"ll_pdu", in.link.ll_pdu},
                {"data_frames", res.trace.data_frame_count()},
                {"acks", res.trace.ack_count()},
                {"session_keys_agree", keys_agree},
                {"session_key", key},
                {"pqke_total_uJ", pairing},
                {"end_time_us", res.end_time_s * 1e6}};
    if (payload_uj) {
      doc["payload_B"] = *a.payload;
      doc["payload_uJ"] = *payload_uj;
      doc["session_total_uJ"] = pairing + *payload_uj;
      doc["pairing_share"] = pairing / (pairing + *payload_uj);
    }
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  out << in.scheme.name << "  seed " << a.seed << "  ATT " << in.link.att_mtu << "  LL "
      << in.link.ll_pdu << '\n';
  out << "peripheral  " << phases(res.peripheral) << '\n';
  out << "central     " << phases(res.central) << '\n';
  out << "frames      " << res.trace.data_frame_count() << " data, " << res.trace.ack_count()
      << " acks (Notify_PK " << notify << ", Write_CT " << write;
  if (a.payload) out << ", Payload " << res.trace.data_frame_count(TransferOp::Payload);
  out << ")\n";
  out << "session key " << key << " (both parties)\n";
  out << "pqke_total  " << fixed(pairing) << " uJ\n";
  if (payload_uj) {
    const double total = pairing + *payload_uj;
    out << "payload     " << fixed(*payload_uj) << " uJ for " << *a.payload << " B\n";
    out << "session     " << fixed(total) << " uJ (pairing share " << fixed(pairing / total, 3)
        << ")\n";
  }
  return kExitOk;
}

// --- report -------------------------------------------------------------

struct ReportArgs {
  ModelFlags model;
  std::size_t payload = 1024;
  std::string format = "text";
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const ModelConfig cfg = resolve(a.model);
  const CycleTable cycles = cfg.load_cycles();
  const auto schemes = SchemeCatalog::builtin().ml_kem();
  std::vector<LinkConfig> grid = LinkConfig::measurement_grid();
  for (auto& g : grid) g.ifs_slots = cfg.ifs_slots;

  const GridExtremes ext = grid_extremes(schemes, grid, cfg.profile, cycles, cfg.gamma);

  json cells = json::array();
  json savings = json::array();
  for (const auto& s : schemes) {
    std::map<int, std::pair<double, double>> by_att;  // att -> (LL 27, DLE)
    for (const auto& g : grid) {
      const EnergyBreakdown b = pqke_total(s, g, cfg.profile, cycles, cfg.gamma);
      cells.push_back(breakdown_json(b, g, false));
      auto& slot = by_att[g.att_mtu];
      (g.ll_pdu == kMinLlPdu ? slot.first : slot.second) = b.e_total;
    }
    for (const auto& [att, pair] : by_att) {
      if (pair.first > 0 && pair.second > 0) {
        savings.push_back({{"scheme", s.name},
                           {"att_mtu", att},
                           {"saving", (pair.first - pair.second) / pair.first}});
      }
    }
  }

  json sessions = json::array();
  for (std::string_view sec : {"none", "ECDH", "ML-KEM-512", "ML-KEM-768", "ML-KEM-1024"}) {
    const LinkConfig link = make_link(404, 251, cfg.ifs_slots);
    const SessionEnergy e = session_energy(sec, a.payload, link, cfg.profile, cycles, cfg.gamma);
    sessions.push_back({{"security", sec},
                        {"pairing_uJ", e.pairing_uj},
                        {"payload_uJ", e.payload_uj},
                        {"total_uJ", e.total_uj()}});
  }

  if (a.format == "json") {
    json doc = {{"meta", meta("report")},
                {"grid_min_uJ", ext.min_total_uj},
                {"grid_max_uJ", ext.max_total_uj},
                {"ecdh_pairing_uJ", kEcdhPairingUj},
                {"ratio_to_ecdh", {ext.min_total_uj / kEcdhPairingUj, ext.max_total_uj / kEcdhPairingUj}},
                {"cells", cells},
                {"dle_savings", savings},
                {"sessions", sessions},
                {"session_payload_B", a.payload}};
    out << doc.dump(2) << '\n';
    return kExitOk;
  }

  out << "pqke_total over the grid: " << fixed(ext.min_total_uj) << " .. "
      << fixed(ext.max_total_uj) << " uJ (" << fixed(ext.min_total_uj / kEcdhPairingUj) << "x .. "
      << fixed(ext.max_total_uj / kEcdhPairingUj) << "x ECDH pairing at "
      << fixed(kEcdhPairingUj, 0) << " uJ)\n\n";
  out << pad("scheme", 13) << rpad("ATT", 5) << rpad("LL", 5) << rpad("total_uJ", 11)
      << rpad("comm_share", 12) << '\n';
  for (const auto& c : cells) {
    out << pad(c["scheme"].get<std::string>(), 13) << rpad(std::to_string(c["att_mtu"].get<int>()), 5)
        << rpad(std::to_string(c["ll_pdu"].get<int>()), 5)
        << rpad(fixed(c["total_uJ"].get<double>()), 11)
        << rpad(fixed(c["comm_share"].get<double>(), 3), 12) << '\n';
  }
  out << "\nDLE saving (LL 27 -> DLE) per ATT MTU\n";
  for (const auto& s : savings) {
    out << pad(s["scheme"].get<std::string>(), 13) << rpad(std::to_string(s["att_mtu"].get<int>()), 5)
        << rpad(fixed(100 * s["saving"].get<double>(), 1) + "%", 9) << '\n';
  }
  out << "\nsession energy with a " << a.payload << " B payload (ATT 404, LL 251)\n";
  for (const auto& s : sessions) {
    out << pad(s["security"].get<std::string>(), 13) << rpad(fixed(s["pairing_uJ"].get<double>()), 10)
        << " + " << rpad(fixed(s["payload_uJ"].get<double>()), 8) << " = "
        << rpad(fixed(s["total_uJ"].get<double>()), 9) << " uJ\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-quantum key establishment energy model for BLE links", "pqpan"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PQPAN_VERSION);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Energy breakdown for one scheme and link");
  estimate->add_option("--scheme", est.scheme, "KEM name, e.g. ML-KEM-768")->required();
  add_link_flags(estimate, est.link);
  add_model_flags(estimate, est.model);
  estimate->add_flag("--include-encap", est.include_encap, "Add the central's encapsulation");
  estimate->add_option("--format", est.format)->check(CLI::IsMember({"text", "json"}));

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Transfer energies over a grid of link settings");
  sweep->add_option("--schemes", sw.schemes, "Schemes (default: ML-KEM family)")->delimiter(',');
  sweep->add_option("--att-mtus", sw.att_mtus, "ATT MTU axis")
      ->delimiter(',')
      ->check(CLI::Range(kMinAttMtu, 65535));
  sweep->add_option("--ll-pdus", sw.ll_pdus, "LL PDU axis")
      ->delimiter(',')
      ->check(CLI::Range(kMinLlPdu, kMaxLlPdu));
  add_model_flags(sweep, sw.model);
  sweep->add_flag("--compare", sw.compare, "Join the reference table and report relative error");
  sweep->add_flag("--totals", sw.totals, "One calibrated total row per scheme and link");
  sweep->add_option("--reference", sw.reference, "Reference CSV for --compare");
  sweep->add_option("--format", sw.format)->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--out", sw.out, "Output file (default stdout)");

  FitArgs ft;
  auto* fit = app.add_subcommand("fit", "Fit radio currents to the reference transfer energies");
  fit->add_option("--reference", ft.reference, "Reference CSV (default: bundled table)");
  fit->add_option("--ifs-slots", ft.ifs_slots, "Fit only this slot count")
      ->check(CLI::IsMember({1, 2}));
  fit->add_option("--exponent", ft.exponent, "Residual norm exponent")
      ->capture_default_str()
      ->check(CLI::Range(2, 64));
  fit->add_option("--mcu-rule", ft.mcu_rule, "How i_mcu is anchored to the grid range")
      ->capture_default_str()
      ->check(CLI::IsMember({"balanced", "lower-endpoint"}));
  fit->add_option("--config,--profile", ft.config, "Base profile (voltage, f_mcu, gamma, cycles)");
  fit->add_option("--out", ft.out, "Write the fitted profile JSON here and print a summary");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the two-party handshake simulator");
  simulate->add_option("--scheme", sim.scheme)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  add_link_flags(simulate, sim.link);
  add_model_flags(simulate, sim.model);
  simulate->add_option("--payload", sim.payload, "Send an AEAD-protected payload of N bytes");
  simulate->add_option("--trace", sim.trace, "Write the frame trace (JSON lines)");
  simulate->add_option("--ledger", sim.ledger, "Write the energy ledger (JSON)");
  simulate->add_option("--backend", sim.backend, "KEM backend")
      ->check(CLI::IsMember({"stub", "real"}));
  simulate->add_option("--format", sim.format)->check(CLI::IsMember({"text", "json"}));

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Design-space summary over the measurement grid");
  add_model_flags(report, rep.model);
  report->add_option("--payload", rep.payload, "Session payload in bytes")->capture_default_str();
  report->add_option("--format", rep.format)->check(CLI::IsMember({"text", "json"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est, out);
    if (sweep->parsed()) return cmd_sweep(sw, out, err);
    if (fit->parsed()) return cmd_fit(ft, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (report->parsed()) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitModel;
  }
  return kExitUsage;
}

}  // namespace pqpan::cli
