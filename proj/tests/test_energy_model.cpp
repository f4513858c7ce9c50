#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pqpan/energy_model.hpp"
#include "pqpan/errors.hpp"

using namespace pqpan;

namespace {

LinkConfig link(int att, int ll, int slots = 2) {
  LinkConfig c;
  c.att_mtu = att;
  c.ll_pdu = ll;
  c.ifs_slots = slots;
  return c;
}

RadioProfile round_profile() {
  RadioProfile p;
  p.voltage_v = 3.0;
  p.i_tx_a = 5.3e-3;
  p.i_rx_a = 5.4e-3;
  p.i_ifs_a = 2.1e-3;
  p.i_mcu_a = 5e-3;
  return p;
}

// Theoretical rows for every grid cell, generated from `p` by the oracle.
std::vector<ReferenceEnergyRow> synthetic_rows(const RadioProfile& p, int slots) {
  std::vector<ReferenceEnergyRow> rows;
  for (const auto& s : SchemeCatalog::builtin().ml_kem()) {
    for (const auto& g : LinkConfig::measurement_grid()) {
      for (TransferOp op : {TransferOp::NotifyPk, TransferOp::WriteCt}) {
        const bool notify = op == TransferOp::NotifyPk;
        const double e = oracle::sender_energy_uj(notify ? s.pk_size : s.ct_size(), g.att_mtu,
                                                  g.ll_pdu, p.voltage_v, p.i_tx_a, p.i_rx_a,
                                                  p.i_ifs_a, slots, !notify);
        rows.push_back({s.name, g.att_mtu, g.ll_pdu, op, e, e, 0.0});
      }
    }
  }
  return rows;
}

}  // namespace

TEST(CompEnergy, HandArithmetic) {
  RadioProfile p = round_profile();
  EXPECT_NEAR(comp_energy_uj(640'000, p), 150.0, 1e-9);
  EXPECT_EQ(comp_energy_uj(0, p), 0.0);
}

TEST(CommEnergy, ZeroBudget) {
  EXPECT_EQ(comm_energy_uj(TimeBudget{}, round_profile()), 0.0);
}

TEST(CommEnergy, ReceiverSwapsCurrents) {
  const RadioProfile p = round_profile();
  const TimeBudget t{1e-3, 2e-3, 3e-3};
  EXPECT_NEAR(comm_energy_uj(t, p), 3e6 * (5.3e-3 * 1e-3 + 5.4e-3 * 2e-3 + 2.1e-3 * 3e-3), 1e-9);
  EXPECT_NEAR(comm_energy_uj(t, p, LinkRole::Receiver),
              3e6 * (5.4e-3 * 1e-3 + 5.3e-3 * 2e-3 + 2.1e-3 * 3e-3), 1e-9);
}

TEST(CommEnergy, MatchesOracle) {
  const RadioProfile p = round_profile();
  for (int slots : {1, 2}) {
    for (const auto& g : LinkConfig::measurement_grid()) {
      const auto cfg = link(g.att_mtu, g.ll_pdu, slots);
      EXPECT_NEAR(transfer_energy_uj(1184, cfg, p, LinkRole::Sender),
                  oracle::sender_energy_uj(1184, g.att_mtu, g.ll_pdu, 3.0, 5.3e-3, 5.4e-3,
                                           2.1e-3, slots),
                  1e-9);
      EXPECT_NEAR(transfer_energy_uj(1088, cfg, p, LinkRole::Receiver),
                  oracle::sender_energy_uj(1088, g.att_mtu, g.ll_pdu, 3.0, 5.3e-3, 5.4e-3,
                                           2.1e-3, slots, true),
                  1e-9);
    }
  }
}

TEST(FittedProfile, PublishedTransferEnergies) {
  const RadioProfile p = RadioProfile::fitted_default();
  const auto& s = lookup_scheme("ML-KEM-512");
  EXPECT_NEAR(transfer_energy_uj(s.pk_size, link(65, 27), p, LinkRole::Sender), 362.63,
              0.02 * 362.63);
  EXPECT_NEAR(transfer_energy_uj(s.pk_size, link(404, 251), p, LinkRole::Sender), 146.46,
              0.02 * 146.46);
}

TEST(ApplyCalibration, IdentityLeavesRawAlone) {
  EnergyBreakdown b;
  b.raw = {100, 200, 300, 400, 0};
  const auto out = apply_calibration(b, CalibrationFactors::identity(), 3);
  EXPECT_DOUBLE_EQ(out.adjusted.keygen, 100);
  EXPECT_DOUBLE_EQ(out.adjusted.communication(), 700);
  EXPECT_DOUBLE_EQ(out.e_total, 1000);
  EXPECT_DOUBLE_EQ(out.comm_share, 0.7);
}

TEST(ApplyCalibration, NominalFactors) {
  EnergyBreakdown b;
  b.raw = {100, 0, 200, 0, 0};
  const auto out = apply_calibration(b, CalibrationFactors{}, 1);
  EXPECT_NEAR(out.adjusted.keygen, 127.0, 1e-9);
  EXPECT_NEAR(out.adjusted.notify_pk, 230.0, 1e-9);
}

TEST(PqkeTotal, ComposesParts) {
  const RadioProfile p = RadioProfile::fitted_default();
  const auto& cycles = CycleTable::builtin();
  const auto& s = lookup_scheme("ML-KEM-768");
  const auto cfg = link(404, 251);
  const auto b = pqke_total(s, cfg, p, cycles, CalibrationFactors{});
  const auto& c = cycles.at("ML-KEM-768");
  EXPECT_NEAR(b.raw.keygen, comp_energy_uj(c.keygen, p), 1e-9);
  EXPECT_NEAR(b.raw.decap, comp_energy_uj(c.decap, p), 1e-9);
  EXPECT_NEAR(b.raw.notify_pk, transfer_energy_uj(1184, cfg, p, LinkRole::Sender), 1e-9);
  EXPECT_NEAR(b.raw.write_ct, transfer_energy_uj(1088, cfg, p, LinkRole::Receiver), 1e-9);
  EXPECT_EQ(b.raw.encap, 0.0);
  EXPECT_NEAR(b.e_total, 1.38 * b.raw.keygen + 1.19 * b.raw.decap + 1.15 * b.raw.communication(),
              1e-9);
  EXPECT_NEAR(b.comm_share, b.adjusted.communication() / b.e_total, 1e-12);
}

TEST(PqkeTotal, Comm1024At204And208) {
  const auto b = pqke_total(lookup_scheme("ML-KEM-1024"), link(204, 208),
                            RadioProfile::fitted_default(), CycleTable::builtin(),
                            CalibrationFactors{});
  EXPECT_NEAR(b.raw.notify_pk, 293.46, 0.02 * 293.46);
  EXPECT_NEAR(b.raw.write_ct, 287.63, 0.02 * 287.63);
  EXPECT_NEAR(b.adjusted.communication(), 1.15 * b.raw.communication(), 1e-9);
}

TEST(PqkeTotal, EncapOptional) {
  const auto b = pqke_total(lookup_scheme("ML-KEM-512"), link(65, 27),
                            RadioProfile::fitted_default(), CycleTable::builtin(),
                            CalibrationFactors{}, {true});
  EXPECT_GT(b.raw.encap, 0.0);
  EXPECT_DOUBLE_EQ(b.adjusted.encap, b.raw.encap);
}

TEST(PqkeTotal, SignatureAndClassicalRejected) {
  const auto p = RadioProfile::fitted_default();
  EXPECT_THROW(pqke_total(lookup_scheme("ECDSA-P256"), link(65, 27), p, CycleTable::builtin(),
                          CalibrationFactors{}),
               UnsupportedScheme);
  EXPECT_THROW(pqke_total(lookup_scheme("ECDH-P256"), link(65, 27), p, CycleTable::builtin(),
                          CalibrationFactors{}),
               UnsupportedScheme);
}

TEST(SessionEnergy, EmptyCases) {
  const auto p = RadioProfile::fitted_default();
  const auto cfg = link(404, 251);
  EXPECT_EQ(session_energy("none", 0, cfg, p, CycleTable::builtin(), {}).total_uj(), 0.0);
  EXPECT_DOUBLE_EQ(session_energy("ECDH", 0, cfg, p, CycleTable::builtin(), {}).total_uj(), 328.0);
}

TEST(SessionEnergy, SecuredPayloadIsExpanded) {
  const auto p = RadioProfile::fitted_default();
  const auto cfg = link(404, 251);
  const auto e = session_energy("ECDH", 1024, cfg, p, CycleTable::builtin(), {});
  EXPECT_NEAR(e.payload_uj, transfer_energy_uj(1052, cfg, p, LinkRole::Sender), 1e-9);
  const auto plain = session_energy("none", 1024, cfg, p, CycleTable::builtin(), {});
  EXPECT_NEAR(plain.payload_uj, transfer_energy_uj(1024, cfg, p, LinkRole::Sender), 1e-9);
}

TEST(CycleTable, BuiltinIsMonotone) {
  EXPECT_NO_THROW(CycleTable::builtin().validate_monotone(SchemeCatalog::builtin()));
  EXPECT_THROW(CycleTable::builtin().at("HQC-128"), UnsupportedScheme);
}

TEST(CycleTable, NonMonotoneRejected) {
  const auto t = CycleTable::parse(
      "scheme,keygen,encap,decap\n"
      "ML-KEM-512,500,600,700\nML-KEM-768,400,700,800\nML-KEM-1024,900,1000,1100\n");
  EXPECT_THROW(t.validate_monotone(SchemeCatalog::builtin()), ConsistencyError);
}

TEST(Fit, RecoversSyntheticProfile) {
  const RadioProfile truth = round_profile();
  FitOptions opts;
  opts.ifs_slots = 2;
  const auto report = fit_radio_currents(synthetic_rows(truth, 2), opts);
  EXPECT_NEAR(report.best.i_tx_a / truth.i_tx_a, 1.0, 1e-6);
  EXPECT_NEAR(report.best.i_rx_a / truth.i_rx_a, 1.0, 1e-6);
  EXPECT_NEAR(report.best.i_ifs_a / truth.i_ifs_a, 1.0, 1e-6);
  EXPECT_LT(report.best.max_abs_rel_residual, 1e-9);
}

TEST(Fit, SlotCountsAreIndistinguishable) {
  const auto report = fit_radio_currents(synthetic_rows(round_profile(), 1));
  ASSERT_EQ(report.candidates.size(), 2u);
  EXPECT_FALSE(report.slots_distinguishable);
  EXPECT_EQ(report.best.ifs_slots, 2);
  const auto& one = report.candidates[0].ifs_slots == 1 ? report.candidates[0]
                                                        : report.candidates[1];
  EXPECT_NEAR(one.i_ifs_a, 2.1e-3, 1e-9);
  EXPECT_NEAR(report.best.i_ifs_a, 1.05e-3, 1e-9);
}

TEST(Fit, ReferenceTableWithinTwoPercent) {
  const auto report = fit_radio_currents(load_reference_table());
  EXPECT_LE(report.best.max_abs_rel_residual, 0.02);
  EXPECT_EQ(report.best.residuals.size(), kReferenceRowCount);
  EXPECT_GT(report.best.least_squares_max_abs_rel_residual, report.best.max_abs_rel_residual);
}

TEST(Fit, DroppingIfsIsWorse) {
  const auto rows = load_reference_table();
  FitOptions no_ifs;
  no_ifs.include_ifs = false;
  const auto without = fit_radio_currents(rows, no_ifs);
  const auto with = fit_radio_currents(rows);
  EXPECT_EQ(without.best.i_ifs_a, 0.0);
  EXPECT_GT(without.best.max_abs_rel_residual, with.best.max_abs_rel_residual);
  EXPECT_GT(without.best.rms_rel_residual, with.best.rms_rel_residual);
}

TEST(Fit, NotifyOnlyRowsAreSingular) {
  std::vector<ReferenceEnergyRow> notify;
  for (const auto& r : load_reference_table()) {
    if (r.op == TransferOp::NotifyPk) notify.push_back(r);
  }
  EXPECT_THROW(fit_radio_currents(notify), SingularSystem);
}

TEST(Fit, DefaultProfileIsTheFit) {
  const auto report = fit_radio_currents(load_reference_table());
  const auto p = RadioProfile::fitted_default();
  EXPECT_NEAR(report.best.i_tx_a, p.i_tx_a, 1e-9);
  EXPECT_NEAR(report.best.i_rx_a, p.i_rx_a, 1e-9);
  EXPECT_NEAR(report.best.i_ifs_a, p.i_ifs_a, 1e-9);
  std::vector<LinkConfig> grid = LinkConfig::measurement_grid();
  const double mcu = solve_mcu_current(SchemeCatalog::builtin().ml_kem(), grid, p,
                                       CycleTable::builtin(), CalibrationFactors{});
  EXPECT_NEAR(mcu, p.i_mcu_a, 1e-9);
}

TEST(McuCurrent, AnchorRules) {
  const auto schemes = SchemeCatalog::builtin().ml_kem();
  const auto grid = LinkConfig::measurement_grid();
  RadioProfile p = RadioProfile::fitted_default();
  const CalibrationFactors g;

  p.i_mcu_a = solve_mcu_current(schemes, grid, p, CycleTable::builtin(), g,
                                McuAnchorRule::LowerEndpoint);
  EXPECT_NEAR(grid_extremes(schemes, grid, p, CycleTable::builtin(), g).min_total_uj, 721.0,
              1e-6);

  p.i_mcu_a = solve_mcu_current(schemes, grid, p, CycleTable::builtin(), g);
  const auto ext = grid_extremes(schemes, grid, p, CycleTable::builtin(), g);
  EXPECT_NEAR(ext.min_total_uj / 721.0 - 1.0, -(ext.max_total_uj / 2633.0 - 1.0), 1e-6);
}
