#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pqpan/link_model.hpp"
#include "pqpan/reference_data.hpp"

namespace pqpan {

/// Supply and current draw of the device. Currents are in amperes.
struct RadioProfile {
  double voltage_v = 3.0;
  double i_tx_a = 0.0;
  double i_rx_a = 0.0;
  double i_ifs_a = 0.0;
  double i_mcu_a = 0.0;
  double f_mcu_hz = 64e6;

  /// Throws InvalidProfile unless every field is positive.
  void validate() const;

  /// Currents recovered from the reference table by fit_radio_currents and
  /// solve_mcu_current. Fitted values, not datasheet values.
  static RadioProfile fitted_default();
};

struct CycleCounts {
  std::uint64_t keygen = 0;
  std::uint64_t encap = 0;
  std::uint64_t decap = 0;
};

/// Per-scheme cycle counts loaded from a `scheme,keygen,encap,decap` CSV.
class CycleTable {
 public:
  static CycleTable parse(std::string_view csv);
  static CycleTable from_file(const std::filesystem::path& path);
  static const CycleTable& builtin();

  /// Throws UnsupportedScheme when the scheme has no entry.
  const CycleCounts& at(std::string_view scheme) const;
  bool contains(std::string_view scheme) const;

  /// Throws ConsistencyError unless each operation's count strictly increases
  /// with NIST level across the catalog's ML-KEM sets present in the table.
  void validate_monotone(const SchemeCatalog& catalog) const;

 private:
  std::map<std::string, CycleCounts> counts_;
};

/// Which end of a transfer the energy is charged to. The receiver of the data
/// frames listens to them and transmits the acknowledgements.
enum class LinkRole { Sender, Receiver };

/// I_mcu * V * cycles / f_mcu, in microjoules.
double comp_energy_uj(std::uint64_t cycles, const RadioProfile& profile);

/// V * (I_tx * t_tx + I_rx * t_rx + I_ifs * t_ifs) in microjoules, with the
/// Tx and Rx currents swapped for LinkRole::Receiver.
double comm_energy_uj(const TimeBudget& budget, const RadioProfile& profile,
                      LinkRole role = LinkRole::Sender);

/// comm_energy_uj of one artifact transfer under `cfg`.
double transfer_energy_uj(std::size_t artifact_size, const LinkConfig& cfg,
                          const RadioProfile& profile, LinkRole role);

struct EnergyComponents {
  double keygen = 0.0;
  double decap = 0.0;
  double notify_pk = 0.0;
  double write_ct = 0.0;
  double encap = 0.0;  // central side; zero unless requested

  double computation() const { return keygen + decap + encap; }
  double communication() const { return notify_pk + write_ct; }
  double sum() const { return computation() + communication(); }
};

/// Energies in microjoules.
struct EnergyBreakdown {
  std::string scheme;
  int nist_level = 0;
  EnergyComponents raw;
  EnergyComponents adjusted;
  double e_total = 0.0;
  double comm_share = 0.0;
};

/// Fills `adjusted`, `e_total` and `comm_share` from `raw`. Key generation and
/// decapsulation use the level's factors, both transfers use gamma_comm, and
/// encapsulation has no published factor so it is carried unadjusted.
EnergyBreakdown apply_calibration(const EnergyBreakdown& raw,
                                  const CalibrationFactors& gamma, int nist_level);

struct PqkeOptions {
  bool include_encap = false;
};

/// Peripheral-side key-establishment energy: keygen + decap + Notify of the
/// public key + reception of the ciphertext Write, calibrated.
EnergyBreakdown pqke_total(const KemParamSet& scheme, const LinkConfig& cfg,
                           const RadioProfile& profile, const CycleTable& cycles,
                           const CalibrationFactors& gamma,
                           const PqkeOptions& options = {});

/// Pairing energy of classical ECDH P-256 SMP pairing, treated as a constant.
inline constexpr double kEcdhPairingUj = 328.0;

struct SessionEnergy {
  double pairing_uj = 0.0;
  double payload_uj = 0.0;
  double total_uj() const { return pairing_uj + payload_uj; }
};

/// Key establishment plus one Notify payload transfer. `security` is "none",
/// "ECDH" (or "ECDH-P256") or an ML-KEM name. Secured payloads are expanded
/// by the AEAD size transform; a zero-byte payload sends nothing.
SessionEnergy session_energy(std::string_view security, std::size_t payload,
                             const LinkConfig& cfg, const RadioProfile& profile,
                             const CycleTable& cycles,
                             const CalibrationFactors& gamma,
                             const SchemeCatalog& catalog = SchemeCatalog::builtin());

// --- fitting ---------------------------------------------------------------

struct FitOptions {
  /// Try only this IFS slot count; both 1 and 2 when empty.
  std::optional<int> ifs_slots;
  /// Model the IFS term. When false i_ifs is pinned to zero.
  bool include_ifs = true;
  /// Exponent p of the minimised sum |relative residual|^p. p = 2 is plain
  /// relative least squares; larger p approaches the minimax fit.
  int norm_exponent = 16;
  /// Supplies voltage, PHY rate and IFS duration of the fitted model.
  LinkConfig link;
  double voltage_v = 3.0;
};

struct RowResidual {
  ReferenceEnergyRow row;
  double modeled_uj = 0.0;
  double rel_residual = 0.0;  // (modeled - reference) / reference
};

struct SlotFit {
  int ifs_slots = 2;
  double i_tx_a = 0.0;
  double i_rx_a = 0.0;
  double i_ifs_a = 0.0;
  double max_abs_rel_residual = 0.0;
  double rms_rel_residual = 0.0;
  /// Max residual of the plain least-squares starting point, for reference.
  double least_squares_max_abs_rel_residual = 0.0;
  std::vector<RowResidual> residuals;
};

struct FitReport {
  /// Chosen candidate; ties keep the slot count of FitOptions::link.
  SlotFit best;
  std::vector<SlotFit> candidates;
  double voltage_v = 3.0;
  bool slots_distinguishable = true;

  /// `base` with the fitted Tx, Rx and IFS currents.
  RadioProfile apply_to(RadioProfile base) const;
  std::string to_json(const RadioProfile& profile) const;
};

/// Recovers I_tx, I_rx, I_ifs from published theoretical transfer energies.
/// Notify rows charge the peripheral as sender, Write rows as receiver.
/// Throws SingularSystem if the design matrix is rank deficient.
FitReport fit_radio_currents(const std::vector<ReferenceEnergyRow>& rows,
                             const FitOptions& options = {},
                             const SchemeCatalog& catalog = SchemeCatalog::builtin());

/// Modelled raw transfer energy for one reference row under `profile`.
double model_reference_row(const ReferenceEnergyRow& row, const RadioProfile& profile,
                           const LinkConfig& link,
                           const SchemeCatalog& catalog = SchemeCatalog::builtin());

struct GridExtremes {
  double min_total_uj = 0.0;
  double max_total_uj = 0.0;
};

/// Smallest and largest pqke_total over the schemes x grid.
GridExtremes grid_extremes(const std::vector<KemParamSet>& schemes,
                           const std::vector<LinkConfig>& grid,
                           const RadioProfile& profile, const CycleTable& cycles,
                           const CalibrationFactors& gamma);

enum class McuAnchorRule {
  /// Grid minimum equals the lower anchor exactly.
  LowerEndpoint,
  /// Grid minimum and maximum miss their anchors by equal and opposite
  /// relative amounts.
  Balanced,
};

struct McuAnchors {
  double grid_min_uj = 721.0;
  double grid_max_uj = 2633.0;
};

/// Solves for the MCU current that places the pqke_total range of the grid on
/// the published endpoints. Only i_mcu of `profile` is ignored.
double solve_mcu_current(const std::vector<KemParamSet>& schemes,
                         const std::vector<LinkConfig>& grid, RadioProfile profile,
                         const CycleTable& cycles, const CalibrationFactors& gamma,
                         McuAnchorRule rule = McuAnchorRule::Balanced,
                         const McuAnchors& anchors = {});

}  // namespace pqpan
